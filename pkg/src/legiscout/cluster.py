"""Hierarchical grouping of entities into collapsible supernodes.

A ClusterTree is a forest over entity ids built from one of three
declarative strategies (entity type, tag presence, or an explicit grouping
file). Collapsing a cluster in a ViewGraph replaces its visible members
with one supernode, hides internal edges, and re-targets boundary edges to
the supernode, merging parallels that share (other endpoint, rel_type)
with summed weights.

A ViewGraph is a pure function of (base graph, set of collapsed cluster
ids): every collapse or expand rebuilds the visible graph by applying the
collapsed clusters in a canonical child-first order. That makes expand an
exact inverse of collapse under any interleaving, sibling collapses
commutative, and nested collapses well-defined (expanding a parent brings
back a still-collapsed child supernode untouched).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import (
    AlreadyCollapsed,
    InvalidGroupingFile,
    NotCollapsed,
    UnknownCluster,
)
from .graph import (
    SUPERNODE_PREFIX,
    Entity,
    LogGraph,
    Relationship,
    StyleHint,
    is_valid_id,
)

STRATEGIES = ("by_entity_type", "by_tag", "manual")


@dataclass(frozen=True)
class ClusterNode:
    cluster_id: str
    label: str
    children: tuple  # entity ids and/or nested cluster ids
    collapsed: bool = False


@dataclass(frozen=True)
class ClusterTree:
    nodes: dict  # cluster_id -> ClusterNode
    roots: tuple  # top-level cluster ids and ungrouped entity ids

    def leaf_entities(self) -> set:
        """All entity ids reachable as leaves."""
        out = set()
        for ref in self.roots:
            if ref in self.nodes:
                out |= self._leaves_of(ref)
            else:
                out.add(ref)
        return out

    def _leaves_of(self, cluster_id: str) -> set:
        out = set()
        for child in self.nodes[cluster_id].children:
            if child in self.nodes:
                out |= self._leaves_of(child)
            else:
                out.add(child)
        return out


@dataclass(frozen=True)
class CollapseDelta:
    cluster_id: str
    supernode_id: str
    removed_entities: tuple
    internal_relationships: tuple  # hidden entirely
    boundary_relationships: tuple  # replaced by aggregated edges
    added_relationship_ids: tuple


@dataclass(frozen=True)
class ViewGraph:
    graph: LogGraph
    supernode_map: dict = field(default_factory=dict)  # supernode id -> member entity ids
    deltas: dict = field(default_factory=dict)  # cluster_id -> CollapseDelta
    base: LogGraph | None = None  # pre-collapse graph the view is rebuilt from

    def hidden_edge_count(self) -> int:
        return sum(len(d.internal_relationships) for d in self.deltas.values())

    def total_weight(self) -> float:
        """Visible plus hidden edge weight; conserved across collapse/expand."""
        visible = sum(r.weight for r in self.graph.relationships.values())
        hidden = sum(
            r.weight for d in self.deltas.values() for r in d.internal_relationships
        )
        # Aggregated edges already carry the boundary weight, but aggregated
        # edges removed by an enclosing collapse are counted through that
        # enclosing delta, so only internal edges are added back here.
        return visible + hidden


def new_view(g: LogGraph) -> ViewGraph:
    return ViewGraph(graph=g, supernode_map={}, deltas={}, base=g)


# ── tree construction ──


def _free_cluster_id(base: str, g: LogGraph, used: set) -> str:
    cid = base
    while cid in g.entities or cid in used:
        cid += "-grp"
    used.add(cid)
    return cid


def build_cluster_tree(
    g: LogGraph,
    strategy: str,
    tag: str | None = None,
    grouping_path=None,
) -> ClusterTree:
    """Builds the grouping forest. `by_entity_type` makes one cluster per
    type present; `by_tag` clusters entities carrying the given tag and
    leaves the rest as singleton roots; `manual` reads a grouping file."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "by_entity_type":
        groups: dict = {}
        for eid in sorted(g.entities):
            groups.setdefault(g.entities[eid].entity_type, []).append(eid)
        nodes = {}
        used: set = set()
        roots = []
        for etype in sorted(groups):
            cid = _free_cluster_id(f"type-{etype}", g, used)
            nodes[cid] = ClusterNode(cid, etype, tuple(groups[etype]))
            roots.append(cid)
        return ClusterTree(nodes=nodes, roots=tuple(roots))
    if strategy == "by_tag":
        if not tag:
            raise ValueError("by_tag strategy needs a tag")
        tag = tag.strip().lower()
        tagged = sorted(eid for eid, e in g.entities.items() if tag in e.tags)
        rest = sorted(eid for eid in g.entities if eid not in set(tagged))
        nodes = {}
        roots = []
        if tagged:
            used = set()
            cid = _free_cluster_id(f"tag-{tag}", g, used)
            nodes[cid] = ClusterNode(cid, tag, tuple(tagged))
            roots.append(cid)
        roots.extend(rest)
        return ClusterTree(nodes=nodes, roots=tuple(roots))
    return _tree_from_grouping_file(g, grouping_path)


def _tree_from_grouping_file(g: LogGraph, path) -> ClusterTree:
    if path is None:
        raise InvalidGroupingFile("manual strategy needs a grouping file")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InvalidGroupingFile(f"cannot read grouping file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidGroupingFile(f"grouping file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidGroupingFile("grouping file must be a JSON object")

    member_owner: dict = {}
    children_of: dict = {cid: [] for cid in raw}
    parents: dict = {}
    for cid, spec_ in sorted(raw.items()):
        if not is_valid_id(cid):
            raise InvalidGroupingFile(f"bad cluster id {cid!r}")
        if cid in g.entities:
            raise InvalidGroupingFile(f"cluster id {cid!r} collides with an entity id")
        if not isinstance(spec_, dict):
            raise InvalidGroupingFile(f"cluster {cid!r} must be an object")
        members = spec_.get("members", [])
        if not isinstance(members, list):
            raise InvalidGroupingFile(f"cluster {cid!r} members must be a list")
        for m in members:
            if m not in g.entities:
                raise InvalidGroupingFile(f"cluster {cid!r} member {m!r} is not an entity")
            if m in member_owner:
                raise InvalidGroupingFile(
                    f"entity {m!r} appears in clusters {member_owner[m]!r} and {cid!r}"
                )
            member_owner[m] = cid
        parent = spec_.get("parent")
        if parent is not None:
            if parent not in raw:
                raise InvalidGroupingFile(f"cluster {cid!r} has unknown parent {parent!r}")
            parents[cid] = parent
            children_of[parent].append(cid)

    # Cycle check over parent links.
    for cid in raw:
        seen = {cid}
        cur = parents.get(cid)
        while cur is not None:
            if cur in seen:
                raise InvalidGroupingFile(f"parent cycle through {cur!r}")
            seen.add(cur)
            cur = parents.get(cur)

    nodes = {}
    for cid, spec_ in raw.items():
        members = sorted(spec_.get("members", []))
        kids = tuple(sorted(children_of[cid]) + members)
        if not kids:
            raise InvalidGroupingFile(f"cluster {cid!r} is empty")
        label = spec_.get("label", cid)
        nodes[cid] = ClusterNode(cid, str(label), kids)
    roots = sorted(cid for cid in raw if cid not in parents)
    ungrouped = sorted(eid for eid in g.entities if eid not in member_owner)
    return ClusterTree(nodes=nodes, roots=tuple(roots) + tuple(ungrouped))


def validate_tree(tree: ClusterTree, g: LogGraph) -> list:
    """Leaf-partition and shape problems, empty when the tree is sound."""
    problems = []
    seen: dict = {}

    def walk(ref, trail):
        if ref in tree.nodes:
            if ref in trail:
                problems.append(f"cycle through cluster {ref!r}")
                return
            node = tree.nodes[ref]
            if not node.children:
                problems.append(f"cluster {ref!r} has no children")
            for child in node.children:
                walk(child, trail | {ref})
        else:
            if ref not in g.entities:
                problems.append(f"leaf {ref!r} is not an entity")
            seen[ref] = seen.get(ref, 0) + 1

    for ref in tree.roots:
        walk(ref, set())
    for eid in g.entities:
        count = seen.get(eid, 0)
        if count == 0:
            problems.append(f"entity {eid!r} missing from the tree")
        elif count > 1:
            problems.append(f"entity {eid!r} appears in {count} leaves")
    return problems


def tree_to_dict(tree: ClusterTree) -> dict:
    return {
        "roots": list(tree.roots),
        "nodes": {
            cid: {
                "cluster_id": node.cluster_id,
                "label": node.label,
                "children": list(node.children),
                "collapsed": node.collapsed,
            }
            for cid, node in sorted(tree.nodes.items())
        },
    }


# ── collapse / expand ──


def supernode_id(cluster_id: str) -> str:
    return SUPERNODE_PREFIX + cluster_id


def _visible_members(view: ViewGraph, tree: ClusterTree, cluster_id: str) -> set:
    """Graph ids currently standing in for the cluster's leaves: plain
    entities, or the supernodes of collapsed descendants."""
    out = set()
    for child in tree.nodes[cluster_id].children:
        if child in tree.nodes:
            if child in view.deltas:
                sn = supernode_id(child)
                if sn in view.graph.entities:
                    out.add(sn)
            else:
                out |= _visible_members(view, tree, child)
        elif child in view.graph.entities:
            out.add(child)
    return out


def _aggregate_id(sn: str, other: str, rel_type: str) -> str:
    digest = hashlib.sha1(f"{sn}|{other}|{rel_type}".encode("utf-8")).hexdigest()
    return f"agg-{digest[:12]}"


def _cluster_depths(tree: ClusterTree) -> dict:
    depths: dict = {}

    def walk(ref, d):
        if ref in tree.nodes:
            depths[ref] = d
            for child in tree.nodes[ref].children:
                walk(child, d + 1)

    for ref in tree.roots:
        walk(ref, 0)
    return depths


def _rebuild(base: LogGraph, tree: ClusterTree, collapsed_ids) -> ViewGraph:
    """The view for a given collapsed set: single-cluster collapse steps
    applied deepest-first (so child supernodes exist before a parent
    absorbs them), ties broken by cluster id."""
    depths = _cluster_depths(tree)
    view = ViewGraph(graph=base, supernode_map={}, deltas={}, base=base)
    for cid in sorted(collapsed_ids, key=lambda c: (-depths.get(c, 0), c)):
        view = _apply_collapse(view, tree, cid)
    return view


def _apply_collapse(view: ViewGraph, tree: ClusterTree, cluster_id: str) -> ViewGraph:
    members = _visible_members(view, tree, cluster_id)
    sn = supernode_id(cluster_id)

    internal = []
    boundary = []
    merged: dict = {}  # (other, rel_type) -> [weight, orientations, count]
    for rel_id in sorted(view.graph.relationships):
        r = view.graph.relationships[rel_id]
        src_in = r.source in members
        tgt_in = r.target in members
        if not src_in and not tgt_in:
            continue
        if src_in and tgt_in:
            internal.append(r)
            continue
        boundary.append(r)
        other = r.target if src_in else r.source
        if not r.directed:
            orient = "both"
        else:
            orient = "out" if src_in else "in"
        key = (other, r.rel_type)
        if key not in merged:
            merged[key] = [0.0, set(), 0]
        merged[key][0] += r.weight
        merged[key][1].add(orient)
        merged[key][2] += 1

    added = []
    new_rels = {
        rid: r
        for rid, r in view.graph.relationships.items()
        if r.source not in members and r.target not in members
    }
    for (other, rel_type) in sorted(merged):
        weight, orients, count = merged[(other, rel_type)]
        agg_id = _aggregate_id(sn, other, rel_type)
        if orients == {"out"}:
            src, tgt, directed = sn, other, True
        elif orients == {"in"}:
            src, tgt, directed = other, sn, True
        else:
            src, tgt, directed = sn, other, False
        agg = Relationship(
            id=agg_id,
            source=src,
            target=tgt,
            rel_type=rel_type,
            directed=directed,
            weight=weight,
            metadata={"aggregates": str(count)},
        )
        new_rels[agg_id] = agg
        added.append(agg_id)

    removed_entities = tuple(view.graph.entities[m] for m in sorted(members))
    original_members: set = set()
    for m in members:
        if m in view.supernode_map:
            original_members |= set(view.supernode_map[m])
        else:
            original_members.add(m)

    node = tree.nodes[cluster_id]
    supernode = Entity(
        id=sn,
        name=node.label,
        entity_type="other",
        style_hint=StyleHint(shape="diamond", size_class="large", color_class="cluster"),
    )
    new_entities = {eid: e for eid, e in view.graph.entities.items() if eid not in members}
    new_entities[sn] = supernode

    delta = CollapseDelta(
        cluster_id=cluster_id,
        supernode_id=sn,
        removed_entities=removed_entities,
        internal_relationships=tuple(internal),
        boundary_relationships=tuple(boundary),
        added_relationship_ids=tuple(added),
    )
    new_map = dict(view.supernode_map)
    new_map[sn] = frozenset(original_members)
    new_deltas = dict(view.deltas)
    new_deltas[cluster_id] = delta
    return ViewGraph(
        graph=LogGraph(
            entities=new_entities,
            relationships=new_rels,
            graph_meta=view.graph.graph_meta,
        ),
        supernode_map=new_map,
        deltas=new_deltas,
        base=view.base,
    )


def collapse(view: ViewGraph, tree: ClusterTree, cluster_id: str) -> ViewGraph:
    """Replaces the cluster's visible members with one supernode."""
    if cluster_id not in tree.nodes:
        raise UnknownCluster(cluster_id)
    if cluster_id in view.deltas:
        raise AlreadyCollapsed(cluster_id)
    if not _visible_members(view, tree, cluster_id):
        raise AlreadyCollapsed(f"{cluster_id}: no visible members (hidden by an ancestor)")
    base = view.base if view.base is not None else view.graph
    return _rebuild(base, tree, set(view.deltas) | {cluster_id})


def expand(view: ViewGraph, tree: ClusterTree, cluster_id: str) -> ViewGraph:
    """Exact inverse of collapse: the view rebuilt without this cluster."""
    if cluster_id not in tree.nodes:
        raise UnknownCluster(cluster_id)
    if cluster_id not in view.deltas:
        raise NotCollapsed(cluster_id)
    if supernode_id(cluster_id) not in view.graph.entities:
        raise NotCollapsed(f"{cluster_id}: supernode hidden by a collapsed ancestor")
    base = view.base if view.base is not None else view.graph
    return _rebuild(base, tree, set(view.deltas) - {cluster_id})


def collapse_placement(state_positions: dict, state_pinned, members) -> tuple:
    """Layout integration: the supernode starts at the members' centroid and
    is pinned only when every member was pinned."""
    xs = [state_positions[m][0] for m in members if m in state_positions]
    ys = [state_positions[m][1] for m in members if m in state_positions]
    if not xs:
        return (0.0, 0.0), False
    centroid = (sum(xs) / len(xs), sum(ys) / len(ys))
    pinned = all(m in state_pinned for m in members)
    return centroid, pinned
