"""Legislative-organizational graph (LOG): typed entities, typed directed
relationships, and the invariants that keep them consistent.

Graphs are immutable values: every mutating operation returns a new
``LogGraph`` that shares unchanged entity/relationship objects with its
parent. This makes snapshots free and concurrent reads safe.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace

from .errors import DanglingEndpoint, DuplicateId, InvalidId, UnknownEntity, ValidationError

ENTITY_TYPES = (
    "federal_agency",
    "state_agency",
    "regulator",
    "insurer",
    "provider",
    "program",
    "fund",
    "individual",
    "study",
    "other",
)

REL_TYPES = ("regulatory", "funding", "partnership", "oversight", "reporting", "other")

NODE_SHAPES = ("circle", "square", "diamond")
SIZE_CLASSES = ("small", "medium", "large")
LINE_STYLES = ("solid", "dashed", "dotted")

SCHEMA_VERSION = "log-v1"

# Aggregate nodes produced by cluster collapse live in a reserved namespace.
SUPERNODE_PREFIX = "cluster:"

_ID_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


def is_valid_id(value: str) -> bool:
    """True for plain entity ids and for `cluster:`-prefixed supernode ids."""
    if value.startswith(SUPERNODE_PREFIX):
        value = value[len(SUPERNODE_PREFIX):]
    return bool(value) and _ID_RE.match(value) is not None


def default_line_style(rel_type: str) -> str:
    """Edge style when no explicit hint is given."""
    return {"regulatory": "solid", "funding": "dashed", "partnership": "dotted"}.get(
        rel_type, "solid"
    )


@dataclass(frozen=True)
class BillRef:
    """Pointer from an entity to the bill section that created or governs it."""

    bill_id: str
    document_id: str
    page: int = 1


@dataclass(frozen=True)
class StyleHint:
    shape: str = "circle"
    size_class: str = "medium"
    color_class: str = ""
    line_style: str | None = None  # edges only


@dataclass(frozen=True)
class Entity:
    id: str
    name: str
    entity_type: str = "other"
    role_description: str = ""
    tags: frozenset[str] = frozenset()
    bill_refs: tuple[BillRef, ...] = ()
    style_hint: StyleHint | None = None

    def __post_init__(self):
        # Freeze collection fields so entities stay hashable value objects.
        object.__setattr__(self, "tags", frozenset(self.tags))
        object.__setattr__(self, "bill_refs", tuple(self.bill_refs))


@dataclass(frozen=True)
class Relationship:
    id: str
    source: str
    target: str
    rel_type: str = "other"
    directed: bool = True
    weight: float = 1.0
    metadata: dict = field(default_factory=dict)

    @property
    def line_style(self) -> str:
        return default_line_style(self.rel_type)


@dataclass(frozen=True)
class FilterSpec:
    """Conjunctive predicate: entities must match every given clause.

    ``tags`` requires all listed tags to be present on the entity.
    ``rel_types`` restricts which surviving relationships are kept.
    """

    entity_types: frozenset[str] | None = None
    tags: frozenset[str] | None = None
    rel_types: frozenset[str] | None = None

    def __post_init__(self):
        for name in ("entity_types", "tags", "rel_types"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, frozenset(value))

    def matches_entity(self, e: Entity) -> bool:
        if self.entity_types is not None and e.entity_type not in self.entity_types:
            return False
        if self.tags is not None and not self.tags <= e.tags:
            return False
        return True

    def matches_relationship(self, r: Relationship) -> bool:
        return self.rel_types is None or r.rel_type in self.rel_types


def validate_entity(e: Entity, allow_supernode: bool = False) -> list[str]:
    """All invariant violations for one entity, empty when clean."""
    problems = []
    if not e.id or not is_valid_id(e.id):
        problems.append(f"entity id {e.id!r} fails the id token rule")
    elif e.id.startswith(SUPERNODE_PREFIX) and not allow_supernode:
        problems.append(f"entity id {e.id!r} uses the reserved supernode prefix")
    if e.entity_type not in ENTITY_TYPES:
        problems.append(f"entity {e.id!r}: unknown entity_type {e.entity_type!r}")
    for tag in e.tags:
        if tag != tag.strip().lower() or not tag:
            problems.append(f"entity {e.id!r}: tag {tag!r} is not normalized")
    for ref in e.bill_refs:
        if ref.page < 1:
            problems.append(f"entity {e.id!r}: bill_ref {ref.bill_id!r} has page < 1")
    if e.style_hint is not None:
        if e.style_hint.shape not in NODE_SHAPES:
            problems.append(f"entity {e.id!r}: unknown shape {e.style_hint.shape!r}")
        if e.style_hint.size_class not in SIZE_CLASSES:
            problems.append(f"entity {e.id!r}: unknown size_class {e.style_hint.size_class!r}")
    return problems


def validate_relationship(r: Relationship) -> list[str]:
    """Endpoint existence is checked at the graph level, not here."""
    problems = []
    if not r.id or not is_valid_id(r.id):
        problems.append(f"relationship id {r.id!r} fails the id token rule")
    if r.rel_type not in REL_TYPES:
        problems.append(f"relationship {r.id!r}: unknown rel_type {r.rel_type!r}")
    if not r.weight > 0:
        problems.append(f"relationship {r.id!r}: weight must be > 0, got {r.weight}")
    return problems


@dataclass(frozen=True)
class LogGraph:
    """Directed, heterogeneous graph of legislative-organizational entities."""

    entities: dict = field(default_factory=dict)
    relationships: dict = field(default_factory=dict)
    graph_meta: dict = field(default_factory=dict)

    # ── construction ──

    @staticmethod
    def empty(**meta) -> "LogGraph":
        return LogGraph(entities={}, relationships={}, graph_meta=dict(meta))

    def add_entity(self, e: Entity, allow_supernode: bool = False) -> "LogGraph":
        if not e.id or not is_valid_id(e.id):
            raise InvalidId(e.id)
        if not allow_supernode and e.id.startswith(SUPERNODE_PREFIX):
            raise InvalidId(f"{e.id!r} uses the reserved supernode prefix")
        if e.id in self.entities:
            raise DuplicateId(e.id)
        problems = validate_entity(e, allow_supernode=allow_supernode)
        if problems:
            raise ValidationError(problems)
        entities = dict(self.entities)
        entities[e.id] = e
        return replace(self, entities=entities)

    def add_relationship(self, r: Relationship) -> "LogGraph":
        if r.id in self.relationships:
            raise DuplicateId(r.id)
        for endpoint in (r.source, r.target):
            if endpoint not in self.entities:
                raise DanglingEndpoint(endpoint)
        problems = validate_relationship(r)
        if self._has_triple(r.source, r.target, r.rel_type):
            problems.append(
                f"relationship {r.id!r}: duplicate "
                f"({r.source}, {r.target}, {r.rel_type}) triple"
            )
        if problems:
            raise ValidationError(problems)
        relationships = dict(self.relationships)
        relationships[r.id] = r
        return replace(self, relationships=relationships)

    def remove_entity(self, entity_id: str) -> "LogGraph":
        """Removes the entity and cascades to every incident relationship."""
        if entity_id not in self.entities:
            raise UnknownEntity(entity_id)
        entities = {k: v for k, v in self.entities.items() if k != entity_id}
        relationships = {
            k: v
            for k, v in self.relationships.items()
            if v.source != entity_id and v.target != entity_id
        }
        return replace(self, entities=entities, relationships=relationships)

    def remove_relationship(self, rel_id: str) -> "LogGraph":
        if rel_id not in self.relationships:
            raise UnknownEntity(rel_id)
        relationships = {k: v for k, v in self.relationships.items() if k != rel_id}
        return replace(self, relationships=relationships)

    def _has_triple(self, source: str, target: str, rel_type: str) -> bool:
        for r in self.relationships.values():
            if (r.source, r.target, r.rel_type) == (source, target, rel_type):
                return True
            # Undirected edges occupy both orientations of the triple.
            if not r.directed and (r.target, r.source, r.rel_type) == (source, target, rel_type):
                return True
        return False

    # ── queries ──

    @property
    def entity_count(self) -> int:
        return len(self.entities)

    @property
    def relationship_count(self) -> int:
        return len(self.relationships)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntity(entity_id) from None

    def neighbors(self, entity_id: str, direction: str = "both"):
        """Incident (neighbor entity, relationship) pairs.

        Undirected relationships count in every direction. Results are
        sorted by (rel_type, relationship id) so snapshots are stable.
        """
        if entity_id not in self.entities:
            raise UnknownEntity(entity_id)
        if direction not in ("in", "out", "both"):
            raise ValueError(f"direction must be in/out/both, got {direction!r}")
        hits = {}
        for r in self.relationships.values():
            if r.directed:
                incident = (r.source == entity_id and direction in ("out", "both")) or (
                    r.target == entity_id and direction in ("in", "both")
                )
            else:
                incident = entity_id in (r.source, r.target)
            if incident:
                other = r.target if r.source == entity_id else r.source
                hits[r.id] = (self.entities[other], r)
        return [hits[k] for k in sorted(hits, key=lambda rid: (hits[rid][1].rel_type, rid))]

    def filter_subgraph(self, spec: FilterSpec) -> "LogGraph":
        """Induced subgraph of matching entities plus surviving relationships."""
        entities = {eid: e for eid, e in self.entities.items() if spec.matches_entity(e)}
        relationships = {
            rid: r
            for rid, r in self.relationships.items()
            if r.source in entities and r.target in entities and spec.matches_relationship(r)
        }
        return replace(self, entities=entities, relationships=relationships)

    def validate(self, allow_supernodes: bool = False) -> list[str]:
        """Every invariant violation in the graph; empty when consistent."""
        problems = []
        for e in self.entities.values():
            problems.extend(validate_entity(e, allow_supernode=allow_supernodes))
        seen_triples = set()
        for r in self.relationships.values():
            problems.extend(validate_relationship(r))
            for endpoint in (r.source, r.target):
                if endpoint not in self.entities:
                    problems.append(
                        f"relationship {r.id!r}: dangling endpoint {endpoint!r}"
                    )
            triple = (r.source, r.target, r.rel_type)
            if triple in seen_triples:
                problems.append(f"relationship {r.id!r}: duplicate {triple} triple")
            seen_triples.add(triple)
            if not r.directed:
                seen_triples.add((r.target, r.source, r.rel_type))
        return problems

    # ── serialization (log-v1) ──

    def to_dict(self) -> dict:
        meta = dict(self.graph_meta)
        meta.setdefault("schema", SCHEMA_VERSION)
        return {
            "meta": meta,
            "entities": [entity_to_dict(e) for e in sorted(self.entities.values(), key=lambda e: e.id)],
            "relationships": [
                relationship_to_dict(r)
                for r in sorted(self.relationships.values(), key=lambda r: r.id)
            ],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @staticmethod
    def from_dict(data: dict, allow_supernodes: bool = False) -> "LogGraph":
        """Builds a graph and verifies every invariant, raising with the
        full violation list on failure."""
        meta = dict(data.get("meta", {}))
        entities = {}
        problems = []
        for raw in data.get("entities", []):
            e = entity_from_dict(raw)
            if e.id in entities:
                problems.append(f"duplicate entity id {e.id!r}")
                continue
            entities[e.id] = e
        relationships = {}
        for raw in data.get("relationships", []):
            r = relationship_from_dict(raw)
            if r.id in relationships:
                problems.append(f"duplicate relationship id {r.id!r}")
                continue
            relationships[r.id] = r
        g = LogGraph(entities=entities, relationships=relationships, graph_meta=meta)
        problems.extend(g.validate(allow_supernodes=allow_supernodes))
        if problems:
            raise ValidationError(problems)
        return g


# ── dict codecs ──


def entity_to_dict(e: Entity) -> dict:
    out = {
        "id": e.id,
        "name": e.name,
        "entity_type": e.entity_type,
        "role_description": e.role_description,
        "tags": sorted(e.tags),
        "bill_refs": [
            {"bill_id": b.bill_id, "document_id": b.document_id, "page": b.page}
            for b in e.bill_refs
        ],
    }
    if e.style_hint is not None:
        hint = {
            "shape": e.style_hint.shape,
            "size_class": e.style_hint.size_class,
            "color_class": e.style_hint.color_class,
        }
        if e.style_hint.line_style is not None:
            hint["line_style"] = e.style_hint.line_style
        out["style_hint"] = hint
    return out


def entity_from_dict(raw: dict) -> Entity:
    hint = None
    if raw.get("style_hint") is not None:
        h = raw["style_hint"]
        hint = StyleHint(
            shape=h.get("shape", "circle"),
            size_class=h.get("size_class", "medium"),
            color_class=h.get("color_class", ""),
            line_style=h.get("line_style"),
        )
    return Entity(
        id=str(raw.get("id", "")),
        name=str(raw.get("name", "")),
        entity_type=raw.get("entity_type", "other"),
        role_description=raw.get("role_description", ""),
        tags=frozenset(raw.get("tags", [])),
        bill_refs=tuple(
            BillRef(
                bill_id=str(b.get("bill_id", "")),
                document_id=str(b.get("document_id", "")),
                page=int(b.get("page", 1)),
            )
            for b in raw.get("bill_refs", [])
        ),
        style_hint=hint,
    )


def relationship_to_dict(r: Relationship) -> dict:
    return {
        "id": r.id,
        "source": r.source,
        "target": r.target,
        "rel_type": r.rel_type,
        "directed": r.directed,
        "weight": r.weight,
        "metadata": dict(r.metadata),
    }


def relationship_from_dict(raw: dict) -> Relationship:
    return Relationship(
        id=str(raw.get("id", "")),
        source=str(raw.get("source", "")),
        target=str(raw.get("target", "")),
        rel_type=raw.get("rel_type", "other"),
        directed=bool(raw.get("directed", True)),
        weight=float(raw.get("weight", 1.0)),
        metadata=dict(raw.get("metadata", {})),
    )
