"""Shared builders for the test suite: small graphs, random graphs, and
deterministic corpora used as oracle inputs."""

from __future__ import annotations

import random

from legiscout.graph import Entity, LogGraph, Relationship, StyleHint
from legiscout.ingest import CorpusSection

DEFAULT_HINT = StyleHint(shape="circle", size_class="medium", color_class="default")


def make_entity(eid: str, etype: str = "other", **kw) -> Entity:
    kw.setdefault("name", eid.replace("_", " ").title())
    kw.setdefault("style_hint", DEFAULT_HINT)
    return Entity(id=eid, entity_type=etype, **kw)


def make_rel(rid: str, source: str, target: str, rel_type: str = "other", **kw) -> Relationship:
    return Relationship(id=rid, source=source, target=target, rel_type=rel_type, **kw)


def graph_of(entities, relationships=()) -> LogGraph:
    g = LogGraph.empty(schema="log-v1")
    for e in entities:
        g = g.add_entity(e)
    for r in relationships:
        g = g.add_relationship(r)
    return g


def pair_graph() -> LogGraph:
    return graph_of(
        [make_entity("a"), make_entity("b")],
        [make_rel("e1", "a", "b")],
    )


def triangle_graph() -> LogGraph:
    return graph_of(
        [make_entity("a"), make_entity("b"), make_entity("c")],
        [make_rel("e1", "a", "b"), make_rel("e2", "b", "c"), make_rel("e3", "c", "a")],
    )


def path_graph(n: int) -> LogGraph:
    ids = [f"n{i:03d}" for i in range(n)]
    rels = [make_rel(f"e{i:03d}", ids[i], ids[i + 1]) for i in range(n - 1)]
    return graph_of([make_entity(i) for i in ids], rels)


def star_graph(n_leaves: int) -> LogGraph:
    ids = ["hub"] + [f"leaf{i:03d}" for i in range(n_leaves)]
    rels = [make_rel(f"e{i:03d}", "hub", ids[i + 1]) for i in range(n_leaves)]
    return graph_of([make_entity(i) for i in ids], rels)


def grid_graph(rows: int, cols: int) -> LogGraph:
    ids = {(r, c): f"g{r}x{c}" for r in range(rows) for c in range(cols)}
    entities = [make_entity(ids[k]) for k in sorted(ids)]
    rels = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                rels.append(make_rel(f"h{r}x{c}", ids[(r, c)], ids[(r, c + 1)]))
            if r + 1 < rows:
                rels.append(make_rel(f"v{r}x{c}", ids[(r, c)], ids[(r + 1, c)]))
    return graph_of(entities, rels)


def random_graph(seed: int, n: int, extra_edges: int = None) -> LogGraph:
    """Connected random graph: a random spanning tree plus extra edges.

    Entity types, rel types, weights, and directedness are all drawn from
    the seeded rng so the graph exercises the full schema.
    """
    from legiscout.graph import ENTITY_TYPES, REL_TYPES

    rng = random.Random(seed)
    ids = [f"n{i:03d}" for i in range(n)]
    entities = [
        make_entity(eid, etype=rng.choice(ENTITY_TYPES), tags=frozenset(
            rng.sample(["alpha", "beta", "gamma", "delta"], rng.randint(0, 2))
        ))
        for eid in ids
    ]
    g = graph_of(entities)
    seen = set()
    k = 0
    for i in range(1, n):
        j = rng.randrange(i)
        rel_type = rng.choice(REL_TYPES)
        g = g.add_relationship(
            Relationship(
                id=f"e{k:04d}",
                source=ids[j],
                target=ids[i],
                rel_type=rel_type,
                directed=rng.random() < 0.8,
                weight=rng.choice([0.5, 1.0, 2.0, 3.0]),
            )
        )
        seen.add((ids[j], ids[i], rel_type))
        seen.add((ids[i], ids[j], rel_type))
        k += 1
    if extra_edges is None:
        extra_edges = max(0, n // 3)
    attempts = 0
    while extra_edges > 0 and attempts < 50 * n:
        attempts += 1
        a, b = rng.sample(ids, 2)
        rel_type = rng.choice(REL_TYPES)
        if (a, b, rel_type) in seen or (b, a, rel_type) in seen:
            continue
        g = g.add_relationship(
            Relationship(
                id=f"e{k:04d}",
                source=a,
                target=b,
                rel_type=rel_type,
                directed=rng.random() < 0.8,
                weight=rng.choice([0.5, 1.0, 2.0, 3.0]),
            )
        )
        seen.add((a, b, rel_type))
        seen.add((b, a, rel_type))
        k += 1
        extra_edges -= 1
    return g


def make_sections(texts: dict) -> list[CorpusSection]:
    """texts: section_id -> text. Documents all land in doc 'd1'."""
    return [
        CorpusSection(section_id=sid, title=sid, text=text, document_id="d1", page=i + 1)
        for i, (sid, text) in enumerate(sorted(texts.items()))
    ]
