"""Release gate: one test per contract the package must honor, each at its
stated tolerance. Every test prints a single PASS or FAIL line so a full
run reads as a checklist. These tests re-verify behavior covered in depth
elsewhere; keep them self-contained so the gate stands on its own.
"""

from __future__ import annotations

import json
import math
import random
import struct
import time
from contextlib import contextmanager

import pytest
from fastapi.testclient import TestClient

from helpers import (
    grid_graph,
    make_entity,
    make_sections,
    pair_graph,
    random_graph,
    star_graph,
    triangle_graph,
)
from legiscout import fixtures
from legiscout.cluster import (
    build_cluster_tree,
    collapse,
    expand,
    new_view,
    supernode_id,
    validate_tree,
)
from legiscout.errors import ValidationError
from legiscout.extract import extract_chart, generate_chart
from legiscout.graph import FilterSpec
from legiscout.ingest import load_dataset, load_graph_file
from legiscout.layout import (
    LabelBox,
    LayoutParams,
    compute_displacements,
    count_overlaps,
    init_layout,
    pin,
    run_to_convergence,
    separation_pass,
    snapshot_json,
    step,
    total_overlap_area,
)
from legiscout.search import (
    HashNgramEmbedder,
    build_index,
    chunk_corpus,
    keyword_score,
    keyword_search,
    semantic_search,
)
from legiscout.server import ServerConfig, build_state, create_app


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


def _dist(state, a: str, b: str) -> float:
    (x1, y1), (x2, y2) = state.positions[a], state.positions[b]
    return math.hypot(x1 - x2, y1 - y2)


def _pack(state, node_id: str) -> bytes:
    return struct.pack("<2d", *state.positions[node_id])


# ── layout ──


def test_acceptance_layout_equilibrium():
    with criterion("layout-equilibrium"):
        t0 = time.perf_counter()
        state = run_to_convergence(pair_graph(), LayoutParams())
        assert state.converged and state.iteration <= 500
        assert _dist(state, "a", "b") == pytest.approx(1.0, rel=0.02)

        state = run_to_convergence(triangle_graph(), LayoutParams())
        assert state.converged
        for a, b in (("a", "b"), ("b", "c"), ("c", "a")):
            assert _dist(state, a, b) == pytest.approx(1.0, rel=0.02)
        assert time.perf_counter() - t0 < 1.0


def test_acceptance_layout_determinism(tmp_path):
    with criterion("layout-determinism"):
        g = random_graph(0, 200)
        p = LayoutParams(seed=11, max_iterations=250)
        for name in ("one.json", "two.json"):
            (tmp_path / name).write_text(snapshot_json(run_to_convergence(g, p)))
        assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()


def test_acceptance_force_sums_vanish():
    with criterion("layout-force-balance"):
        p = LayoutParams(seed=4)
        rng = random.Random(12345)
        for trial in range(20):
            n = rng.randint(5, 100)
            g = random_graph(1000 + trial, n)
            state = init_layout(g, p)
            bound = 1e-9 * p.ideal_edge_length * n
            for _ in range(10):
                forces = compute_displacements(g, state, p)
                sx = sum(fx for fx, _ in forces.values())
                sy = sum(fy for _, fy in forces.values())
                assert abs(sx) <= bound and abs(sy) <= bound, f"trial {trial}"
                state = step(g, state, p)


def test_acceptance_pin_contract():
    with criterion("layout-pin"):
        g = random_graph(7, 25)
        p = LayoutParams(seed=2, max_iterations=2000)
        state = init_layout(g, p)
        state = pin(pin(state, "n003"), "n017")
        frozen = {eid: _pack(state, eid) for eid in ("n003", "n017")}
        for _ in range(1000):
            state = step(g, state, p)
            for eid, blob in frozen.items():
                assert _pack(state, eid) == blob


def test_acceptance_label_collision():
    with criterion("layout-labels"):
        for seed in range(5):
            rng = random.Random(seed)
            labels = [
                LabelBox(
                    f"l{i:03d}",
                    rng.uniform(-9.0, 9.0),
                    rng.uniform(-9.0, 9.0),
                    rng.uniform(0.4, 1.6),
                    rng.uniform(0.2, 0.8),
                )
                for i in range(50)
            ]
            current = labels
            area = total_overlap_area(current)
            passes = 0
            while count_overlaps(current) > 0 and passes < 100:
                current = separation_pass(current)
                passes += 1
                new_area = total_overlap_area(current)
                assert new_area <= area + 1e-9, f"seed {seed} pass {passes}"
                area = new_area
            assert count_overlaps(current) == 0, f"seed {seed}"
            assert passes <= 100


def test_acceptance_quadtree_agreement():
    with criterion("layout-quadtree-agreement"):
        def finals(g, mode):
            p = LayoutParams(seed=0, repulsion_mode=mode, max_iterations=1000)
            st = run_to_convergence(g, p)
            ids = sorted(st.positions)
            return {
                (a, b): _dist(st, a, b) for i, a in enumerate(ids) for b in ids[i + 1:]
            }

        # Rigid structures: per-pair agreement.
        for g in (pair_graph(), triangle_graph(), grid_graph(4, 4), grid_graph(6, 6)):
            exact = finals(g, "exact")
            approx = finals(g, "barnes_hut")
            for key, d in exact.items():
                if d > 0.1:
                    assert approx[key] == pytest.approx(d, rel=0.05), key
        # At the 200-node scale leaves are interchangeable, so the sorted
        # distance multiset is the mode-independent shape invariant.
        exact = sorted(finals(star_graph(199), "exact").values())
        approx = sorted(finals(star_graph(199), "barnes_hut").values())
        for d_exact, d_approx in zip(exact, approx):
            if d_exact > 0.1:
                assert d_approx == pytest.approx(d_exact, rel=0.05)


# ── clustering ──


def _expected_boundary(g, members):
    """Brute-force re-derivation: summed weight and merged-edge count for
    every (neighbor, rel_type) pair crossing the members boundary."""
    agg = {}
    for r in g.relationships.values():
        src_in, tgt_in = r.source in members, r.target in members
        if src_in == tgt_in:
            continue
        other = r.target if src_in else r.source
        rec = agg.setdefault((other, r.rel_type), [0.0, 0])
        rec[0] += r.weight
        rec[1] += 1
    return agg


def _random_manual_tree(rng, g, tmp_path, trial):
    ids = sorted(g.entities)
    rng.shuffle(ids)
    n_groups = rng.randint(2, 4)
    groups: dict = {f"grp{i}": [] for i in range(n_groups)}
    for i, eid in enumerate(ids):
        if rng.random() < 0.85:
            groups[f"grp{i % n_groups}"].append(eid)
    spec = {}
    taken: set = set()
    for i in range(n_groups):
        members = [m for m in sorted(set(groups[f"grp{i}"])) if m not in taken]
        if not members:
            members = [m for m in (ids[i],) if m not in taken]
        if not members:
            return None
        taken.update(members)
        spec[f"grp{i}"] = {"label": f"G{i}", "members": members}
    if n_groups >= 3 and rng.random() < 0.6:
        spec["grp1"]["parent"] = "grp0"
    path = tmp_path / f"grouping-{trial}.json"
    path.write_text(json.dumps(spec), encoding="utf-8")
    return build_cluster_tree(g, "manual", grouping_path=path)


def test_acceptance_cluster_round_trip(tmp_path):
    with criterion("cluster-round-trip"):
        rng = random.Random(424242)
        for trial in range(200):
            g = random_graph(5000 + trial, rng.randint(8, 30))
            if trial % 2 == 0:
                tree = build_cluster_tree(g, "by_entity_type")
            else:
                tree = _random_manual_tree(rng, g, tmp_path, trial)
                if tree is None:
                    continue
            assert validate_tree(tree, g) == []
            view = new_view(g)
            for _ in range(rng.randint(1, 10)):
                cids = sorted(tree.nodes)
                rng.shuffle(cids)
                acted = False
                for cid in cids:
                    sn = supernode_id(cid)
                    if rng.random() < 0.5 and cid in view.deltas:
                        if sn in view.graph.entities:
                            view = expand(view, tree, cid)
                            acted = True
                            break
                    elif cid not in view.deltas:
                        before = view.graph
                        fresh = not view.deltas
                        try:
                            view = collapse(view, tree, cid)
                        except Exception:
                            continue
                        acted = True
                        # Every aggregated boundary edge must carry the
                        # brute-force weight sum over what it absorbed.
                        absorbed = set(before.entities) - set(view.graph.entities)
                        expect = _expected_boundary(before, absorbed)
                        got = {}
                        for r in view.graph.relationships.values():
                            if sn in (r.source, r.target):
                                other = r.target if r.source == sn else r.source
                                got[(other, r.rel_type)] = r
                        assert set(got) == set(expect), (trial, cid)
                        for key, (weight, count) in expect.items():
                            assert got[key].weight == pytest.approx(weight, rel=1e-12)
                            if fresh:
                                # On an untouched view the merged-edge count
                                # is the number of original crossing edges.
                                assert int(got[key].metadata["aggregates"]) == count
                        break
                if not acted:
                    break
            while view.deltas:
                for cid in sorted(view.deltas):
                    if supernode_id(cid) in view.graph.entities:
                        view = expand(view, tree, cid)
                        break
            assert view.graph.entities == g.entities, f"trial {trial}"
            assert view.graph.relationships == g.relationships, f"trial {trial}"
            assert view.supernode_map == {}


# ── search ──


def _oracle_semantic(index, query, k, embedder):
    qvec = embedder.embed(query)
    rows = []
    for chunk_id in sorted(index.chunks):
        _, vec = index.chunks[chunk_id]
        total = 0.0
        for a, b in zip(qvec.values, vec.values):
            total = total + a * b
        rows.append((chunk_id, total))
    rows.sort(key=lambda row: (-row[1], row[0]))
    return rows[:k]


_WORDS = [
    "coverage", "exchange", "medicaid", "eligibility", "secretary", "report",
    "fund", "appropriation", "insurer", "dependent", "premium", "study",
    "privacy", "state", "enrollment", "subsidy", "penalty", "audit",
]


def test_acceptance_search_oracle_equivalence():
    with criterion("search-oracle-equivalence"):
        emb = HashNgramEmbedder()
        rng = random.Random(2026)
        max_chunks = 0
        for trial in range(50):
            n_sections = rng.choice([2, 4, 8, 20, 40])
            texts = {
                f"sec-{trial:02d}{s:03d}": " ".join(
                    rng.choice(_WORDS) for _ in range(rng.randint(8, 120))
                )
                for s in range(n_sections)
            }
            chunks = chunk_corpus(make_sections(texts), max_tokens=16, overlap_tokens=4)
            assert len(chunks) <= 500
            max_chunks = max(max_chunks, len(chunks))
            index = build_index(chunks, emb)
            query = " ".join(rng.sample(_WORDS, rng.randint(1, 3)))
            k = rng.randint(1, len(index))
            got = [(h.target, h.score) for h in semantic_search(index, query, k, emb)]
            assert got == _oracle_semantic(index, query, k, emb), f"trial {trial}"

            entities = [
                make_entity(
                    f"e{i:02d}",
                    name=" ".join(rng.sample(_WORDS, rng.randint(1, 3))).title(),
                    tags=frozenset(rng.sample(_WORDS, rng.randint(0, 2))),
                )
                for i in range(rng.randint(3, 12))
            ]
            from helpers import graph_of

            g = graph_of(entities)
            kw_query = rng.choice(_WORDS + ["xyz", "Coverage Fund"])
            expect = sorted(
                (
                    (-keyword_score(kw_query.lower(), e.name, e.tags), e.id)
                    for e in entities
                    if keyword_score(kw_query.lower(), e.name, e.tags) > 0
                )
            )[:10]
            kw_got = [(-int(h.score), h.target) for h in keyword_search(g, kw_query)]
            assert kw_got == expect, f"trial {trial} query {kw_query!r}"
        assert max_chunks > 100  # the sweep includes large corpora


STOPWORDS = {"for", "up", "to", "the", "of", "a", "an", "and", "or", "in", "on"}


def test_acceptance_semantic_fixture(aca):
    with criterion("search-fixture-ranking"):
        query = "coverage for dependents up to age 26"
        emb = HashNgramEmbedder()
        chunks = chunk_corpus(aca.corpus, max_tokens=48, overlap_tokens=8)
        index = build_index(chunks, emb)

        top_chunk, _ = index.chunks["sec-2714#0000"]
        content = {w for w in query.split() if w not in STOPWORDS}
        shared = {w for w in content if w.lower() in top_chunk.text.lower()}
        assert len(shared) >= 3, shared

        oracle = _oracle_semantic(index, query, 3, emb)
        assert oracle[0][0] == "sec-2714#0000"
        hits = semantic_search(index, query, 3, emb)
        assert [(h.target, h.score) for h in hits] == oracle
        assert hits[0].score > hits[1].score + 0.1  # decisive, not a tie


# ── chart extraction ──


def _box_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union else 0.0


def test_acceptance_extraction():
    with criterion("chart-extraction"):
        t0 = time.perf_counter()
        for seed in range(50):
            truth = generate_chart(seed, n_boxes=4 + seed % 7)  # 4..10 boxes
            result = extract_chart(truth.image)

            # Exact box count + an IoU >= 0.9 bijection means node
            # precision and recall are both 1.0.
            assert len(result.boxes) == len(truth.boxes), f"seed {seed}"
            mapping = {}
            for di, db in enumerate(result.boxes):
                best = max(
                    range(len(truth.boxes)),
                    key=lambda ti: _box_iou((db.x, db.y, db.w, db.h), truth.boxes[ti]),
                )
                assert _box_iou(
                    (db.x, db.y, db.w, db.h), truth.boxes[best]
                ) >= 0.9, f"seed {seed} box {di}"
                mapping[di] = best
            assert sorted(mapping.values()) == list(range(len(truth.boxes)))

            got_edges = set()
            for rel in result.inferred.relationships.values():
                i = int(rel.source.split("_")[1])
                j = int(rel.target.split("_")[1])
                ti, tj = mapping[i], mapping[j]
                got_edges.add((min(ti, tj), max(ti, tj)))
            # Set equality == edge precision 1.0 and recall 1.0.
            assert got_edges == set(truth.edges), f"seed {seed}"
        assert time.perf_counter() - t0 < 5.0


# ── ingest ──


def _ent(eid, **kw):
    out = {
        "id": eid,
        "name": eid.upper(),
        "entity_type": "other",
        "role_description": "",
        "tags": [],
        "bill_refs": [],
        "style_hint": {"shape": "circle", "size_class": "medium", "color_class": "x"},
    }
    out.update(kw)
    return out


def _rel(rid, source, target, **kw):
    out = {
        "id": rid,
        "source": source,
        "target": target,
        "rel_type": "other",
        "directed": True,
        "weight": 1.0,
        "metadata": {},
    }
    out.update(kw)
    return out


def _clean_doc():
    ids = [f"e{i:02d}" for i in range(12)]
    return {
        "meta": {"schema": "log-v1", "title": "fault harness"},
        "entities": [_ent(eid) for eid in ids],
        "relationships": [_rel(f"r{i:02d}", ids[i], ids[i + 1]) for i in range(6)],
    }


# Each injector appends one faulty record touching ids no other injector
# uses, so any subset composes without masking.
_INJECTORS = [
    lambda d: d["entities"].append(_ent("bad id")),
    lambda d: d["entities"].append(dict(d["entities"][0])),
    lambda d: d["entities"].append(_ent("ft03", entity_type="commission")),
    lambda d: d["entities"].append(
        _ent("ft04", bill_refs=[{"bill_id": "s1", "document_id": "d1", "page": 0}])
    ),
    lambda d: d["entities"].append(
        _ent("ft05", style_hint={"shape": "star", "size_class": "medium", "color_class": ""})
    ),
    lambda d: d["relationships"].append(_rel("fr06", "ghost-src", "e00")),
    lambda d: d["relationships"].append(_rel("fr07", "e01", "ghost-tgt")),
    lambda d: d["relationships"].append(dict(d["relationships"][0])),
    lambda d: d["relationships"].append(_rel("fr10", "e08", "e09", rel_type="alliance")),
    lambda d: d["relationships"].append(_rel("fr11", "e09", "e10", weight=0.0)),
]


def test_acceptance_ingest_fault_counting(tmp_path):
    with criterion("ingest-fault-counting"):
        rng = random.Random(818)
        for k in range(1, 11):
            for sample in range(3):
                doc = _clean_doc()
                for injector in rng.sample(_INJECTORS, k):
                    injector(doc)
                path = tmp_path / f"fault-{k}-{sample}.json"
                path.write_text(json.dumps(doc), encoding="utf-8")
                with pytest.raises(ValidationError) as exc:
                    load_graph_file(path)
                assert len(exc.value.violations) == k, (
                    f"k={k} sample={sample}: {exc.value.violations}"
                )


# ── HTTP service ──


def test_acceptance_api_contract(tmp_path):
    with criterion("api-contract"):
        b = fixtures.bundle()
        cfg = ServerConfig(
            graph_file=str(b.graph_file),
            corpus_file=str(b.corpus_file),
            documents_file=str(b.documents_file),
            documents_dir=str(fixtures.documents_dir()),
        )
        state = build_state(cfg)
        client = TestClient(create_app(state, cfg))

        # The served graph re-validates through the strict loader cleanly.
        original = client.get("/api/graph").json()
        path = tmp_path / "served.json"
        path.write_text(json.dumps(original["graph"]))
        graph, warnings = load_graph_file(path, strict=True)
        assert warnings == []
        assert sorted(graph.entities) == sorted(state.graph.entities)

        # Every bill reference carried by any entity resolves to a URI+page.
        refs = {
            ref.bill_id
            for e in state.graph.entities.values()
            for ref in e.bill_refs
        }
        assert refs
        for bill_id in sorted(refs):
            resp = client.get(f"/api/bills/{bill_id}")
            assert resp.status_code == 200, bill_id
            body = resp.json()
            assert body["uri"].startswith("/documents/")
            assert body["page"] >= 1

        # Mutation round-trips: pin shows up and releases; collapse then
        # expand restores the exact original body; filter views match the
        # library's own subgraph.
        snap = client.post("/api/node/cms/pin").json()
        assert "cms" in snap["pinned"]
        assert "cms" not in client.post("/api/node/cms/unpin").json()["pinned"]

        collapsed = client.post("/api/cluster/type-federal_agency/collapse")
        assert collapsed.status_code == 200
        assert "cluster:type-federal_agency" in collapsed.json()["graph"]["supernode_map"]
        expanded = client.post("/api/cluster/type-federal_agency/expand")
        assert expanded.status_code == 200
        assert client.get("/api/graph").json() == original

        view_id = client.post("/api/filter", json={"tags": ["medicaid"]}).json()["view_id"]
        body = client.get("/api/graph", params={"view": view_id}).json()
        expected = state.graph.filter_subgraph(FilterSpec(tags=frozenset(["medicaid"])))
        assert {e["id"] for e in body["graph"]["entities"]} == set(expected.entities)

        hits = client.get("/api/search", params={"q": "CMS"}).json()
        assert hits[0]["target"] == "cms"
