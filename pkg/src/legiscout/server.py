"""HTTP service exposing the graph, layout, clustering, search, and
document-resolution operations.

Layout is authoritative on the server: every mutation re-runs the
simulation to convergence before the response is built, so clients only
ever see settled snapshots and scripted tests can assert on positions.
Views are session-scoped, named by explicit ids, and kept in an in-memory
LRU (the "default" view over the full dataset is never evicted). Mutation
endpoints hold a per-view lock; reads are side-effect-free.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles

from . import cluster as cluster_mod
from . import layout as layout_mod
from . import search as search_mod
from .errors import (
    AlreadyCollapsed,
    EmptyQuery,
    LegiscoutError,
    NotCollapsed,
    UnknownBill,
    UnknownCluster,
    UnknownEntity,
    UnknownView,
    ValidationError,
)
from .graph import ENTITY_TYPES, REL_TYPES, FilterSpec, LogGraph, default_line_style
from .ingest import DatasetBundle, load_dataset

MAX_VIEWS = 32
DEFAULT_VIEW_ID = "default"
ENV_PREFIX = "LEGISCOUT_"


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    graph_file: str | None = None
    corpus_file: str | None = None
    documents_file: str | None = None
    documents_dir: str | None = None
    ui_dir: str | None = None
    embedder: str = search_mod.HASH_NGRAM_ID  # embedder id or remote http(s) URL
    cluster_strategy: str = "by_entity_type"
    cluster_tag: str | None = None
    grouping_file: str | None = None
    max_tokens: int = 48
    overlap_tokens: int = 8
    strict: bool = True
    layout: dict = field(default_factory=dict)  # LayoutParams overrides


_CONFIG_KEYS = {
    "host": str,
    "port": int,
    "graph_file": str,
    "corpus_file": str,
    "documents_file": str,
    "documents_dir": str,
    "ui_dir": str,
    "embedder": str,
    "cluster_strategy": str,
    "cluster_tag": str,
    "grouping_file": str,
    "max_tokens": int,
    "overlap_tokens": int,
    "strict": bool,
}

_LAYOUT_KEYS = {
    "ideal_edge_length": float,
    "repulsion_constant": float,
    "attraction_constant": float,
    "cooling_factor": float,
    "initial_temperature": float,
    "max_iterations": int,
    "convergence_epsilon": float,
    "seed": int,
    "repulsion_mode": str,
    "barnes_hut_theta": float,
}


def load_config(path=None, env=None) -> ServerConfig:
    """Defaults, then the JSON config file, then environment variables
    (LEGISCOUT_<KEY>, LEGISCOUT_LAYOUT_<KEY>); the environment wins."""
    env = os.environ if env is None else env
    cfg = ServerConfig()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValidationError(["config file must be a JSON object"])
        for key, value in raw.items():
            if key == "layout":
                if not isinstance(value, dict):
                    raise ValidationError(["config 'layout' must be an object"])
                cfg.layout.update(value)
            elif key in _CONFIG_KEYS:
                setattr(cfg, key, value)
            else:
                raise ValidationError([f"unknown config key {key!r}"])
    for key, cast in _CONFIG_KEYS.items():
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            raw_value = env[env_key]
            if cast is bool:
                setattr(cfg, key, raw_value.strip().lower() in ("1", "true", "yes", "on"))
            else:
                setattr(cfg, key, cast(raw_value))
    for key, cast in _LAYOUT_KEYS.items():
        env_key = ENV_PREFIX + "LAYOUT_" + key.upper()
        if env_key in env:
            cfg.layout[key] = cast(env[env_key])
    return cfg


def layout_params_from_config(cfg: ServerConfig) -> layout_mod.LayoutParams:
    known = {k: v for k, v in cfg.layout.items() if k in _LAYOUT_KEYS}
    unknown = sorted(set(cfg.layout) - set(known))
    if unknown:
        raise ValidationError([f"unknown layout param {k!r}" for k in unknown])
    return layout_mod.LayoutParams(**known)


# ── session views ──


@dataclass
class SessionView:
    view_id: str
    view: cluster_mod.ViewGraph
    state: layout_mod.LayoutState
    filters: FilterSpec | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def collapsed(self) -> tuple:
        return tuple(sorted(self.view.deltas))


@dataclass
class AppState:
    graph: LogGraph
    params: layout_mod.LayoutParams
    tree: cluster_mod.ClusterTree
    corpus: list
    bills: dict  # bill_id -> {"document_id", "page"}
    registry: dict  # document_id -> {"uri", "title"}
    index: search_mod.ChunkIndex | None
    embedder: object | None
    views: "OrderedDict[str, SessionView]" = field(default_factory=OrderedDict)
    view_counter: "itertools.count" = field(default_factory=lambda: itertools.count(1))
    views_lock: threading.Lock = field(default_factory=threading.Lock)


def build_registry(documents_dir, explicit: dict | None = None) -> dict:
    """document_id -> {uri, title}: one entry per file in the documents
    directory, overridable by explicit config entries."""
    registry: dict = {}
    if documents_dir:
        root = Path(documents_dir)
        if root.is_dir():
            for child in sorted(root.iterdir()):
                if child.is_file():
                    registry[child.stem] = {
                        "uri": f"/documents/{child.name}",
                        "title": child.stem,
                    }
    for doc_id, entry in (explicit or {}).items():
        registry[doc_id] = dict(entry)
    return registry


def check_bill_resolution(graph: LogGraph, bills: dict, registry: dict) -> list:
    """Every BillRef in the graph must resolve through the bill mapping to
    a registered document."""
    problems = []
    for eid in sorted(graph.entities):
        for ref in graph.entities[eid].bill_refs:
            mapping = bills.get(ref.bill_id)
            if mapping is None:
                problems.append(f"entity {eid!r}: bill {ref.bill_id!r} has no document mapping")
                continue
            if mapping["document_id"] not in registry:
                problems.append(
                    f"bill {ref.bill_id!r}: document {mapping['document_id']!r} is not registered"
                )
    return problems


def make_embedder(spec: str):
    if spec == search_mod.HASH_NGRAM_ID:
        return search_mod.HashNgramEmbedder()
    if spec.startswith("http://") or spec.startswith("https://"):
        return search_mod.RemoteEmbedder(spec)
    raise ValidationError([f"unknown embedder {spec!r}"])


def build_state(cfg: ServerConfig) -> AppState:
    """Loads the dataset, builds the cluster tree and search index, runs
    the initial layout, and verifies bill resolution."""
    if not cfg.graph_file:
        raise ValidationError(["no graph_file configured"])
    bundle = DatasetBundle(
        graph_file=cfg.graph_file,
        corpus_file=cfg.corpus_file,
        documents_file=cfg.documents_file,
    )
    loaded = load_dataset(bundle, strict=cfg.strict)
    params = layout_params_from_config(cfg)
    tree = cluster_mod.build_cluster_tree(
        loaded.graph,
        cfg.cluster_strategy,
        tag=cfg.cluster_tag,
        grouping_path=cfg.grouping_file,
    )
    registry = build_registry(cfg.documents_dir)
    problems = check_bill_resolution(loaded.graph, loaded.documents, registry)
    if problems:
        raise ValidationError(problems)

    index = None
    embedder = None
    if loaded.corpus:
        embedder = make_embedder(cfg.embedder)
        chunks = search_mod.chunk_corpus(loaded.corpus, cfg.max_tokens, cfg.overlap_tokens)
        if chunks:
            index = search_mod.build_index(chunks, embedder)

    state = AppState(
        graph=loaded.graph,
        params=params,
        tree=tree,
        corpus=loaded.corpus,
        bills=loaded.documents,
        registry=registry,
        index=index,
        embedder=embedder,
    )
    default = SessionView(
        view_id=DEFAULT_VIEW_ID,
        view=cluster_mod.new_view(loaded.graph),
        state=layout_mod.run_to_convergence(loaded.graph, params),
    )
    state.views[DEFAULT_VIEW_ID] = default
    return state


# ── serialization ──


def view_graph_dict(sv: SessionView) -> dict:
    g = sv.view.graph
    body = g.to_dict()
    for rec in body["relationships"]:
        rec["line_style"] = default_line_style(rec["rel_type"])
    return {
        "view_id": sv.view_id,
        "graph": body,
        "supernode_map": {k: sorted(v) for k, v in sorted(sv.view.supernode_map.items())},
        "collapsed": list(sv.collapsed),
        "hidden_edge_count": sv.view.hidden_edge_count(),
    }


def search_hit_dict(hit: search_mod.SearchHit) -> dict:
    return {
        "target": hit.target,
        "score": hit.score,
        "kind": hit.kind,
        "snippet": hit.snippet,
        "match_span": list(hit.match_span) if hit.match_span else None,
        "bill_ref": {
            "bill_id": hit.bill_ref.bill_id,
            "document_id": hit.bill_ref.document_id,
            "page": hit.bill_ref.page,
        }
        if hit.bill_ref
        else None,
        "linked_entities": sorted(hit.linked_entities),
    }


# ── app factory ──


def create_app(state: AppState | None = None, cfg: ServerConfig | None = None):
    app = FastAPI(title="legiscout", docs_url=None, redoc_url=None)
    app.state.app_state = state
    app.state.config = cfg

    def need_state() -> AppState:
        if app.state.app_state is None:
            raise HTTPException(status_code=503, detail="no dataset loaded")
        return app.state.app_state

    def get_view(st: AppState, view_id: str) -> SessionView:
        with st.views_lock:
            sv = st.views.get(view_id)
            if sv is None:
                raise HTTPException(status_code=404, detail=f"unknown view {view_id!r}")
            st.views.move_to_end(view_id)
            return sv

    def put_view(st: AppState, sv: SessionView) -> None:
        with st.views_lock:
            st.views[sv.view_id] = sv
            st.views.move_to_end(sv.view_id)
            while len(st.views) > MAX_VIEWS:
                for vid in st.views:
                    if vid != DEFAULT_VIEW_ID:
                        del st.views[vid]
                        break
                else:
                    break

    @app.get("/api/graph")
    def api_graph(view: str = DEFAULT_VIEW_ID):
        st = need_state()
        sv = get_view(st, view)
        body = view_graph_dict(sv)
        payload = json.dumps(body, sort_keys=True)
        etag = '"' + hashlib.sha256(payload.encode("utf-8")).hexdigest() + '"'
        return JSONResponse(content=body, headers={"ETag": etag})

    @app.get("/api/layout")
    def api_layout(view: str = DEFAULT_VIEW_ID):
        st = need_state()
        sv = get_view(st, view)
        return layout_mod.snapshot_dict(sv.state)

    @app.post("/api/node/{node_id}/pin")
    def api_pin(node_id: str, view: str = DEFAULT_VIEW_ID):
        return _pin_common(node_id, view, pin=True)

    @app.post("/api/node/{node_id}/unpin")
    def api_unpin(node_id: str, view: str = DEFAULT_VIEW_ID):
        return _pin_common(node_id, view, pin=False)

    def _pin_common(node_id: str, view_id: str, pin: bool):
        st = need_state()
        sv = get_view(st, view_id)
        with sv.lock:
            try:
                if pin:
                    sv.state = layout_mod.pin(sv.state, node_id)
                else:
                    sv.state = layout_mod.unpin(sv.state, node_id)
            except UnknownEntity as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            return layout_mod.snapshot_dict(sv.state)

    @app.post("/api/cluster/{cluster_id}/collapse")
    def api_collapse(cluster_id: str, view: str = DEFAULT_VIEW_ID):
        st = need_state()
        sv = get_view(st, view)
        with sv.lock:
            try:
                members = cluster_mod._visible_members(sv.view, st.tree, cluster_id) \
                    if cluster_id in st.tree.nodes else set()
                new_view = cluster_mod.collapse(sv.view, st.tree, cluster_id)
            except UnknownCluster as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            except AlreadyCollapsed as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            sn = cluster_mod.supernode_id(cluster_id)
            centroid, pinned = cluster_mod.collapse_placement(
                sv.state.positions, sv.state.pinned, sorted(members)
            )
            new_state = layout_mod.adapt_state(
                sv.state, new_view.graph, st.params, placed={sn: centroid}
            )
            if pinned:
                new_state = layout_mod.pin(new_state, sn)
            new_state = layout_mod.reheat(new_state, st.params)
            new_state = layout_mod.run_to_convergence(new_view.graph, st.params, new_state)
            sv.view = new_view
            sv.state = new_state
            return {
                "graph": view_graph_dict(sv),
                "snapshot": layout_mod.snapshot_dict(sv.state),
            }

    @app.post("/api/cluster/{cluster_id}/expand")
    def api_expand(cluster_id: str, view: str = DEFAULT_VIEW_ID):
        st = need_state()
        sv = get_view(st, view)
        with sv.lock:
            try:
                new_view = cluster_mod.expand(sv.view, st.tree, cluster_id)
            except UnknownCluster as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            except NotCollapsed as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            sn = cluster_mod.supernode_id(cluster_id)
            origin = sv.state.positions.get(sn, (0.0, 0.0))
            placed = {}
            for eid in sorted(new_view.graph.entities):
                if eid not in sv.state.positions:
                    jitter = layout_mod._hash01(st.params.seed, "expand", eid)
                    placed[eid] = (
                        origin[0] + 0.1 * st.params.ideal_edge_length * (jitter - 0.5),
                        origin[1] + 0.1 * st.params.ideal_edge_length * (0.5 - jitter),
                    )
            new_state = layout_mod.adapt_state(sv.state, new_view.graph, st.params, placed=placed)
            new_state = layout_mod.reheat(new_state, st.params)
            new_state = layout_mod.run_to_convergence(new_view.graph, st.params, new_state)
            sv.view = new_view
            sv.state = new_state
            return {
                "graph": view_graph_dict(sv),
                "snapshot": layout_mod.snapshot_dict(sv.state),
            }

    @app.get("/api/search")
    def api_search(q: str = "", mode: str = "keyword", k: int = 10, view: str = DEFAULT_VIEW_ID):
        st = need_state()
        if mode not in ("keyword", "semantic"):
            raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}")
        if k < 1:
            raise HTTPException(status_code=400, detail="k must be >= 1")
        sv = get_view(st, view)
        try:
            if mode == "keyword":
                hits = search_mod.keyword_search(sv.view.graph, q, limit=k)
            else:
                if st.index is None or st.embedder is None:
                    raise HTTPException(status_code=503, detail="semantic index not built")
                hits = search_mod.semantic_search(st.index, q, k, st.embedder)
        except EmptyQuery as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return [search_hit_dict(h) for h in hits]

    @app.get("/api/bills/{bill_id}")
    def api_bills(bill_id: str):
        st = need_state()
        mapping = st.bills.get(bill_id)
        if mapping is None:
            raise HTTPException(status_code=404, detail=f"unknown bill {bill_id!r}")
        doc = st.registry.get(mapping["document_id"])
        if doc is None:
            raise HTTPException(
                status_code=404,
                detail=f"document {mapping['document_id']!r} is not registered",
            )
        return {"uri": doc["uri"], "page": mapping["page"]}

    @app.post("/api/filter")
    async def api_filter(request: Request):
        st = need_state()
        try:
            body = await request.json()
        except Exception as exc:
            raise HTTPException(status_code=400, detail="request body is not JSON") from exc
        spec = parse_filter_spec(body)
        filtered = st.graph.filter_subgraph(spec)
        view_id = f"view-{next(st.view_counter):04d}"
        sv = SessionView(
            view_id=view_id,
            view=cluster_mod.new_view(filtered),
            state=layout_mod.run_to_convergence(filtered, st.params),
            filters=spec,
        )
        put_view(st, sv)
        return {"view_id": view_id}

    cfg_obj = cfg
    if cfg_obj is not None and cfg_obj.documents_dir and Path(cfg_obj.documents_dir).is_dir():
        app.mount(
            "/documents",
            StaticFiles(directory=cfg_obj.documents_dir),
            name="documents",
        )
    if cfg_obj is not None and cfg_obj.ui_dir and Path(cfg_obj.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=cfg_obj.ui_dir, html=True), name="ui")

        @app.get("/")
        def root():
            return RedirectResponse(url="/ui/")

    return app


def parse_filter_spec(body) -> FilterSpec:
    if not isinstance(body, dict):
        raise HTTPException(status_code=400, detail="filter spec must be an object")
    allowed = {"entity_types", "tags", "rel_types"}
    unknown = sorted(set(body) - allowed)
    if unknown:
        raise HTTPException(status_code=400, detail=f"unknown filter keys: {unknown}")
    kwargs = {}
    for key in allowed:
        if key not in body or body[key] is None:
            continue
        values = body[key]
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise HTTPException(status_code=400, detail=f"{key} must be a list of strings")
        if key == "entity_types":
            bad = sorted(set(values) - set(ENTITY_TYPES))
            if bad:
                raise HTTPException(status_code=400, detail=f"unknown entity_types: {bad}")
            kwargs[key] = frozenset(values)
        elif key == "rel_types":
            bad = sorted(set(values) - set(REL_TYPES))
            if bad:
                raise HTTPException(status_code=400, detail=f"unknown rel_types: {bad}")
            kwargs[key] = frozenset(values)
        else:
            kwargs[key] = frozenset(v.strip().lower() for v in values)
    return FilterSpec(**kwargs)
