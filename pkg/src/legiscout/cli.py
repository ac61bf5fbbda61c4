"""Command-line entry points.

Exit codes: 0 success, 1 domain error (validation, extraction, search
failures), 2 environment or I/O error, 64 usage error. Every subcommand
is deterministic for identical inputs and flags; `serve` is the only
long-running command. Dataset arguments accept either a path to a
`log-v1` graph file or `fixture:<name>` for a packaged dataset.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fixtures
from .errors import EmptyQuery, LegiscoutError, UnattachedSegment, ValidationError
from .ingest import DatasetBundle, load_dataset

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_ENV = 2
EXIT_USAGE = 64

FIXTURE_SCHEME = "fixture:"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bundle_from_args(args) -> DatasetBundle:
    target = args.graph
    if target.startswith(FIXTURE_SCHEME):
        fixture = fixtures.bundle(target[len(FIXTURE_SCHEME):])
        return DatasetBundle(
            graph_file=fixture.graph_file,
            corpus_file=Path(args.corpus) if args.corpus else fixture.corpus_file,
            documents_file=Path(args.documents) if args.documents else fixture.documents_file,
        )
    return DatasetBundle(
        graph_file=Path(target),
        corpus_file=Path(args.corpus) if args.corpus else None,
        documents_file=Path(args.documents) if args.documents else None,
    )


def _add_bundle_args(sub) -> None:
    sub.add_argument("graph", help="log-v1 graph file, or fixture:<name>")
    sub.add_argument("--corpus", help="corpus file (JSON sections or text blob)")
    sub.add_argument("--documents", help="bill-to-document mapping file")
    sub.add_argument(
        "--lenient", action="store_true",
        help="drop unknown fields with a warning instead of rejecting them",
    )


def _add_layout_args(sub) -> None:
    sub.add_argument("--seed", type=int, default=0, help="layout seed (default 0)")
    sub.add_argument("--k", type=float, default=1.0, help="ideal edge length (default 1.0)")
    sub.add_argument("--max-iterations", type=int, default=500)
    sub.add_argument(
        "--mode", choices=("exact", "barnes_hut"), default="exact",
        help="repulsion evaluation mode",
    )


def _layout_params(args):
    from .layout import LayoutParams

    return LayoutParams(
        seed=args.seed,
        ideal_edge_length=args.k,
        max_iterations=args.max_iterations,
        repulsion_mode=args.mode,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="legiscout", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="validate a dataset bundle")
    _add_bundle_args(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("layout", help="run the layout to convergence and write a snapshot")
    _add_bundle_args(p)
    _add_layout_args(p)
    p.add_argument("-o", "--output", required=True, help="snapshot JSON path")
    p.set_defaults(func=cmd_layout)

    p = subs.add_parser("index", help="chunk the corpus and build a search index")
    _add_bundle_args(p)
    p.add_argument("--embedder", default="hash-ngram-v1",
                   help="embedder id or remote endpoint URL")
    p.add_argument("--max-tokens", type=int, default=48)
    p.add_argument("--overlap-tokens", type=int, default=8)
    p.add_argument("-o", "--output", required=True, help="index file path")
    p.set_defaults(func=cmd_index)

    p = subs.add_parser("search", help="query a search index")
    p.add_argument("index", help="index file written by `index`")
    p.add_argument("-q", "--query", required=True)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--embedder", default="hash-ngram-v1")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_search)

    p = subs.add_parser("extract", help="extract a graph from a chart raster")
    p.add_argument("image", help="PGM (P5) or PNG grayscale chart image")
    p.add_argument("--labels", help="sidecar JSON mapping entity id to box index")
    p.add_argument("--threshold", type=int, default=128)
    p.add_argument("--min-size", type=int, default=8)
    p.add_argument("--close-radius", type=int, default=0)
    p.add_argument("--expected-length", type=float, default=25.0,
                   help="expected connector length in px (vote floor is 0.6x this)")
    p.add_argument("--attach-radius", type=float, default=5.0)
    p.add_argument("-o", "--output", required=True, help="log-v1 graph output path")
    p.add_argument("--report", help="extraction report path (default: <output>.report.json)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("serve", help="serve a dataset over HTTP")
    _add_bundle_args(p)
    p.add_argument("--config", help="server config JSON file")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--documents-dir", default=None)
    p.add_argument("--ui-dir", default=None)
    p.set_defaults(func=cmd_serve)

    p = subs.add_parser("report", help="write CSV summaries and figures for a dataset")
    _add_bundle_args(p)
    _add_layout_args(p)
    p.add_argument("-o", "--output", required=True, help="report output directory")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_report)
    return parser


# ── subcommand handlers ──


def cmd_validate(args) -> int:
    bundle = _bundle_from_args(args)
    try:
        loaded = load_dataset(bundle, strict=not args.lenient)
    except ValidationError as exc:
        if args.format == "json":
            print(json.dumps({"ok": False, "problems": exc.violations}, indent=2))
        else:
            for problem in exc.violations:
                print(f"error: {problem}")
            print(f"{len(exc.violations)} problem(s) found")
        return EXIT_DOMAIN
    if args.format == "json":
        print(json.dumps({"ok": True, "problems": [], "warnings": loaded.warnings}, indent=2))
    else:
        for warning in loaded.warnings:
            print(f"warning: {warning}")
        print(
            f"ok: {loaded.graph.entity_count} entities, "
            f"{loaded.graph.relationship_count} relationships, "
            f"{len(loaded.corpus)} corpus sections"
        )
    return EXIT_OK


def cmd_layout(args) -> int:
    from .layout import run_to_convergence, snapshot_json

    bundle = _bundle_from_args(args)
    loaded = load_dataset(bundle, strict=not args.lenient)
    state = run_to_convergence(loaded.graph, _layout_params(args))
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(snapshot_json(state))
        fh.write("\n")
    print(
        f"wrote {args.output}: {len(state.positions)} positions, "
        f"iteration {state.iteration}, converged={state.converged}"
    )
    return EXIT_OK


def cmd_index(args) -> int:
    from .search import build_index, chunk_corpus, save_index
    from .server import make_embedder

    bundle = _bundle_from_args(args)
    loaded = load_dataset(bundle, strict=not args.lenient)
    if not loaded.corpus:
        raise ValidationError(["bundle has no corpus to index"])
    chunks = chunk_corpus(loaded.corpus, args.max_tokens, args.overlap_tokens)
    index = build_index(chunks, make_embedder(args.embedder))
    save_index(index, args.output)
    print(f"wrote {args.output}: {len(index)} chunks, embedder {index.embedder_id}")
    return EXIT_OK


def cmd_search(args) -> int:
    from .search import load_index, semantic_search
    from .server import make_embedder

    if not args.query.strip():
        raise UsageError("query must be non-empty")
    if args.k < 1:
        raise UsageError("-k must be >= 1")
    embedder = make_embedder(args.embedder)
    index = load_index(args.index, expected_embedder_id=embedder.embedder_id)
    hits = semantic_search(index, args.query, args.k, embedder)
    if args.format == "json":
        from .server import search_hit_dict

        print(json.dumps([search_hit_dict(h) for h in hits], indent=2))
        return EXIT_OK
    for rank, hit in enumerate(hits, start=1):
        page = hit.bill_ref.page if hit.bill_ref else "?"
        section = hit.bill_ref.bill_id if hit.bill_ref else "?"
        print(f"{rank}. {hit.target}  score={hit.score:.4f}  section={section}  page={page}")
        if hit.snippet:
            print(f"   {hit.snippet}")
    return EXIT_OK


def cmd_extract(args) -> int:
    from .extract import extract_chart, extraction_report_dict, load_image

    image = load_image(args.image)
    labels = None
    if args.labels:
        with open(args.labels, "r", encoding="utf-8") as fh:
            labels = json.load(fh)
    try:
        result = extract_chart(
            image,
            threshold=args.threshold,
            min_size=args.min_size,
            close_radius=args.close_radius,
            expected_connector_length=args.expected_length,
            attach_radius=args.attach_radius,
            labels=labels,
        )
    except UnattachedSegment as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    report = extraction_report_dict(result)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(result.inferred.to_json())
        fh.write("\n")
    report_path = args.report or f"{args.output}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.format == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(
            f"wrote {args.output}: {result.inferred.entity_count} entities, "
            f"{result.inferred.relationship_count} relationships "
            f"({len(result.boxes)} boxes, {len(result.segments)} segments)"
        )
    return EXIT_OK


def cmd_serve(args) -> int:
    import socket

    import uvicorn

    from .server import build_state, create_app, load_config

    cfg = load_config(args.config)
    bundle = _bundle_from_args(args)
    cfg.graph_file = str(bundle.graph_file)
    cfg.corpus_file = str(bundle.corpus_file) if bundle.corpus_file else None
    cfg.documents_file = str(bundle.documents_file) if bundle.documents_file else None
    if args.graph.startswith(FIXTURE_SCHEME) and not (args.documents_dir or cfg.documents_dir):
        cfg.documents_dir = str(fixtures.documents_dir(args.graph[len(FIXTURE_SCHEME):]))
    if args.documents_dir is not None:
        cfg.documents_dir = args.documents_dir
    if args.ui_dir is not None:
        cfg.ui_dir = args.ui_dir
    if args.host is not None:
        cfg.host = args.host
    if args.port is not None:
        cfg.port = args.port
    if args.lenient:
        cfg.strict = False

    state = build_state(cfg)
    app = create_app(state, cfg)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((cfg.host, cfg.port))
    bound_port = sock.getsockname()[1]
    print(f"serving on http://{cfg.host}:{bound_port}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    server.run(sockets=[sock])
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import build_report

    bundle = _bundle_from_args(args)
    loaded = load_dataset(bundle, strict=not args.lenient)
    summary = build_report(loaded, args.output, _layout_params(args))
    if args.format == "json":
        print(json.dumps(summary, indent=2, sort_keys=True))
    else:
        print(
            f"wrote {args.output}: {summary['entity_count']} entities, "
            f"{summary['relationship_count']} relationships, "
            f"layout converged={summary['layout_converged']}"
        )
    return EXIT_OK


class UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except (UsageError, EmptyQuery) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        for problem in exc.violations:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_DOMAIN
    except LegiscoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
