"""Command-line interface tests: exit codes, the fixture: dataset scheme,
deterministic artifact writes, the extraction path on a generated chart,
and the report directory with its delimited files and rendered figures.
All tests call main() in-process; one smoke test exercises the installed
console script.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from legiscout.cli import EXIT_DOMAIN, EXIT_ENV, EXIT_OK, EXIT_USAGE, main
from legiscout.extract import RasterImage, generate_chart, save_image
from legiscout.ingest import load_graph_file

FIXTURE = "fixture:aca-case-study"


def run(argv) -> int:
    return main(argv)


def write_graph(tmp_path: Path, body: dict, name: str = "graph.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return str(path)


MINIMAL = {
    "meta": {"schema": "log-v1"},
    "entities": [
        {"id": "a", "name": "Agency A", "entity_type": "federal_agency"},
        {"id": "b", "name": "Bureau B", "entity_type": "federal_agency"},
    ],
    "relationships": [
        {"id": "r1", "source": "a", "target": "b", "rel_type": "oversight"}
    ],
}


# ── exit codes ──


def test_validate_fixture_ok(capsys):
    assert run(["validate", FIXTURE]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ok:" in out and "9 entities" in out


def test_validate_broken_graph_is_domain_error(tmp_path, capsys):
    bad = dict(MINIMAL)
    bad["relationships"] = [
        {"id": "r1", "source": "a", "target": "ghost", "rel_type": "oversight"}
    ]
    code = run(["validate", write_graph(tmp_path, bad)])
    assert code == EXIT_DOMAIN
    assert "dangling endpoint" in capsys.readouterr().out


def test_missing_file_is_env_error(tmp_path, capsys):
    code = run(["validate", str(tmp_path / "absent.json")])
    assert code == EXIT_ENV
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert run(["frobnicate"]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_missing_required_argument_is_usage_error(tmp_path):
    assert run(["layout", FIXTURE]) == EXIT_USAGE  # no --output


def test_unknown_fixture_name_is_domain_error(capsys):
    assert run(["validate", "fixture:atlantis"]) == EXIT_DOMAIN
    assert "error:" in capsys.readouterr().err


# ── validate ──


def test_validate_json_format(capsys):
    assert run(["validate", FIXTURE, "--format", "json"]) == EXIT_OK
    body = json.loads(capsys.readouterr().out)
    assert body == {"ok": True, "problems": [], "warnings": []}


def test_validate_json_format_reports_problems(tmp_path, capsys):
    bad = dict(MINIMAL)
    bad["relationships"] = [
        {"id": "r1", "source": "a", "target": "ghost", "rel_type": "oversight"}
    ]
    code = run(["validate", write_graph(tmp_path, bad), "--format", "json"])
    assert code == EXIT_DOMAIN
    body = json.loads(capsys.readouterr().out)
    assert body["ok"] is False
    assert any("dangling endpoint" in p for p in body["problems"])


def test_validate_strict_rejects_unknown_field(tmp_path, capsys):
    odd = dict(MINIMAL)
    odd["entities"] = MINIMAL["entities"] + [
        {"id": "c", "name": "C", "entity_type": "other", "zodiac": "libra"}
    ]
    path = write_graph(tmp_path, odd)
    assert run(["validate", path]) == EXIT_DOMAIN
    assert "unknown field 'zodiac'" in capsys.readouterr().out
    assert run(["validate", path, "--lenient"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "warning:" in out and "zodiac" in out


# ── layout ──


def test_layout_writes_deterministic_snapshot(tmp_path, capsys):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert run(["layout", FIXTURE, "-o", str(first), "--seed", "7"]) == EXIT_OK
    assert run(["layout", FIXTURE, "-o", str(second), "--seed", "7"]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    body = json.loads(first.read_text())
    assert body["converged"] is True
    assert len(body["positions"]) == 9


def test_layout_seed_changes_snapshot(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run(["layout", FIXTURE, "-o", str(a), "--seed", "1"])
    run(["layout", FIXTURE, "-o", str(b), "--seed", "2"])
    assert a.read_bytes() != b.read_bytes()


def test_layout_barnes_hut_mode_runs(tmp_path):
    out = tmp_path / "bh.json"
    code = run(["layout", FIXTURE, "-o", str(out), "--mode", "barnes_hut"])
    assert code == EXIT_OK
    assert json.loads(out.read_text())["converged"] is True


# ── index and search ──


def test_index_then_search_round_trip(tmp_path, capsys):
    index_path = tmp_path / "chunks.idx"
    assert run(["index", FIXTURE, "-o", str(index_path)]) == EXIT_OK
    capsys.readouterr()
    code = run(
        ["search", str(index_path), "-q", "coverage for dependents up to age 26", "-k", "3"]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("1. sec-2714#")
    assert "page=57" in out


def test_index_rerun_is_byte_identical(tmp_path):
    a = tmp_path / "a.idx"
    b = tmp_path / "b.idx"
    run(["index", FIXTURE, "-o", str(a)])
    run(["index", FIXTURE, "-o", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_search_json_format(tmp_path, capsys):
    index_path = tmp_path / "chunks.idx"
    run(["index", FIXTURE, "-o", str(index_path)])
    capsys.readouterr()
    assert run(
        ["search", str(index_path), "-q", "medicaid eligibility", "--format", "json"]
    ) == EXIT_OK
    hits = json.loads(capsys.readouterr().out)
    assert hits and all({"target", "score", "kind"} <= set(h) for h in hits)


def test_search_usage_errors(tmp_path, capsys):
    index_path = tmp_path / "chunks.idx"
    run(["index", FIXTURE, "-o", str(index_path)])
    assert run(["search", str(index_path), "-q", "   "]) == EXIT_USAGE
    assert run(["search", str(index_path), "-q", "x", "-k", "0"]) == EXIT_USAGE


def test_search_missing_index_is_env_error(tmp_path):
    assert run(["search", str(tmp_path / "no.idx"), "-q", "x"]) == EXIT_ENV


def test_search_embedder_mismatch_is_domain_error(tmp_path, capsys):
    index_path = tmp_path / "chunks.idx"
    run(["index", FIXTURE, "-o", str(index_path)])
    body = json.loads(index_path.read_text())
    body["embedder_id"] = "other-embedder-v0"
    index_path.write_text(json.dumps(body))
    assert run(["search", str(index_path), "-q", "x"]) == EXIT_DOMAIN
    assert "other-embedder-v0" in capsys.readouterr().err


# ── extract ──


def test_extract_generated_chart(tmp_path, capsys):
    truth = generate_chart(n_boxes=6, seed=3)
    image_path = tmp_path / "chart.pgm"
    save_image(truth.image, image_path)
    out_path = tmp_path / "extracted.json"
    code = run(["extract", str(image_path), "-o", str(out_path)])
    assert code == EXIT_OK
    graph, warnings = load_graph_file(out_path, strict=True)
    # Extracted entities carry no styling; everything else must be clean.
    assert all("style hint" in w for w in warnings)
    assert graph.entity_count == len(truth.boxes)
    assert graph.relationship_count == len(truth.edges)
    report = json.loads((tmp_path / "extracted.json.report.json").read_text())
    assert set(report) == {"boxes", "segments", "graph"}
    assert len(report["boxes"]) == len(truth.boxes)


def test_extract_with_labels_sidecar(tmp_path):
    truth = generate_chart(n_boxes=4, seed=9)
    image_path = tmp_path / "chart.pgm"
    save_image(truth.image, image_path)
    labels_path = tmp_path / "labels.json"
    labels_path.write_text(json.dumps({"alpha": 0, "beta": 1}))
    out_path = tmp_path / "out.json"
    code = run(
        ["extract", str(image_path), "--labels", str(labels_path), "-o", str(out_path)]
    )
    assert code == EXIT_OK
    graph, _ = load_graph_file(out_path)
    assert {"alpha", "beta"} <= set(graph.entities)


def test_extract_orphan_segment_is_domain_error(tmp_path, capsys):
    import numpy as np

    canvas = np.full((80, 80), 255, np.uint8)
    canvas[10:30, 10:30] = 0  # one box
    canvas[60:62, 20:60] = 0  # a line far from any box
    image_path = tmp_path / "orphan.pgm"
    save_image(RasterImage(canvas), image_path)
    code = run(["extract", str(image_path), "-o", str(tmp_path / "out.json")])
    assert code == EXIT_DOMAIN
    assert "error:" in capsys.readouterr().err


def test_extract_json_format_prints_report(tmp_path, capsys):
    truth = generate_chart(n_boxes=3, seed=5)
    image_path = tmp_path / "chart.pgm"
    save_image(truth.image, image_path)
    code = run(
        ["extract", str(image_path), "-o", str(tmp_path / "out.json"), "--format", "json"]
    )
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"boxes", "segments", "graph"}


def test_extract_missing_image_is_env_error(tmp_path):
    code = run(["extract", str(tmp_path / "no.pgm"), "-o", str(tmp_path / "o.json")])
    assert code == EXIT_ENV


# ── report ──


def test_report_writes_tables_and_figures(tmp_path, capsys):
    out_dir = tmp_path / "report"
    assert run(["report", FIXTURE, "-o", str(out_dir)]) == EXIT_OK
    names = {p.name for p in out_dir.iterdir()}
    assert names == {
        "entities.csv",
        "relationships.csv",
        "layout.png",
        "degree_histogram.png",
        "summary.json",
    }
    for figure in ("layout.png", "degree_histogram.png"):
        data = (out_dir / figure).read_bytes()
        assert data.startswith(b"\x89PNG\r\n\x1a\n")
        assert len(data) > 1000

    entities = (out_dir / "entities.csv").read_text().splitlines()
    assert entities[0] == "id,name,entity_type,degree,tags,bill_ids"
    assert len(entities) == 1 + 9
    relationships = (out_dir / "relationships.csv").read_text().splitlines()
    assert relationships[0] == "id,source,target,rel_type,directed,weight,line_style"
    assert len(relationships) > 1

    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["entity_count"] == 9
    assert summary["layout_converged"] is True
    assert summary["entities_by_type"]["federal_agency"] == 2


def test_report_tables_are_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run(["report", FIXTURE, "-o", str(a), "--seed", "4"])
    run(["report", FIXTURE, "-o", str(b), "--seed", "4"])
    for name in ("entities.csv", "relationships.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_report_json_format_prints_summary(tmp_path, capsys):
    assert run(
        ["report", FIXTURE, "-o", str(tmp_path / "r"), "--format", "json"]
    ) == EXIT_OK
    body = json.loads(capsys.readouterr().out)
    assert body["entity_count"] == 9


# ── console script ──


def test_console_script_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "legiscout.cli", "validate", FIXTURE],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_OK
    assert "ok:" in proc.stdout
