"""Dataset report: delimited summaries plus rendered figures.

Writes entities.csv and relationships.csv, a summary.json with headline
counts, and two matplotlib figures (layout.png, degree_histogram.png)
rendered with the Agg backend so the command works headless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import layout as layout_mod
from .graph import LINE_STYLES, LogGraph, default_line_style
from .ingest import LoadResult

_MARKER_BY_SHAPE = {"circle": "o", "square": "s", "diamond": "D"}
_DASH_BY_STYLE = {"solid": "-", "dashed": "--", "dotted": ":"}


def degree_counts(g: LogGraph) -> dict:
    degrees = {eid: 0 for eid in g.entities}
    for r in g.relationships.values():
        degrees[r.source] += 1
        if r.target != r.source:
            degrees[r.target] += 1
    return degrees


def write_entities_csv(g: LogGraph, path) -> None:
    degrees = degree_counts(g)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "name", "entity_type", "degree", "tags", "bill_ids"])
        for eid in sorted(g.entities):
            e = g.entities[eid]
            writer.writerow(
                [
                    eid,
                    e.name,
                    e.entity_type,
                    degrees[eid],
                    ";".join(sorted(e.tags)),
                    ";".join(sorted(ref.bill_id for ref in e.bill_refs)),
                ]
            )


def write_relationships_csv(g: LogGraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "source", "target", "rel_type", "directed", "weight", "line_style"])
        for rid in sorted(g.relationships):
            r = g.relationships[rid]
            writer.writerow(
                [rid, r.source, r.target, r.rel_type, r.directed, r.weight, r.line_style]
            )


def render_layout_figure(g: LogGraph, state: layout_mod.LayoutState, path) -> None:
    fig, ax = plt.subplots(figsize=(8, 8))
    for rid in sorted(g.relationships):
        r = g.relationships[rid]
        if r.source not in state.positions or r.target not in state.positions:
            continue
        x1, y1 = state.positions[r.source]
        x2, y2 = state.positions[r.target]
        ax.plot(
            [x1, x2],
            [y1, y2],
            _DASH_BY_STYLE[default_line_style(r.rel_type)],
            color="#777777",
            linewidth=0.8 + 0.4 * r.weight,
            zorder=1,
        )
    k = 1.0
    labels = []
    for eid in sorted(state.positions):
        e = g.entities[eid]
        x, y = state.positions[eid]
        shape = e.style_hint.shape if e.style_hint else "circle"
        ax.scatter(
            [x], [y], marker=_MARKER_BY_SHAPE.get(shape, "o"), s=140,
            color="#3d6fb4", edgecolors="#1d3f6e", zorder=2,
        )
        labels.append(
            layout_mod.LabelBox(
                entity_id=eid,
                cx=x,
                cy=y - 0.16 * k,
                width=0.08 * k * max(4, len(e.name)),
                height=0.12 * k,
            )
        )
    resolved = layout_mod.resolve_label_overlaps(labels)
    names = {eid: g.entities[eid].name for eid in state.positions}
    for box in resolved.labels:
        ax.text(
            box.cx, box.cy, names[box.entity_id],
            ha="center", va="center", fontsize=8, zorder=3,
        )
    ax.set_aspect("equal")
    ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_degree_histogram(g: LogGraph, path) -> None:
    degrees = sorted(degree_counts(g).values())
    fig, ax = plt.subplots(figsize=(6, 4))
    top = max(degrees) if degrees else 1
    ax.hist(degrees, bins=range(0, top + 2), color="#3d6fb4", edgecolor="white")
    ax.set_xlabel("degree")
    ax.set_ylabel("entities")
    ax.set_title("Degree distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def summary_dict(loaded: LoadResult, state: layout_mod.LayoutState) -> dict:
    g = loaded.graph
    by_type: dict = {}
    for e in g.entities.values():
        by_type[e.entity_type] = by_type.get(e.entity_type, 0) + 1
    by_rel: dict = {}
    for r in g.relationships.values():
        by_rel[r.rel_type] = by_rel.get(r.rel_type, 0) + 1
    return {
        "entity_count": g.entity_count,
        "relationship_count": g.relationship_count,
        "entities_by_type": dict(sorted(by_type.items())),
        "relationships_by_type": dict(sorted(by_rel.items())),
        "corpus_sections": len(loaded.corpus),
        "bills_mapped": len(loaded.documents),
        "layout_iterations": state.iteration,
        "layout_converged": state.converged,
        "warnings": list(loaded.warnings),
    }


def build_report(loaded: LoadResult, out_dir, params: layout_mod.LayoutParams) -> dict:
    """Writes all report files into out_dir and returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = loaded.graph
    state = layout_mod.run_to_convergence(g, params)
    write_entities_csv(g, out / "entities.csv")
    write_relationships_csv(g, out / "relationships.csv")
    render_layout_figure(g, state, out / "layout.png")
    render_degree_histogram(g, out / "degree_histogram.png")
    summary = summary_dict(loaded, state)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
