"""Force-directed 2D layout with pinning, freeze mode, and label collision
resolution.

Nodes repel with magnitude c_rep*k^2/d and connected nodes attract with
c_att*d^2/k, so an isolated connected pair settles at distance
k*(c_rep/c_att)^(1/3). Updates are synchronous (all forces computed from
the pre-step positions) and every per-node displacement is clamped to the
current temperature, which cools geometrically. Everything is
deterministic given (graph, params, seed): initial positions and
singularity jitter are derived by hashing, never from global RNG state.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import UnknownEntity
from .graph import LogGraph


@dataclass(frozen=True)
class LayoutParams:
    ideal_edge_length: float = 1.0
    repulsion_constant: float = 1.0
    attraction_constant: float = 1.0
    cooling_factor: float = 0.95
    initial_temperature: float | None = None  # default: k/2 * sqrt(n)
    max_iterations: int = 500
    convergence_epsilon: float | None = None  # default: 1e-3 * k
    seed: int = 0
    repulsion_mode: str = "exact"  # "exact" | "barnes_hut"
    barnes_hut_theta: float = 0.5

    def __post_init__(self):
        if self.ideal_edge_length <= 0:
            raise ValueError("ideal_edge_length must be > 0")
        if self.repulsion_constant <= 0 or self.attraction_constant <= 0:
            raise ValueError("force constants must be > 0")
        if not 0 < self.cooling_factor < 1:
            raise ValueError("cooling_factor must be in (0, 1)")
        if self.initial_temperature is not None and self.initial_temperature <= 0:
            raise ValueError("initial_temperature must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_epsilon is not None and self.convergence_epsilon <= 0:
            raise ValueError("convergence_epsilon must be > 0")
        if self.repulsion_mode not in ("exact", "barnes_hut"):
            raise ValueError(f"unknown repulsion_mode {self.repulsion_mode!r}")

    def start_temperature(self, n: int) -> float:
        if self.initial_temperature is not None:
            return self.initial_temperature
        return self.ideal_edge_length / 2 * math.sqrt(n)

    def epsilon(self) -> float:
        if self.convergence_epsilon is not None:
            return self.convergence_epsilon
        return 1e-3 * self.ideal_edge_length


@dataclass(frozen=True)
class LayoutState:
    positions: dict  # id -> (x, y)
    pinned: frozenset = frozenset()
    temperature: float = 0.0
    iteration: int = 0
    converged: bool = False


@dataclass
class LabelBox:
    entity_id: str
    cx: float
    cy: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("label width and height must be > 0")


@dataclass
class LabelResolution:
    labels: list
    passes_run: int
    remaining_overlaps: int


# ── deterministic sampling ──


def _hash01(seed: int, *parts) -> float:
    """Uniform-ish float in [0, 1) derived by hashing (seed, parts)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack(">q", seed))
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "big") / 2.0**64


def _sample_in_disc(seed: int, node_id: str, radius: float, attempt: int = 0):
    r = radius * math.sqrt(_hash01(seed, "r", node_id, attempt))
    theta = 2.0 * math.pi * _hash01(seed, "theta", node_id, attempt)
    return (r * math.cos(theta), r * math.sin(theta))


def init_layout(g: LogGraph, p: LayoutParams) -> LayoutState:
    """Positions sampled uniformly in a disc of radius k*sqrt(n) around the
    origin, deterministically from the seed; coincident samples re-jittered."""
    ids = sorted(g.entities)
    n = len(ids)
    radius = p.ideal_edge_length * math.sqrt(n)
    positions = {}
    taken = set()
    for node_id in ids:
        attempt = 0
        xy = _sample_in_disc(p.seed, node_id, radius, attempt)
        while xy in taken:
            attempt += 1
            xy = _sample_in_disc(p.seed, node_id, radius, attempt)
        taken.add(xy)
        positions[node_id] = xy
    return LayoutState(
        positions=positions,
        pinned=frozenset(),
        temperature=p.start_temperature(n),
        iteration=0,
        converged=n == 0,
    )


# ── forces ──


def _pair_jitter_unit(seed: int, id_a: str, id_b: str):
    lo, hi = sorted((id_a, id_b))
    theta = 2.0 * math.pi * _hash01(seed, "jitter", lo, hi)
    return math.cos(theta), math.sin(theta)


def _exact_repulsion(pos: np.ndarray, ids, p: LayoutParams) -> np.ndarray:
    k = p.ideal_edge_length
    numerator = p.repulsion_constant * (k * k)
    diff = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    n = len(ids)
    eye = np.eye(n, dtype=bool)
    coincident = (d == 0.0) & ~eye
    d_safe = np.where(d > 0.0, d, 1.0)
    force = numerator / d_safe
    force[eye] = 0.0
    force[coincident] = 0.0
    disp = np.sum((diff / d_safe[:, :, None]) * force[:, :, None], axis=1)
    if coincident.any():
        # Coincident pairs get a hash-derived direction at a nominal tiny
        # distance; the temperature clamp bounds the resulting kick.
        d_eps = 1e-3 * k
        for i, j in zip(*np.nonzero(np.triu(coincident, k=1))):
            ux, uy = _pair_jitter_unit(p.seed, ids[i], ids[j])
            f = numerator / d_eps
            disp[i, 0] += ux * f
            disp[i, 1] += uy * f
            disp[j, 0] -= ux * f
            disp[j, 1] -= uy * f
    return disp


class _QuadNode:
    __slots__ = ("cx", "cy", "half", "count", "com_x", "com_y", "children", "points")

    def __init__(self, cx, cy, half):
        self.cx = cx
        self.cy = cy
        self.half = half
        self.count = 0
        self.com_x = 0.0
        self.com_y = 0.0
        self.children = None
        self.points = []  # (index, x, y) while a leaf


_MAX_QUAD_DEPTH = 32


def _quad_insert(node: _QuadNode, idx: int, x: float, y: float, depth: int = 0):
    node.count += 1
    node.com_x += x
    node.com_y += y
    if node.children is None:
        node.points.append((idx, x, y))
        if len(node.points) > 1 and depth < _MAX_QUAD_DEPTH:
            points, node.points = node.points, []
            node.children = []
            h = node.half / 2.0
            for dx in (-1.0, 1.0):
                for dy in (-1.0, 1.0):
                    node.children.append(_QuadNode(node.cx + dx * h, node.cy + dy * h, h))
            for pi, px, py in points:
                child = node.children[(2 if px >= node.cx else 0) + (1 if py >= node.cy else 0)]
                _quad_insert(child, pi, px, py, depth + 1)
        return
    child = node.children[(2 if x >= node.cx else 0) + (1 if y >= node.cy else 0)]
    _quad_insert(child, idx, x, y, depth + 1)


def _quad_force(node: _QuadNode, idx: int, x: float, y: float, numerator: float,
                theta: float, out):
    if node.count == 0:
        return
    if node.children is None:
        for pi, px, py in node.points:
            if pi == idx:
                continue
            dx = x - px
            dy = y - py
            d = math.sqrt(dx * dx + dy * dy)
            if d == 0.0:
                continue  # coincident leaf pairs handled by the caller
            f = numerator / d
            out[0] += dx / d * f
            out[1] += dy / d * f
        return
    com_x = node.com_x / node.count
    com_y = node.com_y / node.count
    dx = x - com_x
    dy = y - com_y
    d = math.sqrt(dx * dx + dy * dy)
    if d > 0.0 and (2.0 * node.half) / d < theta:
        f = node.count * numerator / d
        out[0] += dx / d * f
        out[1] += dy / d * f
        return
    for child in node.children:
        _quad_force(child, idx, x, y, numerator, theta, out)


def _barnes_hut_repulsion(pos: np.ndarray, ids, p: LayoutParams) -> np.ndarray:
    k = p.ideal_edge_length
    numerator = p.repulsion_constant * (k * k)
    n = len(ids)
    disp = np.zeros((n, 2))
    if n < 2:
        return disp
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    half = max((hi - lo).max() / 2.0, 1e-9)
    root = _QuadNode((lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0, half * 1.0000001)
    for i in range(n):
        _quad_insert(root, i, pos[i, 0], pos[i, 1])
    for i in range(n):
        out = [0.0, 0.0]
        _quad_force(root, i, pos[i, 0], pos[i, 1], numerator, p.barnes_hut_theta, out)
        disp[i, 0] = out[0]
        disp[i, 1] = out[1]
    # Coincident pairs are invisible to the tree walk above; give them the
    # same deterministic jitter as the exact path.
    seen = {}
    for i in range(n):
        key = (pos[i, 0], pos[i, 1])
        if key in seen:
            j = seen[key]
            ux, uy = _pair_jitter_unit(p.seed, ids[j], ids[i])
            f = numerator / (1e-3 * k)
            disp[j, 0] += ux * f
            disp[j, 1] += uy * f
            disp[i, 0] -= ux * f
            disp[i, 1] -= uy * f
        else:
            seen[key] = i
    return disp


def compute_displacements(g: LogGraph, state: LayoutState, p: LayoutParams) -> dict:
    """Net (unclamped) force vector per node from the pre-step positions."""
    ids = sorted(state.positions)
    index = {node_id: i for i, node_id in enumerate(ids)}
    pos = np.array([state.positions[node_id] for node_id in ids], dtype=np.float64)
    if len(ids) == 0:
        return {}
    if p.repulsion_mode == "barnes_hut":
        disp = _barnes_hut_repulsion(pos, ids, p)
    else:
        disp = _exact_repulsion(pos, ids, p)

    k = p.ideal_edge_length
    for rel_id in sorted(g.relationships):
        r = g.relationships[rel_id]
        if r.source == r.target:
            continue
        i = index[r.source]
        j = index[r.target]
        dx = pos[i, 0] - pos[j, 0]
        dy = pos[i, 1] - pos[j, 1]
        d = math.sqrt(dx * dx + dy * dy)
        if d == 0.0:
            continue  # attraction d^2/k vanishes at d=0
        f = p.attraction_constant * (d * d) / k
        ux = dx / d
        uy = dy / d
        disp[i, 0] -= ux * f
        disp[i, 1] -= uy * f
        disp[j, 0] += ux * f
        disp[j, 1] += uy * f
    return {node_id: (disp[index[node_id], 0], disp[index[node_id], 1]) for node_id in ids}


def step(g: LogGraph, state: LayoutState, p: LayoutParams) -> LayoutState:
    """One synchronous simulation step; pinned nodes never move."""
    ids = sorted(state.positions)
    if not ids:
        return replace(state, converged=True, iteration=state.iteration + 1)
    forces = compute_displacements(g, state, p)
    temp = state.temperature
    positions = {}
    max_move = 0.0
    for node_id in ids:
        x, y = state.positions[node_id]
        if node_id in state.pinned:
            positions[node_id] = (x, y)
            continue
        fx, fy = forces[node_id]
        norm = math.sqrt(fx * fx + fy * fy)
        if norm > 0.0:
            move = min(norm, temp)
            positions[node_id] = (x + fx / norm * move, y + fy / norm * move)
            max_move = max(max_move, move)
        else:
            positions[node_id] = (x, y)
    return LayoutState(
        positions=positions,
        pinned=state.pinned,
        temperature=temp * p.cooling_factor,
        iteration=state.iteration + 1,
        converged=max_move < p.epsilon(),
    )


def run_to_convergence(g: LogGraph, p: LayoutParams, state: LayoutState | None = None) -> LayoutState:
    """Steps until converged or the iteration budget is spent."""
    if state is None:
        state = init_layout(g, p)
    while not state.converged and state.iteration < p.max_iterations:
        state = step(g, state, p)
    return state


# ── pinning ──


def pin(state: LayoutState, node_id: str) -> LayoutState:
    if node_id not in state.positions:
        raise UnknownEntity(node_id)
    return replace(state, pinned=state.pinned | {node_id})


def unpin(state: LayoutState, node_id: str) -> LayoutState:
    if node_id not in state.positions:
        raise UnknownEntity(node_id)
    return replace(state, pinned=state.pinned - {node_id})


def freeze_all(state: LayoutState) -> LayoutState:
    return replace(state, pinned=frozenset(state.positions))


def reheat(state: LayoutState, p: LayoutParams) -> LayoutState:
    """Warm restart after a graph mutation: half the initial temperature."""
    n = len(state.positions)
    return replace(
        state,
        temperature=p.start_temperature(n) * 0.5,
        converged=False,
    )


def adapt_state(state: LayoutState, g: LogGraph, p: LayoutParams,
                placed: dict | None = None) -> LayoutState:
    """Re-aligns a state with a mutated graph: removed ids are dropped and
    new ids get positions (from `placed` when given, else sampled)."""
    placed = placed or {}
    ids = sorted(g.entities)
    radius = p.ideal_edge_length * math.sqrt(len(ids))
    positions = {}
    pinned = set()
    taken = set(state.positions[i] for i in ids if i in state.positions)
    for node_id in ids:
        if node_id in state.positions:
            positions[node_id] = state.positions[node_id]
        elif node_id in placed:
            positions[node_id] = tuple(placed[node_id])
        else:
            attempt = 0
            xy = _sample_in_disc(p.seed, node_id, radius, attempt)
            while xy in taken:
                attempt += 1
                xy = _sample_in_disc(p.seed, node_id, radius, attempt)
            taken.add(xy)
            positions[node_id] = xy
    pinned = frozenset(i for i in state.pinned if i in g.entities)
    return replace(state, positions=positions, pinned=pinned)


# ── label collision resolution ──


# Penetrations below this are rounding residue from a previous equal-split
# push (the re-derived extent rarely cancels to exactly zero); counting
# them as overlaps would leave pairs oscillating at the 1e-16 scale.
_TOUCH_EPS = 1e-9


def _overlap_extent(a: LabelBox, b: LabelBox):
    ox = (a.width + b.width) / 2.0 - abs(a.cx - b.cx)
    oy = (a.height + b.height) / 2.0 - abs(a.cy - b.cy)
    return ox, oy


def total_overlap_area(labels) -> float:
    """Sum of pairwise intersection areas."""
    area = 0.0
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            ox, oy = _overlap_extent(labels[i], labels[j])
            if ox > _TOUCH_EPS and oy > _TOUCH_EPS:
                area += ox * oy
    return area


def count_overlaps(labels) -> int:
    hits = 0
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            ox, oy = _overlap_extent(labels[i], labels[j])
            if ox > _TOUCH_EPS and oy > _TOUCH_EPS:
                hits += 1
    return hits


def separation_pass(labels) -> list:
    """One sweep of pairwise separation along the minimum-penetration axis,
    splitting the displacement equally between the two boxes."""
    out = [copy_label(b) for b in labels]
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            a, b = out[i], out[j]
            ox, oy = _overlap_extent(a, b)
            if ox <= _TOUCH_EPS or oy <= _TOUCH_EPS:
                continue
            if ox <= oy:
                direction = 1.0 if b.cx >= a.cx else -1.0
                a.cx -= direction * ox / 2.0
                b.cx += direction * ox / 2.0
            else:
                direction = 1.0 if b.cy >= a.cy else -1.0
                a.cy -= direction * oy / 2.0
                b.cy += direction * oy / 2.0
    return out


def copy_label(b: LabelBox) -> LabelBox:
    return LabelBox(b.entity_id, b.cx, b.cy, b.width, b.height)


def resolve_label_overlaps(labels, max_passes: int = 100) -> LabelResolution:
    """Iterates separation passes until no boxes overlap or the pass budget
    runs out; reports the remaining overlap count either way."""
    current = [copy_label(b) for b in labels]
    passes = 0
    while passes < max_passes and count_overlaps(current) > 0:
        current = separation_pass(current)
        passes += 1
    return LabelResolution(
        labels=current,
        passes_run=passes,
        remaining_overlaps=count_overlaps(current),
    )


# ── snapshot serialization ──


def snapshot_dict(state: LayoutState) -> dict:
    return {
        "iteration": state.iteration,
        "converged": state.converged,
        "positions": {node_id: [x, y] for node_id, (x, y) in sorted(state.positions.items())},
        "pinned": sorted(state.pinned),
    }


def snapshot_json(state: LayoutState) -> str:
    return json.dumps(snapshot_dict(state), indent=2, sort_keys=True)


def snapshot_from_dict(data: dict) -> LayoutState:
    return LayoutState(
        positions={node_id: (xy[0], xy[1]) for node_id, xy in data.get("positions", {}).items()},
        pinned=frozenset(data.get("pinned", [])),
        iteration=int(data.get("iteration", 0)),
        converged=bool(data.get("converged", False)),
    )
