"""Synthetic chart extraction: rasters in, candidate graphs out.

The pipeline handles the clean regime only: dark axis-aligned filled
rectangles connected by straight dark lines on a light background. Ink is
0 and background is 255 after binarization. Boxes are connected
components whose bounding-box fill ratio is at least the rectangularity
tolerance; connectors are found by an iterative Hough peak extraction
over the remaining ink, and each surviving segment becomes one undirected
relationship between its two nearest boxes. Box labels come from an
optional sidecar map because OCR is out of scope.

A deterministic chart generator lives here too so extraction quality can
be scored against exact ground truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import NonBinaryInput, UnattachedSegment, ValidationError
from .graph import Entity, LogGraph, Relationship

RECTANGULARITY_MIN = 0.85
DEFAULT_MIN_BOX_SIZE = 8
DEFAULT_ATTACH_RADIUS = 5.0
DEFAULT_EXPECTED_CONNECTOR_LENGTH = 25.0
HOUGH_BAND_PX = 3.0
RUN_SPLIT_GAP_PX = 4.0
BOX_MASK_MARGIN_PX = 2


class RasterImage:
    """Row-major grayscale raster, intensities 0..255."""

    def __init__(self, pixels):
        arr = np.asarray(pixels, dtype=np.uint8)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("pixels must be a non-empty 2D array")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def copy(self) -> "RasterImage":
        return RasterImage(self.pixels.copy())

    def same_pixels(self, other: "RasterImage") -> bool:
        return bool(np.array_equal(self.pixels, other.pixels))


@dataclass(frozen=True)
class DetectedBox:
    x: int
    y: int
    w: int
    h: int
    confidence: float

    def border_distance(self, px: float, py: float) -> float:
        """Distance from a point to the box border (0 inside or on it)."""
        dx = max(self.x - px, 0.0, px - (self.x + self.w - 1))
        dy = max(self.y - py, 0.0, py - (self.y + self.h - 1))
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class DetectedSegment:
    endpoints: tuple  # ((x1, y1), (x2, y2))
    confidence: float

    def __post_init__(self):
        if self.endpoints[0] == self.endpoints[1]:
            raise ValueError("segment endpoints must be distinct")


@dataclass
class ExtractionResult:
    boxes: list
    segments: list
    inferred: LogGraph


# ── raster I/O ──


def load_image(path) -> RasterImage:
    from PIL import Image

    with Image.open(path) as im:
        return RasterImage(np.asarray(im.convert("L")))


def save_image(img: RasterImage, path) -> None:
    from PIL import Image

    Image.fromarray(img.pixels, mode="L").save(path)


# ── pixel transforms ──


def binarize(img: RasterImage, threshold: int) -> RasterImage:
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must be in [0, 255]")
    return RasterImage(np.where(img.pixels < threshold, 0, 255).astype(np.uint8))


def _require_binary(img: RasterImage) -> None:
    values = np.unique(img.pixels)
    if not np.all(np.isin(values, (0, 255))):
        raise NonBinaryInput("image has intensities other than {0, 255}")


def morphological_close(img: RasterImage, kernel_radius: int) -> RasterImage:
    """Dilates then erodes the ink with a square structuring element. The
    canvas is padded with background first so border behavior matches an
    infinite white plane and the operation is idempotent."""
    _require_binary(img)
    if kernel_radius < 0:
        raise ValueError("kernel_radius must be >= 0")
    if kernel_radius == 0:
        return img.copy()
    size = 2 * kernel_radius + 1
    ink = (img.pixels == 0).astype(np.uint8)
    pad = 2 * kernel_radius
    padded = np.pad(ink, pad, constant_values=0)
    dilated = ndimage.maximum_filter(padded, size=size, mode="constant", cval=0)
    closed = ndimage.minimum_filter(dilated, size=size, mode="constant", cval=0)
    closed = closed[pad:-pad, pad:-pad]
    return RasterImage(np.where(closed == 1, 0, 255).astype(np.uint8))


# ── shape detection ──


def detect_boxes(img: RasterImage, min_size: int = DEFAULT_MIN_BOX_SIZE) -> list:
    """Connected ink components that fill at least RECTANGULARITY_MIN of
    their bounding box and meet the size floor, sorted by (y, x).
    Thin connector lines fail the size floor (axis-aligned) or the fill
    ratio (oblique), which is what separates shapes from connectors."""
    _require_binary(img)
    ink = img.pixels == 0
    labels, count = ndimage.label(ink, structure=np.ones((3, 3), dtype=int))
    boxes = []
    for slice_y, slice_x in ndimage.find_objects(labels, count):
        component = labels[slice_y, slice_x] > 0
        h = slice_y.stop - slice_y.start
        w = slice_x.stop - slice_x.start
        filled = int(np.count_nonzero(component))
        rectangularity = filled / float(w * h)
        if w >= min_size and h >= min_size and rectangularity >= RECTANGULARITY_MIN:
            boxes.append(
                DetectedBox(
                    x=int(slice_x.start),
                    y=int(slice_y.start),
                    w=int(w),
                    h=int(h),
                    confidence=float(rectangularity),
                )
            )
    boxes.sort(key=lambda b: (b.y, b.x))
    return boxes


def _normalized_segment(x1, y1, x2, y2, confidence) -> DetectedSegment:
    a = (int(round(x1)), int(round(y1)))
    b = (int(round(x2)), int(round(y2)))
    if (a[1], a[0]) > (b[1], b[0]):
        a, b = b, a
    return DetectedSegment(endpoints=(a, b), confidence=confidence)


def detect_segments(
    img: RasterImage,
    boxes,
    expected_connector_length: float = DEFAULT_EXPECTED_CONNECTOR_LENGTH,
) -> list:
    """Hough transform over ink outside the boxes: 1-degree angle bins,
    1-px offset bins, peaks at or above 0.6x the expected connector length
    extracted iteratively and clipped to their supporting pixel runs."""
    _require_binary(img)
    vote_threshold = 0.6 * expected_connector_length
    ink = img.pixels == 0
    for b in boxes:
        y0 = max(b.y - BOX_MASK_MARGIN_PX, 0)
        x0 = max(b.x - BOX_MASK_MARGIN_PX, 0)
        ink[y0 : b.y + b.h + BOX_MASK_MARGIN_PX, x0 : b.x + b.w + BOX_MASK_MARGIN_PX] = False
    points = np.argwhere(ink)
    if len(points) == 0:
        return []
    ys = points[:, 0].astype(np.float64)
    xs = points[:, 1].astype(np.float64)

    thetas = np.deg2rad(np.arange(180, dtype=np.float64))
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)

    segments = []
    alive = np.ones(len(xs), dtype=bool)
    banned: set = set()
    while alive.any():
        ax = xs[alive]
        ay = ys[alive]
        rho = ax[:, None] * cos_t[None, :] + ay[:, None] * sin_t[None, :]
        rho_bin = np.rint(rho).astype(np.int64)
        # Vote per (angle, offset) bin; offsets shifted to non-negative.
        shift = rho_bin.min()
        width = rho_bin.max() - shift + 1
        flat = (rho_bin - shift) + np.arange(180)[None, :] * width
        counts = np.bincount(flat.ravel(), minlength=180 * width)
        for bad_angle, bad_rho in banned:
            if shift <= bad_rho < shift + width:
                counts[(bad_rho - shift) + bad_angle * width] = 0
        peak = int(np.argmax(counts))
        if counts[peak] < vote_threshold:
            break
        angle_idx = peak // width
        bin_rho = float(peak % width + shift)
        ca = cos_t[angle_idx]
        sa = sin_t[angle_idx]
        # Re-center the offset on the supporting ink so a thick line's far
        # row cannot escape the band when the peak bin sits on its edge row.
        rho_all = ax * ca + ay * sa
        seed_support = np.abs(rho_all - bin_rho) <= HOUGH_BAND_PX
        rho_star = float(np.mean(rho_all[seed_support]))
        support = np.abs(rho_all - rho_star) <= HOUGH_BAND_PX
        sup_idx = np.flatnonzero(support)
        t = -ax[support] * sa + ay[support] * ca
        order = np.argsort(t)
        t_sorted = t[order]
        emitted = []
        run_start = 0
        for i in range(1, len(t_sorted) + 1):
            if i == len(t_sorted) or t_sorted[i] - t_sorted[i - 1] > RUN_SPLIT_GAP_PX:
                t0 = t_sorted[run_start]
                t1 = t_sorted[i - 1]
                run_len = t1 - t0 + 1.0
                if run_len >= vote_threshold:
                    x1 = rho_star * ca - t0 * sa
                    y1 = rho_star * sa + t0 * ca
                    x2 = rho_star * ca - t1 * sa
                    y2 = rho_star * sa + t1 * ca
                    segments.append(
                        _normalized_segment(
                            x1, y1, x2, y2,
                            confidence=min(1.0, run_len / max(expected_connector_length, 1.0)),
                        )
                    )
                    emitted.extend(order[run_start:i])
                run_start = i
        if emitted:
            # Retire only the emitted runs' pixels. A band that grazes some
            # other line obliquely must not steal a bite out of it, or the
            # victim later splits into two spurious segments at the hole.
            alive_idx = np.flatnonzero(alive)
            alive[alive_idx[sup_idx[np.asarray(emitted)]]] = False
        else:
            # Nothing line-worthy on this bin; ban it without touching the
            # pixels so they stay available to their true line.
            banned.add((int(angle_idx), int(bin_rho)))
    segments.sort(key=lambda s: s.endpoints)
    return segments


# ── graph inference ──


def infer_graph(
    boxes,
    segments,
    labels: dict | None = None,
    attach_radius: float = DEFAULT_ATTACH_RADIUS,
) -> LogGraph:
    """One entity per box, one undirected relationship per segment joining
    the boxes nearest to its endpoints. Sidecar labels map entity id to
    box index; unlabeled boxes are named node_<index>."""
    labels = labels or {}
    by_index: dict = {}
    for name, idx in labels.items():
        if not isinstance(idx, int) or not 0 <= idx < len(boxes):
            raise ValidationError([f"label {name!r} points at box {idx!r}, which does not exist"])
        if idx in by_index:
            raise ValidationError(
                [f"labels {by_index[idx]!r} and {name!r} both point at box {idx}"]
            )
        by_index[idx] = name

    g = LogGraph.empty()
    ids = []
    for i, _box in enumerate(boxes):
        eid = by_index.get(i, f"node_{i}")
        ids.append(eid)
        g = g.add_entity(Entity(id=eid, name=eid, entity_type="other"))

    orphans = []
    attached = []
    for seg in segments:
        ends = []
        for px, py in seg.endpoints:
            best = None
            best_d = None
            for i, box in enumerate(boxes):
                d = box.border_distance(float(px), float(py))
                if best_d is None or d < best_d:
                    best, best_d = i, d
            if best is None or best_d > attach_radius:
                ends = None
                break
            ends.append(best)
        if ends is None or ends[0] == ends[1]:
            orphans.append(seg)
        else:
            attached.append((seg, ends[0], ends[1]))
    if orphans:
        raise UnattachedSegment(orphans)

    # A connector split into two runs attaches the same pair twice; the graph
    # holds one undirected edge per pair, so keep the strongest run.
    strongest: dict[tuple[int, int], DetectedSegment] = {}
    for seg, i, j in attached:
        key = (min(i, j), max(i, j))
        prior = strongest.get(key)
        if prior is None or seg.confidence > prior.confidence:
            strongest[key] = seg
    for k, ((i, j), seg) in enumerate(sorted(strongest.items())):
        g = g.add_relationship(
            Relationship(
                id=f"edge_{k}",
                source=ids[i],
                target=ids[j],
                rel_type="other",
                directed=False,
                weight=1.0,
                metadata={"confidence": f"{seg.confidence:.4f}"},
            )
        )
    return g


def extract_chart(
    img: RasterImage,
    threshold: int = 128,
    min_size: int = DEFAULT_MIN_BOX_SIZE,
    close_radius: int = 0,
    expected_connector_length: float = DEFAULT_EXPECTED_CONNECTOR_LENGTH,
    attach_radius: float = DEFAULT_ATTACH_RADIUS,
    labels: dict | None = None,
) -> ExtractionResult:
    """Full pipeline: binarize, optional closing, box and segment
    detection, graph inference."""
    binary = binarize(img, threshold)
    if close_radius > 0:
        binary = morphological_close(binary, close_radius)
    boxes = detect_boxes(binary, min_size=min_size)
    segments = detect_segments(
        binary, boxes, expected_connector_length=expected_connector_length
    )
    inferred = infer_graph(boxes, segments, labels=labels, attach_radius=attach_radius)
    return ExtractionResult(boxes=boxes, segments=segments, inferred=inferred)


def extraction_report_dict(result: ExtractionResult) -> dict:
    return {
        "boxes": [
            {"x": b.x, "y": b.y, "w": b.w, "h": b.h, "confidence": b.confidence}
            for b in result.boxes
        ],
        "segments": [
            {
                "endpoints": [list(p) for p in s.endpoints],
                "confidence": s.confidence,
            }
            for s in result.segments
        ],
        "graph": result.inferred.to_dict(),
    }


# ── synthetic chart generator ──


@dataclass
class ChartTruth:
    boxes: list  # (x, y, w, h)
    edges: list  # (box index, box index), i < j
    image: RasterImage


CONNECTOR_STANDOFF_PX = 3.5
CONNECTOR_THICKNESS_PX = 2
GENERATOR_INK = 40
GENERATOR_PAPER = 250
# Painted connector pixel centers sit within ~1.21 px of the ideal segment
# (0.5 px half-thickness offset plus rounding). Integer pixel centers are
# 8-adjacent only below sqrt(2) apart, so a segment kept 3 px clear of a box
# leaves at least 3 - 1.21 > sqrt(2) between ink centers: never adjacent.
ENDPOINT_BOX_CLEARANCE_PX = 3.0
OTHER_BOX_CLEARANCE_PX = 6.0
CONNECTOR_CLEARANCE_PX = 6.0


def _boxes_overlap(a, b, margin: int) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return not (
        ax + aw + margin <= bx
        or bx + bw + margin <= ax
        or ay + ah + margin <= by
        or by + bh + margin <= ay
    )


def _border_point(box, toward) -> tuple:
    """Point where the ray from the box center toward `toward` crosses the
    box border."""
    x, y, w, h = box
    cx = x + w / 2.0
    cy = y + h / 2.0
    dx = toward[0] - cx
    dy = toward[1] - cy
    scales = []
    if dx != 0.0:
        scales.append((w / 2.0) / abs(dx))
    if dy != 0.0:
        scales.append((h / 2.0) / abs(dy))
    s = min(scales) if scales else 0.0
    return (cx + dx * s, cy + dy * s)


def _point_segment_distance(p, a, b) -> float:
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        t = 0.0
    else:
        t = max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / length_sq))
    return math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy))


def _segment_distance(a1, a2, b1, b2) -> float:
    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    d1 = cross(b1, b2, a1)
    d2 = cross(b1, b2, a2)
    d3 = cross(a1, a2, b1)
    d4 = cross(a1, a2, b2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0
    return min(
        _point_segment_distance(a1, b1, b2),
        _point_segment_distance(a2, b1, b2),
        _point_segment_distance(b1, a1, a2),
        _point_segment_distance(b2, a1, a2),
    )


def _corridor_overlap(a1, a2, b1, b2, half_width: float) -> float:
    """Length of segment b lying within the infinite corridor of the line
    through a. A long overlap means the two connectors look collinear to
    an (angle, offset) accumulator even when the segments are far apart."""
    ux = a2[0] - a1[0]
    uy = a2[1] - a1[1]
    length_a = math.hypot(ux, uy)
    nx, ny = -uy / length_a, ux / length_a
    d0 = (b1[0] - a1[0]) * nx + (b1[1] - a1[1]) * ny
    d1 = (b2[0] - a1[0]) * nx + (b2[1] - a1[1]) * ny
    if min(d0, d1) > half_width or max(d0, d1) < -half_width:
        return 0.0
    if abs(d1 - d0) < 1e-12:
        frac = 1.0
    else:
        s_at = sorted((edge - d0) / (d1 - d0) for edge in (-half_width, half_width))
        frac = max(0.0, min(1.0, s_at[1]) - max(0.0, s_at[0]))
    return frac * math.hypot(b2[0] - b1[0], b2[1] - b1[1])


# An accumulator corridor is the vote band plus painting slop; connectors
# overlapping another connector's corridor longer than this could donate a
# run-worthy bite to the wrong line fit.
CORRIDOR_HALF_WIDTH_PX = 4.0
MAX_CORRIDOR_OVERLAP_PX = 6.0


def _connector_clear(q1, q2, boxes, i, j, accepted) -> bool:
    """Whole connector keeps its clearance from every box (the endpoint
    boxes get the tighter ink-separation floor, other boxes a wide berth
    so detection masks never clip a passing line), keeps its distance
    from every previously accepted connector, and never runs down another
    connector's corridor."""
    length = math.hypot(q2[0] - q1[0], q2[1] - q1[1])
    steps = max(4, int(length * 2))  # 0.5 px sampling; distance is 1-Lipschitz
    for step in range(steps + 1):
        f = step / steps
        px = q1[0] + (q2[0] - q1[0]) * f
        py = q1[1] + (q2[1] - q1[1]) * f
        for b_idx, (x, y, w, h) in enumerate(boxes):
            dx = max(x - px, 0.0, px - (x + w - 1))
            dy = max(y - py, 0.0, py - (y + h - 1))
            floor = ENDPOINT_BOX_CLEARANCE_PX if b_idx in (i, j) else OTHER_BOX_CLEARANCE_PX
            if math.hypot(dx, dy) < floor:
                return False
    for r1, r2 in accepted:
        if _segment_distance(q1, q2, r1, r2) < CONNECTOR_CLEARANCE_PX:
            return False
        if _corridor_overlap(q1, q2, r1, r2, CORRIDOR_HALF_WIDTH_PX) > MAX_CORRIDOR_OVERLAP_PX:
            return False
        if _corridor_overlap(r1, r2, q1, q2, CORRIDOR_HALF_WIDTH_PX) > MAX_CORRIDOR_OVERLAP_PX:
            return False
    return True


def _connector_pixels(q1, q2) -> set:
    """Pixel centers for a straight 2 px connector: two rows of rounded
    samples offset half a pixel each side of the segment. Keeps every
    center within ~1.21 px of the segment, unlike thick-line rasterizers
    whose joints and caps can reach 2.5 px out."""
    length = math.hypot(q2[0] - q1[0], q2[1] - q1[1])
    ux = (q2[0] - q1[0]) / length
    uy = (q2[1] - q1[1]) / length
    nx, ny = -uy, ux
    pixels = set()
    steps = max(2, int(length * 2))
    for k in range(steps + 1):
        t = k / steps
        px = q1[0] + (q2[0] - q1[0]) * t
        py = q1[1] + (q2[1] - q1[1]) * t
        for off in (0.5, -0.5):
            pixels.add((round(px + off * nx), round(py + off * ny)))
    return pixels


def generate_chart(
    seed: int,
    n_boxes: int = 5,
    size: int = 360,
    min_connector_length: float = 30.0,
) -> ChartTruth:
    """Deterministic clean chart: dark rectangles and straight connectors
    with a standoff so shapes and connectors never share or touch ink."""
    rng = np.random.default_rng(seed)
    boxes = []
    attempts = 0
    while len(boxes) < n_boxes and attempts < 4000:
        attempts += 1
        w = int(rng.integers(16, 56))
        h = int(rng.integers(14, 42))
        x = int(rng.integers(12, size - w - 12))
        y = int(rng.integers(12, size - h - 12))
        candidate = (x, y, w, h)
        if all(not _boxes_overlap(candidate, b, margin=24) for b in boxes):
            boxes.append(candidate)
    n = len(boxes)

    edges = []
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    want = min(n - 1, len(pairs)) if n > 1 else 0
    endpoints_by_edge = {}
    for i, j in pairs:
        if len(edges) >= want:
            break
        ci = (boxes[i][0] + boxes[i][2] / 2.0, boxes[i][1] + boxes[i][3] / 2.0)
        cj = (boxes[j][0] + boxes[j][2] / 2.0, boxes[j][1] + boxes[j][3] / 2.0)
        p1 = _border_point(boxes[i], cj)
        p2 = _border_point(boxes[j], ci)
        length = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
        if length < min_connector_length + 2 * CONNECTOR_STANDOFF_PX:
            continue
        f1 = CONNECTOR_STANDOFF_PX / length
        f2 = 1.0 - CONNECTOR_STANDOFF_PX / length
        q1 = (p1[0] + (p2[0] - p1[0]) * f1, p1[1] + (p2[1] - p1[1]) * f1)
        q2 = (p1[0] + (p2[0] - p1[0]) * f2, p1[1] + (p2[1] - p1[1]) * f2)
        if not _connector_clear(q1, q2, boxes, i, j, endpoints_by_edge.values()):
            continue
        edges.append((i, j))
        endpoints_by_edge[(i, j)] = (q1, q2)

    canvas = np.full((size, size), GENERATOR_PAPER, dtype=np.uint8)
    for x, y, w, h in boxes:
        canvas[y : y + h, x : x + w] = GENERATOR_INK
    for key in edges:
        q1, q2 = endpoints_by_edge[key]
        for px, py in _connector_pixels(q1, q2):
            if 0 <= px < size and 0 <= py < size:
                canvas[py, px] = GENERATOR_INK
    return ChartTruth(boxes=boxes, edges=edges, image=RasterImage(canvas))
