"""Axis-aligned box geometry in normalized image coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class BBox:
    """Box given by top-left (x1, y1) and bottom-right (x2, y2) corners.

    Coordinates are normalized to [0, 1] with y growing downward.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        vals = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite box coordinates: {vals}")
        if not all(0.0 <= v <= 1.0 for v in vals):
            raise ValidationError(f"box coordinates outside [0, 1]: {vals}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValidationError(f"degenerate box (x1 < x2 and y1 < y2 required): {vals}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def as_cxcywh(self) -> tuple[float, float, float, float]:
        return (
            (self.x1 + self.x2) / 2.0,
            (self.y1 + self.y2) / 2.0,
            self.x2 - self.x1,
            self.y2 - self.y1,
        )


def bbox_from_cxcywh(cx: float, cy: float, w: float, h: float) -> BBox:
    """Build a valid BBox from center/size, clamping into the unit square.

    Width and height are floored at 1e-6 so the corner ordering invariant
    always holds for head outputs that may collapse to zero extent.
    """
    w = max(w, 1e-6)
    h = max(h, 1e-6)
    x1 = min(max(cx - w / 2.0, 0.0), 1.0 - 1e-9)
    y1 = min(max(cy - h / 2.0, 0.0), 1.0 - 1e-9)
    x2 = max(min(cx + w / 2.0, 1.0), x1 + 1e-9)
    y2 = max(min(cy + h / 2.0, 1.0), y1 + 1e-9)
    return BBox(x1, y1, x2, y2)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    return inter / union if union > 0.0 else 0.0


def giou(a: BBox, b: BBox) -> float:
    """Generalized IoU: IoU minus the hull area not covered by the union.

    Lies in (-1, 1]; equals 1 iff the boxes coincide.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    hull = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    iou_val = inter / union if union > 0.0 else 0.0
    return iou_val - (hull - union) / hull


def covered_fraction(target: BBox, covers: Iterable[BBox]) -> float:
    """Exact fraction of `target` area covered by the union of `covers`.

    Clips every cover to the target, then sweeps the coordinate-compressed
    grid induced by the clipped edges; each grid cell is either fully inside
    or fully outside every clipped rectangle, so the sum is exact up to
    float rounding.
    """
    clipped: list[tuple[float, float, float, float]] = []
    for c in covers:
        x1 = max(c.x1, target.x1)
        y1 = max(c.y1, target.y1)
        x2 = min(c.x2, target.x2)
        y2 = min(c.y2, target.y2)
        if x1 < x2 and y1 < y2:
            clipped.append((x1, y1, x2, y2))
    if not clipped:
        return 0.0

    xs = sorted({v for r in clipped for v in (r[0], r[2])})
    ys = sorted({v for r in clipped for v in (r[1], r[3])})
    covered = 0.0
    for i in range(len(xs) - 1):
        cx1, cx2 = xs[i], xs[i + 1]
        for j in range(len(ys) - 1):
            cy1, cy2 = ys[j], ys[j + 1]
            if any(r[0] <= cx1 and cx2 <= r[2] and r[1] <= cy1 and cy2 <= r[3] for r in clipped):
                covered += (cx2 - cx1) * (cy2 - cy1)
    return covered / target.area


def union_area(rects: Sequence[BBox]) -> float:
    """Exact area of the union of rectangles (coordinate-compression sweep)."""
    if not rects:
        return 0.0
    xs = sorted({v for r in rects for v in (r.x1, r.x2)})
    ys = sorted({v for r in rects for v in (r.y1, r.y2)})
    total = 0.0
    for i in range(len(xs) - 1):
        cx1, cx2 = xs[i], xs[i + 1]
        for j in range(len(ys) - 1):
            cy1, cy2 = ys[j], ys[j + 1]
            if any(r.x1 <= cx1 and cx2 <= r.x2 and r.y1 <= cy1 and cy2 <= r.y2 for r in rects):
                total += (cx2 - cx1) * (cy2 - cy1)
    return total
