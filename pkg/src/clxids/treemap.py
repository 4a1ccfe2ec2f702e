"""Nested squarified treemap of a GHSOM: map boxes hold neuron boxes, branch
neuron boxes hold their child map."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ghsom import GhsomTree
from .mapmodel import MALICIOUS, UNLABELED

AREA_FLOOR = 0.002  # minimum neuron share of its map box
INSET = 0.04  # child map margin inside a branch box, as a fraction of the shorter side

BENIGN_CLASS = "benign"
MALICIOUS_CLASS = "malicious"
BRANCH_CLASS = "branch"
UNLABELED_CLASS = "unlabeled"


def _worst(row, side):
    s = sum(row)
    return max(side * side * max(row) / (s * s), (s * s) / (side * side * min(row)))


def squarify(sizes, x, y, w, h):
    """Bruls-Huizing-van Wijk squarified layout.

    ``sizes`` must be positive and are rescaled to fill the ``w`` x ``h``
    rectangle. Returns one ``(x, y, w, h)`` per input, in input order;
    placement follows descending size with ties in input order.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0:
        return []
    if (sizes <= 0).any():
        raise ValueError("squarify needs positive sizes")
    order = np.argsort(-sizes, kind="stable")
    scaled = sizes[order] * (w * h / sizes.sum())
    out = [None] * sizes.size
    i = 0
    while i < len(scaled):
        side = min(w, h)
        row = [scaled[i]]
        j = i + 1
        while j < len(scaled) and _worst(row + [scaled[j]], side) <= _worst(row, side):
            row.append(scaled[j])
            j += 1
        total = sum(row)
        if j == len(scaled):
            # Last row takes whatever is left so rounding never leaves a sliver.
            total_span_w, total_span_h = w, h
        else:
            total_span_w, total_span_h = (total / h, h) if w >= h else (w, total / w)
        if w >= h:
            cw = total_span_w
            cy = y
            for k, a in enumerate(row):
                ch = a / total * h
                out[order[i + k]] = (x, cy, cw, ch)
                cy += ch
            x, w = x + cw, w - cw
        else:
            ch = total_span_h
            cx = x
            for k, a in enumerate(row):
                cw = a / total * w
                out[order[i + k]] = (cx, y, cw, ch)
                cx += cw
            y, h = y + ch, h - ch
        i = j
    return out


@dataclass(frozen=True)
class Box:
    kind: str  # "map" or "neuron"
    map_id: str
    neuron_id: int | None
    depth: int
    x: float
    y: float
    w: float
    h: float
    cls: str | None = None
    hit_count: int = 0
    share: float = 0.0

    @property
    def area(self):
        return self.w * self.h

    def contains(self, other, tol=1e-9):
        return (other.x >= self.x - tol and other.y >= self.y - tol
                and other.x + other.w <= self.x + self.w + tol
                and other.y + other.h <= self.y + self.h + tol)

    def to_dict(self):
        return {"kind": self.kind, "map_id": self.map_id, "neuron_id": self.neuron_id,
                "depth": self.depth, "x": self.x, "y": self.y, "w": self.w, "h": self.h,
                "class": self.cls, "hit_count": self.hit_count, "share": self.share,
                "label": self.label}

    @property
    def label(self):
        if self.kind == "map":
            return f"{self.map_id} (layer {self.depth})"
        return f"{self.map_id}:{self.neuron_id}"


@dataclass
class TreemapLayout:
    width: float
    height: float
    boxes: list = field(default_factory=list)

    def to_dict(self):
        return {"width": self.width, "height": self.height, "boxes": [b.to_dict() for b in self.boxes]}


def floored_shares(hit_counts, floor=AREA_FLOOR):
    """Hit-count shares with a per-neuron floor, renormalized to sum to one."""
    h = np.asarray(hit_counts, dtype=np.float64)
    base = h / h.sum() if h.sum() > 0 else np.full(h.size, 1.0 / h.size)
    base = np.maximum(base, floor)
    return base / base.sum()


def _neuron_class(map_, row, tree):
    child = map_.child_map_id[row]
    if child is not None and (tree is None or child in tree.maps):
        return BRANCH_CLASS
    label = map_.labels[row]
    if label == UNLABELED:
        return UNLABELED_CLASS
    return MALICIOUS_CLASS if label == MALICIOUS else BENIGN_CLASS


def treemap_layout(model, width=1200.0, height=800.0):
    tree = model if isinstance(model, GhsomTree) else None
    layout = TreemapLayout(float(width), float(height))
    start = tree.root_id if tree is not None else model.map_id
    stack = [(start, 0, 0.0, 0.0, float(width), float(height))]
    while stack:
        map_id, depth, x, y, w, h = stack.pop()
        m = tree.maps[map_id] if tree is not None else model
        layout.boxes.append(Box("map", map_id, None, depth, x, y, w, h))
        order = m._id_order
        shares = floored_shares(m.hit_count[order])
        rects = squarify(shares, x, y, w, h)
        children = []
        for r, share, (bx, by, bw, bh) in zip(order, shares, rects):
            cls = _neuron_class(m, r, tree)
            layout.boxes.append(Box("neuron", map_id, int(m.ids[r]), depth, bx, by, bw, bh,
                                    cls, int(m.hit_count[r]), float(share)))
            if cls == BRANCH_CLASS:
                pad = INSET * min(bw, bh)
                children.append((m.child_map_id[r], depth + 1, bx + pad, by + pad,
                                 bw - 2 * pad, bh - 2 * pad))
        stack.extend(reversed(children))
    return layout
