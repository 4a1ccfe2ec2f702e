"""Directed batch growing hierarchical SOM: a tree of growing maps."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, DimensionMismatch, EmptyData, InvalidParameter
from .gsom import GsomParams, train_gsom
from .mapmodel import UNLABELED, MapModel, _nearest_labeled_rows, assign_labels, bmu, bmu_rows

ROOT_ID = "m0"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GhsomParams:
    gsom: GsomParams = field(default_factory=lambda: GsomParams(spread_factor=0.3))
    min_child_samples: int = 8
    max_depth: int = 10

    def __post_init__(self):
        if self.min_child_samples < 2:
            raise InvalidParameter("min_child_samples must be >= 2")
        if self.max_depth < 1:
            raise InvalidParameter("max_depth must be >= 1")


@dataclass(eq=False)
class GhsomTree:
    maps: dict
    root_id: str
    parent: dict  # child map id -> (parent map id, parent neuron id)

    def __len__(self):
        return len(self.maps)

    def depth(self, map_id):
        d = 0
        while map_id != self.root_id:
            map_id = self.parent[map_id][0]
            d += 1
        return d

    def children(self, map_id):
        m = self.maps[map_id]
        order = m._id_order
        return [m.child_map_id[r] for r in order
                if m.child_map_id[r] is not None and m.child_map_id[r] in self.maps]

    def subtree(self, map_id):
        out, stack = [], [map_id]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(reversed(self.children(cur)))
        return out

    def postorder(self):
        out = []
        stack = [(self.root_id, False)]
        while stack:
            cur, done = stack.pop()
            if done:
                out.append(cur)
                continue
            stack.append((cur, True))
            stack.extend((c, False) for c in reversed(self.children(cur)))
        return out

    def max_depth(self):
        return max(self.depth(m) for m in self.maps)

    def validate(self):
        """Raise ``DataError`` unless parent links and child links describe one tree."""
        if self.root_id not in self.maps:
            raise DataError("root map missing")
        if len(self.parent) != len(self.maps) - 1 or self.root_id in self.parent:
            raise DataError("parent relation does not match map count")
        for child, (pid, nid) in self.parent.items():
            if child not in self.maps or pid not in self.maps:
                raise DataError(f"dangling parent edge {child} -> {pid}")
            pm = self.maps[pid]
            if pm.child_map_id[pm.row(nid)] != child:
                raise DataError(f"neuron {pid}:{nid} does not link back to {child}")
        for mid, m in self.maps.items():
            for r, child in enumerate(m.child_map_id):
                if child is not None and self.parent.get(child) != (mid, int(m.ids[r])):
                    raise DataError(f"child link {mid}:{m.ids[r]} -> {child} has no parent edge")
        seen = set(self.subtree(self.root_id))
        if seen != set(self.maps):
            raise DataError("maps unreachable from the root")

    def copy(self):
        return GhsomTree({k: v.copy() for k, v in self.maps.items()}, self.root_id, dict(self.parent))

    def to_dict(self):
        return {
            "format": "clxids.ghsom",
            "version": FORMAT_VERSION,
            "root_id": self.root_id,
            "maps": {k: self.maps[k].to_dict() for k in sorted(self.maps)},
            "parent": {k: [p, n] for k, (p, n) in sorted(self.parent.items())},
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != "clxids.ghsom":
            raise DataError("not a serialized GHSOM tree")
        if doc.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported tree version {doc.get('version')}")
        tree = cls(
            maps={k: MapModel.from_dict(v) for k, v in doc["maps"].items()},
            root_id=doc["root_id"],
            parent={k: (v[0], int(v[1])) for k, v in doc["parent"].items()},
        )
        tree.validate()
        return tree


def vertical_threshold(learning_rate, total_error):
    """VT = LR * SE."""
    return learning_rate * total_error


def child_seed(parent_seed, neuron_id):
    """Deterministic seed for the child grown under ``neuron_id``."""
    return int(np.random.SeedSequence([int(parent_seed), int(neuron_id)]).generate_state(1)[0])


def child_id(parent_map_id, neuron_id):
    return f"{parent_map_id}.{int(neuron_id)}"


def train_ghsom(data, labels, p):
    """Grow the hierarchy breadth-first.

    A neuron gets a child map when its error exceeds its own map's vertical
    threshold, it won at least ``min_child_samples`` samples, those samples are
    not all identical, and the depth cap allows it. The child trains only on
    those samples.
    """
    X = np.ascontiguousarray(getattr(data, "data", data), dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("training data is empty")
    if y.shape[0] != X.shape[0]:
        raise DataError("labels and data lengths differ")

    maps, parent = {}, {}
    queue = deque([(ROOT_ID, np.arange(X.shape[0]), p.gsom.seed, 0)])
    while queue:
        map_id, idx, seed, depth = queue.popleft()
        Xl, yl = X[idx], y[idx]
        m = train_gsom(Xl, replace(p.gsom, seed=seed), map_id=map_id)
        m = assign_labels(m, Xl, yl)
        m.meta["depth"] = depth
        vt = vertical_threshold(p.gsom.learning_rate, float(m.cumulative_error.sum()))
        m.meta["vertical_threshold"] = vt
        rows, _ = bmu_rows(m, Xl)
        for r in m._id_order:
            nid = int(m.ids[r])
            if not (m.cumulative_error[r] > vt and m.hit_count[r] >= p.min_child_samples
                    and depth < p.max_depth):
                continue
            local = idx[rows == r]
            if np.all(X[local] == X[local[0]]):
                continue
            cid = child_id(map_id, nid)
            m.child_map_id[r] = cid
            parent[cid] = (map_id, nid)
            queue.append((cid, local, child_seed(seed, nid), depth + 1))
        maps[map_id] = m
    return GhsomTree(maps=maps, root_id=ROOT_ID, parent=parent)


def _terminal_label(tree, path):
    map_id, nid = path[-1]
    m = tree.maps[map_id]
    r = m.row(nid)
    if m.labels[r] != UNLABELED:
        return int(m.labels[r])
    if (m.labels != UNLABELED).any():
        return int(m.labels[_nearest_labeled_rows(m, m.labels)[r]])
    for pid, pnid in reversed(path[:-1]):
        pm = tree.maps[pid]
        label = int(pm.labels[pm.row(pnid)])
        if label != UNLABELED:
            return label
    raise DataError("no labeled neuron on the descent path")


def predict_ghsom(tree, sample):
    """Descend from the root through child links; returns ``(label, path)``."""
    x = np.asarray(sample, dtype=np.float64)
    m = tree.maps[tree.root_id]
    if x.ndim != 1 or x.shape[0] != m.D:
        raise DimensionMismatch(f"sample has shape {x.shape}, tree expects ({m.D},)")
    path = []
    while True:
        nid, _ = bmu(m, x)
        path.append((m.map_id, nid))
        child = m.child_map_id[m.row(nid)]
        if child is None or child not in tree.maps:
            break
        m = tree.maps[child]
    return _terminal_label(tree, path), path


def route_batch(tree, data):
    """Send every sample down the tree.

    Returns ``{map_id: (sample indices, bmu rows)}`` for each map reached by at
    least one sample.
    """
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    root = tree.maps[tree.root_id]
    if X.ndim != 2 or X.shape[1] != root.D:
        raise DimensionMismatch(f"batch shape {X.shape} does not match tree D={root.D}")
    out = {}
    stack = [(tree.root_id, np.arange(X.shape[0]))]
    while stack:
        map_id, idx = stack.pop()
        if idx.size == 0:
            continue
        m = tree.maps[map_id]
        rows, _ = bmu_rows(m, X[idx])
        out[map_id] = (idx, rows)
        for r, child in enumerate(m.child_map_id):
            if child is not None and child in tree.maps:
                stack.append((child, idx[rows == r]))
    return out


def predict_ghsom_batch(tree, data):
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    pred = np.full(X.shape[0], UNLABELED, dtype=np.int64)
    for map_id, (idx, rows) in route_batch(tree, X).items():
        m = tree.maps[map_id]
        leaf = np.array([c is None or c not in tree.maps for c in m.child_map_id])
        stop = leaf[rows]
        if not stop.any():
            continue
        labels = m.labels
        if (labels == UNLABELED).any():
            for i, r in zip(idx[stop], rows[stop]):
                pred[i] = _terminal_label(tree, _path_to(tree, map_id, int(m.ids[r])))
        else:
            pred[idx[stop]] = labels[rows[stop]]
    return pred


def _path_to(tree, map_id, neuron_id):
    path = [(map_id, neuron_id)]
    while map_id != tree.root_id:
        map_id, nid = tree.parent[map_id]
        path.append((map_id, nid))
    return path[::-1]


def network_size(model):
    """Number of maps in a hierarchy; flat maps count as one."""
    return len(model.maps) if isinstance(model, GhsomTree) else 1
