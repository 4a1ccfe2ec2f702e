"""Neuron lattice shared by SOM and GSOM: BMU search, labeling, quality metrics."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy import stats

from .errors import (
    DataError,
    DimensionMismatch,
    EmptyData,
    MapTooSmall,
    NoLabeledNeuron,
)

UNLABELED = -1
BENIGN = 0
MALICIOUS = 1

# Orthogonal neighbor offsets in (row, col), in N, E, S, W order.
DIRECTIONS = ((-1, 0), (0, 1), (1, 0), (0, -1))

FORMAT_VERSION = 1
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class Neuron:
    id: int
    coord: tuple
    weights: np.ndarray
    hit_count: int
    cumulative_error: float
    label: int
    child_map_id: str | None


@dataclass(eq=False)
class MapModel:
    """A square 4-connected lattice of neurons.

    Rows of the arrays are neurons; ``ids[i]`` is the stable id of row ``i``.
    Trainers emit maps with ``ids == arange(k)``. Treat instances as immutable
    once training has finished; the helpers here return modified copies.
    """

    map_id: str
    weights: np.ndarray
    coords: np.ndarray
    ids: np.ndarray | None = None
    hit_count: np.ndarray | None = None
    cumulative_error: np.ndarray | None = None
    labels: np.ndarray | None = None
    child_map_id: list | None = None
    seed: int | None = None
    budget_exceeded: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        k = self.weights.shape[0]
        if k == 0:
            raise EmptyData("a map needs at least one neuron")
        self.coords = np.asarray(self.coords, dtype=np.int64).reshape(k, 2)
        self.ids = np.arange(k) if self.ids is None else np.asarray(self.ids, dtype=np.int64)
        if self.hit_count is None:
            self.hit_count = np.zeros(k, dtype=np.int64)
        if self.cumulative_error is None:
            self.cumulative_error = np.zeros(k)
        if self.labels is None:
            self.labels = np.full(k, UNLABELED, dtype=np.int64)
        if self.child_map_id is None:
            self.child_map_id = [None] * k
        self.hit_count = np.asarray(self.hit_count, dtype=np.int64)
        self.cumulative_error = np.asarray(self.cumulative_error, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.child_map_id = list(self.child_map_id)
        if len(set(map(tuple, self.coords.tolist()))) != k:
            raise DataError("neuron coordinates must be unique")
        if len(set(self.ids.tolist())) != k:
            raise DataError("neuron ids must be unique")

    def __len__(self):
        return self.weights.shape[0]

    @property
    def D(self):
        return self.weights.shape[1]

    @cached_property
    def _id_order(self):
        # Row indices sorted by neuron id; argmin over this order breaks ties by id.
        return np.argsort(self.ids, kind="stable")

    @cached_property
    def _row_of_id(self):
        return {int(i): r for r, i in enumerate(self.ids)}

    @cached_property
    def _row_of_coord(self):
        return {(int(r), int(c)): i for i, (r, c) in enumerate(self.coords)}

    @cached_property
    def neighbor_table(self):
        """(k, 4) row indices of the N, E, S, W neighbors, -1 where the slot is empty."""
        table = np.full((len(self), 4), -1, dtype=np.int64)
        lookup = self._row_of_coord
        for i, (r, c) in enumerate(self.coords.tolist()):
            for j, (dr, dc) in enumerate(DIRECTIONS):
                table[i, j] = lookup.get((r + dr, c + dc), -1)
        return table

    def row(self, neuron_id):
        return self._row_of_id[int(neuron_id)]

    def row_at(self, coord):
        return self._row_of_coord.get((int(coord[0]), int(coord[1])))

    def neighbors(self, row):
        return [int(j) for j in self.neighbor_table[row] if j >= 0]

    def adjacent(self, row_a, row_b):
        return int(np.abs(self.coords[row_a] - self.coords[row_b]).sum()) == 1

    def neuron(self, neuron_id):
        i = self.row(neuron_id)
        return Neuron(
            id=int(self.ids[i]),
            coord=(int(self.coords[i, 0]), int(self.coords[i, 1])),
            weights=self.weights[i],
            hit_count=int(self.hit_count[i]),
            cumulative_error=float(self.cumulative_error[i]),
            label=int(self.labels[i]),
            child_map_id=self.child_map_id[i],
        )

    def neurons(self):
        return [self.neuron(i) for i in self.ids[self._id_order]]

    def copy(self, **changes):
        base = dict(
            weights=self.weights.copy(),
            coords=self.coords.copy(),
            ids=self.ids.copy(),
            hit_count=self.hit_count.copy(),
            cumulative_error=self.cumulative_error.copy(),
            labels=self.labels.copy(),
            child_map_id=list(self.child_map_id),
            meta=dict(self.meta),
        )
        base.update(changes)
        return replace(self, **base)

    def to_dict(self):
        rows = self._id_order
        return {
            "format": "clxids.map",
            "version": FORMAT_VERSION,
            "map_id": self.map_id,
            "D": self.D,
            "seed": self.seed,
            "budget_exceeded": self.budget_exceeded,
            "meta": self.meta,
            "neurons": [
                {
                    "id": int(self.ids[i]),
                    "coord": [int(self.coords[i, 0]), int(self.coords[i, 1])],
                    "weights": self.weights[i].tolist(),
                    "hit_count": int(self.hit_count[i]),
                    "cumulative_error": float(self.cumulative_error[i]),
                    "label": None if self.labels[i] == UNLABELED else int(self.labels[i]),
                    "child_map_id": self.child_map_id[i],
                }
                for i in rows
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != "clxids.map":
            raise DataError("not a serialized map")
        if doc.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported map version {doc.get('version')}")
        neurons = doc["neurons"]
        D = int(doc["D"])
        weights = np.array([n["weights"] for n in neurons], dtype=np.float64).reshape(len(neurons), D)
        return cls(
            map_id=doc["map_id"],
            weights=weights,
            coords=[n["coord"] for n in neurons],
            ids=[n["id"] for n in neurons],
            hit_count=[n["hit_count"] for n in neurons],
            cumulative_error=[n.get("cumulative_error", 0.0) for n in neurons],
            labels=[UNLABELED if n["label"] is None else n["label"] for n in neurons],
            child_map_id=[n["child_map_id"] for n in neurons],
            seed=doc.get("seed"),
            budget_exceeded=bool(doc.get("budget_exceeded", False)),
            meta=dict(doc.get("meta", {})),
        )


def _check_sample(map_, sample):
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != map_.D:
        raise DimensionMismatch(f"sample has shape {x.shape}, map expects ({map_.D},)")
    return x


def _check_batch(map_, data):
    X = data.data if hasattr(data, "feature_names") else np.asarray(data, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D batch, got shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptyData("no samples")
    if X.shape[1] != map_.D:
        raise DimensionMismatch(f"batch has D={X.shape[1]}, map expects {map_.D}")
    return X


def squared_distances(weights, x):
    diff = weights - x
    return np.einsum("ij,ij->i", diff, diff)


def bmu(map_, sample):
    """Best matching unit: ``(neuron id, Euclidean distance)``; ties go to the smallest id."""
    x = _check_sample(map_, sample)
    ids, d = bmu_batch(map_, x[None, :])
    return int(ids[0]), float(d[0])


def _batch_d2(map_, X):
    """Yield (slice, squared distance block) with columns in id order."""
    W = map_.weights[map_._id_order]
    step = max(1, _CHUNK_ELEMENTS // max(1, W.size))
    for s in range(0, X.shape[0], step):
        diff = X[s:s + step, None, :] - W[None, :, :]
        yield slice(s, s + step), np.einsum("bkd,bkd->bk", diff, diff)


def bmu_batch(map_, data):
    """Vectorized :func:`bmu`; returns arrays of ids and distances.

    Each row's result is identical to calling :func:`bmu` on that row.
    """
    X = _check_batch(map_, data)
    order = map_._id_order
    out_ids = np.empty(X.shape[0], dtype=np.int64)
    out_d = np.empty(X.shape[0])
    for sl, d2 in _batch_d2(map_, X):
        j = np.argmin(d2, axis=1)
        out_ids[sl] = map_.ids[order[j]]
        out_d[sl] = np.sqrt(d2[np.arange(d2.shape[0]), j])
    return out_ids, out_d


def bmu_rows(map_, data):
    """Like :func:`bmu_batch` but returns row indices instead of ids."""
    ids, dists = bmu_batch(map_, data)
    lookup = map_._row_of_id
    return np.fromiter((lookup[int(i)] for i in ids), dtype=np.int64, count=len(ids)), dists


def bmu_pair(map_, sample):
    """Ids of the closest and second-closest neurons (same tie rule as :func:`bmu`)."""
    x = _check_sample(map_, sample)
    first, second = bmu_pair_batch(map_, x[None, :])[0]
    return int(first), int(second)


def bmu_pair_batch(map_, data):
    if len(map_) < 2:
        raise MapTooSmall("bmu_pair needs at least two neurons")
    X = _check_batch(map_, data)
    order = map_._id_order
    out = np.empty((X.shape[0], 2), dtype=np.int64)
    for sl, d2 in _batch_d2(map_, X):
        top = np.argsort(d2, axis=1, kind="stable")[:, :2]
        out[sl] = map_.ids[order[top]]
    return out


def _nearest_labeled_rows(map_, labels):
    labeled = np.flatnonzero(labels != UNLABELED)
    if labeled.size == 0:
        raise NoLabeledNeuron(f"map {map_.map_id} has no labeled neuron")
    # Among labeled rows, nearest in weight space; ties by smallest id.
    labeled = labeled[np.argsort(map_.ids[labeled], kind="stable")]
    W = map_.weights[labeled]
    nearest = np.empty(len(map_), dtype=np.int64)
    for i in range(len(map_)):
        nearest[i] = labeled[int(np.argmin(squared_distances(W, map_.weights[i])))]
    return nearest


def assign_labels(map_, data, labels):
    """Majority-vote neuron labels; ties go to malicious, empty neurons copy the
    nearest labeled neuron in weight space. Also refreshes ``hit_count``."""
    X = _check_batch(map_, data)
    y = np.asarray(labels, dtype=np.int64)
    if y.shape[0] != X.shape[0]:
        raise DataError("labels and data lengths differ")
    rows, _ = bmu_rows(map_, X)
    k = len(map_)
    mal = np.bincount(rows, weights=(y == MALICIOUS), minlength=k).astype(np.int64)
    hits = np.bincount(rows, minlength=k).astype(np.int64)
    ben = hits - mal
    new_labels = np.full(k, UNLABELED, dtype=np.int64)
    has = hits > 0
    new_labels[has] = np.where(mal[has] >= ben[has], MALICIOUS, BENIGN)
    if not has.any():
        raise NoLabeledNeuron(f"map {map_.map_id}: no sample reached any neuron")
    if not has.all():
        nearest = _nearest_labeled_rows(map_, new_labels)
        empty = ~has
        new_labels[empty] = new_labels[nearest[empty]]
    return map_.copy(labels=new_labels, hit_count=hits)


def _resolved_label(map_, row):
    label = int(map_.labels[row])
    if label != UNLABELED:
        return label
    return int(map_.labels[_nearest_labeled_rows(map_, map_.labels)[row]])


def predict_flat(map_, sample):
    neuron_id, _ = bmu(map_, sample)
    return _resolved_label(map_, map_.row(neuron_id))


def predict_flat_batch(map_, data):
    rows, _ = bmu_rows(map_, data)
    labels = map_.labels
    if (labels == UNLABELED).any():
        labels = labels.copy()
        nearest = _nearest_labeled_rows(map_, labels)
        empty = labels == UNLABELED
        labels[empty] = labels[nearest[empty]]
    return labels[rows]


def quantization_error(map_, data):
    _, d = bmu_batch(map_, data)
    return float(d.mean())


def topographic_error(map_, data):
    """Fraction of samples whose two best units are not orthogonal lattice neighbors."""
    pairs = bmu_pair_batch(map_, data)
    lookup = map_._row_of_id
    coords = map_.coords
    a = coords[[lookup[int(i)] for i in pairs[:, 0]]]
    b = coords[[lookup[int(i)] for i in pairs[:, 1]]]
    adjacent = np.abs(a - b).sum(axis=1) == 1
    return float(1.0 - adjacent.mean())


def _same_distribution(x, w, alpha):
    """Welch mean test and two-sided F variance test both fail to reject."""
    vx, vw = x.var(ddof=1), w.var(ddof=1)
    mx, mw = x.mean(), w.mean()
    if vx == 0 and vw == 0:
        return bool(mx == mw)
    if vx == 0 or vw == 0:
        return False
    p_mean = stats.ttest_ind(x, w, equal_var=False).pvalue
    F = vx / vw
    p_var = min(1.0, 2.0 * min(stats.f.cdf(F, x.size - 1, w.size - 1),
                               stats.f.sf(F, x.size - 1, w.size - 1)))
    return bool(p_mean > alpha and p_var > alpha)


def embedding_accuracy(map_, data, alpha=0.05):
    """Fraction of features whose data and neuron-weight columns agree in mean and variance."""
    X = _check_batch(map_, data)
    if X.shape[0] < 2 or len(map_) < 2:
        raise EmptyData("embedding accuracy needs at least two samples and two neurons")
    ok = [_same_distribution(X[:, f], map_.weights[:, f], alpha) for f in range(map_.D)]
    return float(np.mean(ok))


def convergence_index_from(embedding, topographic):
    return 0.5 * embedding + 0.5 * (1.0 - topographic)


def convergence_index(map_, data, alpha=0.05):
    return convergence_index_from(embedding_accuracy(map_, data, alpha), topographic_error(map_, data))


@dataclass(frozen=True)
class QualityReport:
    quantization_error: float
    topographic_error: float
    embedding_accuracy: float
    convergence_index: float

    def to_dict(self):
        return dict(self.__dict__)


def quality_report(map_, data, alpha=0.05):
    te = topographic_error(map_, data)
    ea = embedding_accuracy(map_, data, alpha)
    return QualityReport(
        quantization_error=quantization_error(map_, data),
        topographic_error=te,
        embedding_accuracy=ea,
        convergence_index=convergence_index_from(ea, te),
    )
