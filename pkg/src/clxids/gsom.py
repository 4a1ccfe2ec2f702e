"""Directed batch growing SOM.

Training starts from a 2x2 lattice. Each epoch presents every sample once,
accumulates per-neuron error, pushes error out of interior neurons and lets
boundary neurons whose error exceeds the growth threshold sprout one new
neighbor each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch, EmptyData, InvalidParameter, InvalidSF
from .mapmodel import DIRECTIONS, MapModel, bmu_rows

NEIGHBOR_RATE = 0.5  # neighbors move at half the BMU step
JITTER = 0.01


@dataclass(frozen=True)
class GsomParams:
    spread_factor: float = 0.9
    learning_rate: float = 0.006
    epochs: int = 100
    seed: int = 0
    max_nodes: int = 10_000

    def __post_init__(self):
        if not 0 < self.spread_factor < 1:
            raise InvalidSF(f"spread_factor must lie in (0, 1), got {self.spread_factor}")
        if not 0 < self.learning_rate < 1:
            raise InvalidParameter(f"learning_rate must lie in (0, 1), got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidParameter(f"epochs must be >= 1, got {self.epochs}")
        if self.max_nodes < 4:
            raise InvalidParameter("max_nodes must allow the 4 starter nodes")


def growth_threshold(D, spread_factor):
    """GT = -D * ln(SF)."""
    if D < 1:
        raise InvalidParameter(f"dimension must be >= 1, got {D}")
    if not 0 < spread_factor < 1:
        raise InvalidSF(f"spread_factor must lie in (0, 1), got {spread_factor}")
    return -D * math.log(spread_factor)


@njit(cache=True)
def _present_epoch(W, nbr, k, X, order, lr, nlr, ce):
    D = X.shape[1]
    for s in range(order.shape[0]):
        x = X[order[s]]
        best = 0
        best_d2 = np.inf
        for i in range(k):
            acc = 0.0
            for j in range(D):
                t = W[i, j] - x[j]
                acc += t * t
            if acc < best_d2:
                best_d2 = acc
                best = i
        ce[best] += math.sqrt(best_d2)
        for j in range(D):
            W[best, j] += lr * (x[j] - W[best, j])
        for q in range(4):
            nb = nbr[best, q]
            if nb >= 0:
                for j in range(D):
                    W[nb, j] += nlr * (x[j] - W[nb, j])


class _Lattice:
    """Growable lattice storage with an incrementally maintained neighbor table."""

    def __init__(self, D, capacity):
        self.W = np.zeros((capacity, D))
        self.nbr = np.full((capacity, 4), -1, dtype=np.int64)
        self.coords = []
        self.where = {}
        self.k = 0

    def add(self, coord, weights):
        i = self.k
        self.W[i] = weights
        self.coords.append(coord)
        self.where[coord] = i
        r, c = coord
        for q, (dr, dc) in enumerate(DIRECTIONS):
            j = self.where.get((r + dr, c + dc))
            if j is not None:
                self.nbr[i, q] = j
                self.nbr[j, (q + 2) % 4] = i
        self.k += 1
        return i

    def free_slots(self, i):
        r, c = self.coords[i]
        return [q for q, (dr, dc) in enumerate(DIRECTIONS) if (r + dr, c + dc) not in self.where]


def _choose_slot(lat, i):
    """Grow away from the most similar neighbor when that slot is free, else first free of N, E, S, W."""
    free = lat.free_slots(i)
    if not free:
        return None
    best_q, best_d = None, np.inf
    for q in range(4):
        j = lat.nbr[i, q]
        if j >= 0:
            d = float(np.sum((lat.W[i] - lat.W[j]) ** 2))
            if d < best_d:
                best_q, best_d = q, d
    if best_q is not None and (best_q + 2) % 4 in free:
        return (best_q + 2) % 4
    return free[0]


def _newborn_weights(lat, i, q, rng):
    opposite = lat.nbr[i, (q + 2) % 4]
    if opposite >= 0:
        w = 2.0 * lat.W[i] - lat.W[opposite]
    else:
        w = lat.W[i] + rng.uniform(-JITTER, JITTER, lat.W.shape[1])
    return np.clip(w, 0.0, 1.0)


def _spread_interior_error(lat, ce, gt):
    k = lat.k
    nbr = lat.nbr[:k]
    interior = (nbr >= 0).all(axis=1)
    hot = np.flatnonzero(interior & (ce > gt))
    if hot.size == 0:
        return ce
    out = ce.copy()
    share = ce[hot] / 4.0
    out[hot] = 0.0
    for q in range(4):
        np.add.at(out, nbr[hot, q], share)
    return out


def train_gsom(data, p, map_id="m0"):
    """Grow and train a map; returns it with hit counts and per-neuron error
    measured in a final no-update pass over ``data``."""
    X = np.ascontiguousarray(getattr(data, "data", data), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("training data is empty")
    if X.shape[1] == 0:
        raise DimensionMismatch("training data has no features")
    D = X.shape[1]
    gt = growth_threshold(D, p.spread_factor)
    rng = np.random.default_rng(p.seed)

    lat = _Lattice(D, p.max_nodes)
    for coord, w in zip([(0, 0), (0, 1), (1, 0), (1, 1)], rng.random((4, D))):
        lat.add(coord, w)

    exceeded = False
    node_counts = []
    for _ in range(p.epochs):
        ce = np.zeros(lat.k)
        order = rng.permutation(X.shape[0])
        _present_epoch(lat.W, lat.nbr, lat.k, X, order, p.learning_rate,
                       p.learning_rate * NEIGHBOR_RATE, ce)
        ce = _spread_interior_error(lat, ce, gt)
        boundary = (lat.nbr[:lat.k] < 0).any(axis=1)
        for i in np.flatnonzero(boundary & (ce > gt)):
            if lat.k >= p.max_nodes:
                exceeded = True
                break
            q = _choose_slot(lat, i)
            if q is None:
                continue
            r, c = lat.coords[i]
            dr, dc = DIRECTIONS[q]
            lat.add((r + dr, c + dc), _newborn_weights(lat, i, q, rng))
        node_counts.append(lat.k)

    gsom = MapModel(map_id=map_id, weights=lat.W[:lat.k].copy(), coords=lat.coords,
                    seed=p.seed, budget_exceeded=exceeded,
                    meta={"model": "gsom", "growth_threshold": gt, "node_counts": node_counts})
    rows, dists = bmu_rows(gsom, X)
    gsom.hit_count = np.bincount(rows, minlength=len(gsom)).astype(np.int64)
    gsom.cumulative_error = np.bincount(rows, weights=dists, minlength=len(gsom))
    return gsom
