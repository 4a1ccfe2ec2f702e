"""Fixed-grid self-organizing map."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyData, InvalidParameter
from .mapmodel import MapModel, bmu_rows


@dataclass(frozen=True)
class SomParams:
    n: int = 18
    m: int = 18
    learning_rate: float = 0.3
    epochs: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise InvalidParameter(f"grid must be at least 2x2, got {self.n}x{self.m}")
        if not 0 < self.learning_rate < 1:
            raise InvalidParameter(f"learning_rate must lie in (0, 1), got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidParameter(f"epochs must be >= 1, got {self.epochs}")


def radius_at(t, p):
    """Neighborhood radius, linear from max(n, m)/2 at t=0 down to 1 at t=epochs."""
    r0 = max(p.n, p.m) / 2.0
    return r0 + (1.0 - r0) * (t / p.epochs)


def learning_rate_at(t, d, p):
    """Step size for a neuron at lattice distance ``d`` from the BMU at iteration ``t``."""
    r = radius_at(t, p)
    return p.learning_rate * (1.0 - t / p.epochs) * np.exp(-np.square(d) / (2.0 * r * r))


def grid_coords(n, m):
    rows, cols = np.divmod(np.arange(n * m), m)
    return np.column_stack([rows, cols])


def train_som(data, p, map_id="m0"):
    """Online SOM: one uniformly drawn sample per epoch.

    Neuron ``r * m + c`` sits at lattice coordinate ``(r, c)``. Lattice distance
    is Chebyshev; neighbors farther than three radii are skipped.
    """
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyData("training data is empty")
    if X.shape[1] == 0:
        raise DimensionMismatch("training data has no features")
    rng = np.random.default_rng(p.seed)
    coords = grid_coords(p.n, p.m)
    W = rng.random((p.n * p.m, X.shape[1]))

    for t in range(p.epochs):
        x = X[rng.integers(X.shape[0])]
        diff = W - x
        b = int(np.argmin(np.einsum("ij,ij->i", diff, diff)))
        d = np.abs(coords - coords[b]).max(axis=1)
        near = d <= 3.0 * radius_at(t, p)
        step = learning_rate_at(t, d[near], p)
        W[near] -= step[:, None] * diff[near]

    som = MapModel(map_id=map_id, weights=W, coords=coords, seed=p.seed,
                   meta={"model": "som", "n": p.n, "m": p.m})
    rows, dists = bmu_rows(som, X)
    som.hit_count = np.bincount(rows, minlength=len(som)).astype(np.int64)
    som.cumulative_error = np.bincount(rows, weights=dists, minlength=len(som))
    return som

