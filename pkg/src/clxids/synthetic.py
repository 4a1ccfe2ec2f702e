"""Seeded synthetic datasets for tests, scripts and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .data import FeatureMatrix, apply_minmax, fit_minmax


def _scaled(train, test, names):
    mins, maxs = fit_minmax(train)
    wrap = lambda a: FeatureMatrix(apply_minmax(a, mins, maxs), tuple(names), (mins, maxs))  # noqa: E731
    return wrap(train), wrap(test)


def two_blobs(n_train=1000, n_test=400, separation=4.0, sigma=1.0, seed=0):
    """Two isotropic 2-D Gaussians ``separation`` apart (in units of sigma).

    Class 0 is centered at the origin, class 1 at ``(separation * sigma, 0)``.
    Classes are balanced. Returns ``((train_m, train_y), (test_m, test_y))``,
    min-max scaled with bounds from the training split.
    """
    rng = np.random.default_rng(seed)

    def draw(n):
        y = np.arange(n) % 2
        centers = np.column_stack([y * separation * sigma, np.zeros(n)])
        return centers + rng.normal(0.0, sigma, (n, 2)), y

    Xtr, ytr = draw(n_train)
    Xte, yte = draw(n_test)
    train, test = _scaled(Xtr, Xte, ["x0", "x1"])
    return (train, ytr), (test, yte)


def hierarchical_blobs(n_train=2000, n_test=1000, n_clusters=4, n_sub=4, D=2,
                       cluster_spread=1.0, sub_spread=0.12, sigma=0.025, seed=0):
    """Clusters of sub-clusters with a per-sub-cluster label.

    Cluster centers lie on a square grid of pitch ``cluster_spread`` in the
    first two dimensions (extra dimensions are drawn at random). Each cluster
    holds ``n_sub`` tight sub-clusters evenly spaced on a ring of radius
    ``sub_spread``. Labels alternate around the ring, so a coarse map cannot
    separate them and the hierarchy has to descend.
    """
    if D < 2:
        raise ValueError("hierarchical_blobs needs D >= 2")
    rng = np.random.default_rng(seed)
    side = int(np.ceil(np.sqrt(n_clusters)))
    centers = rng.uniform(0.0, cluster_spread, (n_clusters, D))
    for c in range(n_clusters):
        centers[c, :2] = np.divmod(c, side)
        centers[c, :2] *= cluster_spread
    subs = []
    sub_labels = []
    for c in range(n_clusters):
        phase = rng.uniform(0.0, 2 * np.pi)
        for s in range(n_sub):
            angle = phase + 2 * np.pi * s / n_sub
            offset = np.zeros(D)
            offset[:2] = sub_spread * np.cos(angle), sub_spread * np.sin(angle)
            subs.append(centers[c] + offset)
            sub_labels.append(s % 2)
    subs = np.asarray(subs)
    sub_labels = np.asarray(sub_labels)

    def draw(n):
        which = rng.integers(len(subs), size=n)
        return subs[which] + rng.normal(0.0, sigma, (n, D)), sub_labels[which]

    Xtr, ytr = draw(n_train)
    Xte, yte = draw(n_test)
    train, test = _scaled(Xtr, Xte, [f"x{j}" for j in range(D)])
    return (train, ytr), (test, yte)
