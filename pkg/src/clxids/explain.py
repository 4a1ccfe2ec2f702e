"""Statistical and visual explanations mined from trained maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .ghsom import GhsomTree, predict_ghsom
from .mapmodel import MapModel, UNLABELED, bmu, predict_flat

ARTIFACT_VERSION = 1


def artifact(kind, map_id, payload):
    return {"kind": kind, "version": ARTIFACT_VERSION, "map_id": map_id, "payload": payload}


@dataclass(frozen=True)
class UMatrix:
    map_id: str
    ids: np.ndarray
    coords: np.ndarray
    heights: np.ndarray


def u_matrix(map_):
    """Mean weight-space distance from each neuron to its occupied orthogonal neighbors."""
    table = map_.neighbor_table
    W = map_.weights
    heights = np.zeros(len(map_))
    for i in range(len(map_)):
        nb = table[i][table[i] >= 0]
        if nb.size:
            heights[i] = np.sqrt(((W[nb] - W[i]) ** 2).sum(axis=1)).mean()
    return UMatrix(map_.map_id, map_.ids.copy(), map_.coords.copy(), heights)


@dataclass(frozen=True)
class StarburstOverlay:
    map_id: str
    ids: np.ndarray
    pointer: np.ndarray  # neuron id each neuron flows to (itself at a local minimum)
    cluster: np.ndarray  # id of the terminal minimum


def starburst(u):
    """Steepest descent on U-matrix heights.

    Each neuron points at its lowest strictly-lower orthogonal neighbor (ties
    to the smaller id); neurons with no lower neighbor are minima and point at
    themselves. Heights strictly decrease along pointers, so chains terminate.
    """
    row_of = {(int(r), int(c)): i for i, (r, c) in enumerate(u.coords)}
    pointer = np.arange(len(u.ids))
    for i, (r, c) in enumerate(u.coords.tolist()):
        best = i
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
            j = row_of.get((r + dr, c + dc))
            if j is None or u.heights[j] >= u.heights[i]:
                continue
            if (best == i or u.heights[j] < u.heights[best]
                    or (u.heights[j] == u.heights[best] and u.ids[j] < u.ids[best])):
                best = j
        pointer[i] = best
    terminal = pointer.copy()
    for i in range(len(terminal)):
        t = i
        while pointer[t] != t:
            t = pointer[t]
        terminal[i] = t
    return StarburstOverlay(u.map_id, u.ids.copy(), u.ids[pointer], u.ids[terminal])


def feature_heatmap(map_, feature):
    """Per-neuron value of one weight component."""
    if not 0 <= feature < map_.D:
        raise DimensionMismatch(f"feature index {feature} outside 0..{map_.D - 1}")
    return map_.weights[:, feature].copy()


def label_map(map_):
    return map_.labels.copy()


@dataclass(frozen=True)
class LocalExplanation:
    significance: np.ndarray
    distances: np.ndarray
    bmu: int
    map_id: str
    label: int
    path: list


def significance_from_distances(distances):
    """Invert min-maxed distances: the closest feature scores 1, the farthest 0.
    All-equal distances score 1 everywhere."""
    X = np.asarray(distances, dtype=np.float64)
    lo, hi = X.min(), X.max()
    if hi == lo:
        return np.ones_like(X)
    return 1.0 - (X - lo) / (hi - lo)


def local_explanation(model, sample):
    x = np.asarray(sample, dtype=np.float64)
    if isinstance(model, GhsomTree):
        label, path = predict_ghsom(model, x)
        map_id, nid = path[-1]
        m = model.maps[map_id]
    else:
        m = model
        if x.ndim != 1 or x.shape[0] != m.D:
            raise DimensionMismatch(f"sample has shape {x.shape}, map expects ({m.D},)")
        nid, _ = bmu(m, x)
        label = predict_flat(m, x)
        path = [(m.map_id, nid)]
    distances = np.abs(x - m.weights[m.row(nid)])
    return LocalExplanation(significance_from_distances(distances), distances, nid,
                            m.map_id, int(label), list(path))


def global_explanation(significance, feature_names):
    """Features sorted by descending significance; equal scores keep input order."""
    sig = np.asarray(significance, dtype=np.float64)
    if len(sig) != len(feature_names):
        raise DimensionMismatch("significance and feature name lengths differ")
    order = np.argsort(-sig, kind="stable")
    return [(feature_names[i], float(sig[i])) for i in order]


def _cells(map_, values, key="value"):
    out = []
    for r in map_._id_order:
        out.append({"id": int(map_.ids[r]), "coord": [int(map_.coords[r, 0]), int(map_.coords[r, 1])],
                    key: values[r]})
    return out


def _model_kind(map_):
    return map_.meta.get("model", "gsom")


def u_matrix_artifact(map_):
    u = u_matrix(map_)
    sb = starburst(u)
    payload = {
        "model": _model_kind(map_),
        "cells": _cells(map_, [float(h) for h in u.heights]),
        "starburst": [{"id": int(i), "to": int(t), "cluster": int(c)}
                      for i, t, c in sorted(zip(sb.ids.tolist(), sb.pointer.tolist(), sb.cluster.tolist()))],
    }
    return artifact("u_matrix", map_.map_id, payload)


def feature_heatmap_artifact(map_, feature, feature_name=None):
    values = feature_heatmap(map_, feature)
    payload = {
        "model": _model_kind(map_),
        "feature": feature_name if feature_name is not None else f"f{feature}",
        "feature_index": int(feature),
        "cells": _cells(map_, [float(v) for v in values]),
    }
    return artifact("feature_heatmap", map_.map_id, payload)


def label_map_artifact(map_):
    cells = _cells(map_, [None if lab == UNLABELED else int(lab) for lab in map_.labels], key="label")
    for cell in cells:
        cell["branch"] = map_.child_map_id[map_.row(cell["id"])] is not None
    return artifact("label_map", map_.map_id, {"model": _model_kind(map_), "cells": cells})


def local_explanation_artifact(model, sample, feature_names):
    exp = local_explanation(model, sample)
    payload = {
        "bmu": exp.bmu,
        "label": exp.label,
        "path": [[mid, int(nid)] for mid, nid in exp.path],
        "features": [{"name": n, "distance": float(d), "significance": float(s)}
                     for n, d, s in zip(feature_names, exp.distances, exp.significance)],
    }
    return artifact("local_explanation", exp.map_id, payload)


def global_explanation_artifact(significance, feature_names, map_id="global"):
    ranked = global_explanation(significance, list(feature_names))
    return artifact("global_explanation", map_id,
                    {"features": [{"name": n, "score": s} for n, s in ranked]})


def maps_of(model):
    if isinstance(model, GhsomTree):
        return [model.maps[k] for k in model.subtree(model.root_id)]
    if isinstance(model, MapModel):
        return [model]
    raise TypeError(f"not a model: {type(model).__name__}")
