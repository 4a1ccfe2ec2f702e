"""One-pass pessimistic pruning of a growing hierarchical SOM."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, UnroutableSample, ZeroLocalSamples
from .ghsom import route_batch
from .mapmodel import MALICIOUS


@dataclass(frozen=True)
class PruneParams:
    delta: float = 0.3

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidParameter(f"delta must lie in (0, 1), got {self.delta}")


class Decision(str, enum.Enum):
    REMOVE = "remove"
    KEEP = "keep"


@dataclass
class PruneReport:
    maps_before: int
    maps_after: int
    removed_map_ids: list = field(default_factory=list)
    decisions: list = field(default_factory=list)

    @property
    def reduction(self):
        return 1.0 - self.maps_after / self.maps_before

    def to_dict(self):
        return {
            "maps_before": self.maps_before,
            "maps_after": self.maps_after,
            "reduction": self.reduction,
            "removed_map_ids": list(self.removed_map_ids),
            "decisions": list(self.decisions),
        }


def complexity_penalty(depth, subtree_size, total_maps, total_samples, delta, local_samples):
    """alpha = sqrt(((l + s) ln n + ln(m / delta)) / m_local), natural logs."""
    if local_samples < 1:
        raise ZeroLocalSamples("complexity penalty needs at least one local sample")
    if not 0 < delta <= 1:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    num = (depth + subtree_size) * math.log(total_maps) + math.log(total_samples / delta)
    return math.sqrt(max(num, 0.0) / local_samples)


def prune_decision(e_st, alpha, e_bl):
    return Decision.REMOVE if e_st + alpha >= e_bl else Decision.KEEP


def prune_tree(tree, data, labels, params=PruneParams()):
    """Bottom-up pass deciding, per non-root map, whether to replace its subtree
    by its parent neuron.

    Error rates use the training samples routed into each subtree. The subtree
    error is that of full hierarchical prediction; the best-leaf error is that
    of predicting the local majority class. Map count ``n`` and sample count
    ``m`` stay frozen at their pre-pruning values; subtree size ``s`` reflects
    pruning already done below.
    """
    y = np.asarray(labels, dtype=np.int64)
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise UnroutableSample("labels and data lengths differ")
    routes = route_batch(tree, X)
    total_maps = len(tree.maps)
    total_samples = X.shape[0]

    # Per map and row: local sample count and how many of them are malicious.
    counts = {}
    for map_id, m in tree.maps.items():
        idx, rows = routes.get(map_id, (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)))
        hits = np.bincount(rows, minlength=len(m))
        mal = np.bincount(rows, weights=(y[idx] == MALICIOUS), minlength=len(m)).astype(np.int64)
        counts[map_id] = (hits, mal)

    out = tree.copy()
    errors = {}
    sizes = {}
    report = PruneReport(maps_before=total_maps, maps_after=total_maps)

    for map_id in tree.postorder():
        m = out.maps[map_id]
        hits, mal = counts[map_id]
        err, size = 0, 1
        for r in range(len(m)):
            child = m.child_map_id[r]
            if child is not None and child in out.maps:
                err += errors[child]
                size += sizes[child]
            else:
                wrong = mal[r] if m.labels[r] != MALICIOUS else hits[r] - mal[r]
                err += int(wrong)
        errors[map_id], sizes[map_id] = err, size
        if map_id == tree.root_id:
            continue

        local = int(hits.sum())
        depth = out.depth(map_id)
        if local == 0:
            e_st = e_bl = alpha = None
            decision = Decision.REMOVE
        else:
            n_mal = int(mal.sum())
            e_st = err / local
            e_bl = min(n_mal, local - n_mal) / local
            alpha = complexity_penalty(depth, size, total_maps, total_samples, params.delta, local)
            decision = prune_decision(e_st, alpha, e_bl)
        report.decisions.append({
            "map_id": map_id, "depth": depth, "subtree_maps": size, "local_samples": local,
            "e_st": e_st, "e_bl": e_bl, "alpha": alpha, "removed": decision is Decision.REMOVE,
        })
        if decision is Decision.REMOVE:
            removed = out.subtree(map_id)
            pid, nid = out.parent[map_id]
            pm = out.maps[pid]
            pm.child_map_id[pm.row(nid)] = None
            for mid in removed:
                del out.maps[mid]
                del out.parent[mid]
            report.removed_map_ids.extend(removed)

    report.maps_after = len(out.maps)
    out.validate()
    return out, report

