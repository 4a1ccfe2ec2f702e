"""Train all three models on the synthetic datasets, prune the hierarchy and
print one results row per model."""

import argparse
import csv
import sys
import time

from clxids.evaluate import REPORT_COLUMNS, evaluate
from clxids.ghsom import GhsomParams, train_ghsom
from clxids.gsom import GsomParams, train_gsom
from clxids.mapmodel import assign_labels
from clxids.prune import PruneParams, prune_tree
from clxids.som import SomParams, train_som
from clxids.synthetic import hierarchical_blobs, two_blobs


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run(name, train, test, seed, delta, timing_samples):
    (tr, ytr), (te, yte) = train, test
    X = tr.data
    models = []
    som, t = timed(lambda: assign_labels(train_som(X, SomParams(seed=seed)), X, ytr))
    models.append(("SOM", som, t))
    gsom, t = timed(lambda: assign_labels(train_gsom(X, GsomParams(seed=seed)), X, ytr))
    models.append(("GSOM", gsom, t))
    tree, t = timed(lambda: train_ghsom(X, ytr, GhsomParams(gsom=GsomParams(spread_factor=0.3, seed=seed))))
    models.append(("GHSOM", tree, t))
    (pruned, _), t_prune = timed(lambda: prune_tree(tree, X, ytr, PruneParams(delta)))
    models.append(("GHSOM pruned", pruned, t + t_prune))
    rows = []
    for label, model, secs in models:
        rep = evaluate(model, te.data, yte, train_time_s=secs, timing_samples=timing_samples)
        rows.append([name, label] + rep.csv_row())
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--delta", type=float, default=0.3)
    ap.add_argument("--timing-samples", type=int, default=1000)
    args = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["Dataset", "Model"] + [title for _, title in REPORT_COLUMNS])
    blobs = two_blobs(seed=args.seed)
    hier = hierarchical_blobs(seed=args.seed)
    for name, (train, test) in (("two_blobs", blobs), ("hierarchical_blobs", hier)):
        for row in run(name, train, test, args.seed, args.delta, args.timing_samples):
            w.writerow([f"{v:.4f}" if isinstance(v, float) else v for v in row])


if __name__ == "__main__":
    main()
