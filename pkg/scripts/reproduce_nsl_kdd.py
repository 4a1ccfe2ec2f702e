"""Reproduction run on the NSL-KDD files (KDDTrain+.txt / KDDTest+.txt).

The files are headerless, 43 columns, and are not shipped with the package.
SOM and GSOM use the seven selected features; the GHSOM uses every feature.
"""

import argparse
import csv
import sys
import time

import numpy as np

from clxids.data import (
    NSL_KDD_FEATURES,
    NSL_KDD_LABEL_MAPPING,
    feature_significance,
    fit_preprocessor,
    load_csv,
    nsl_kdd_schema,
)
from clxids.evaluate import REPORT_COLUMNS, evaluate
from clxids.ghsom import GhsomParams, train_ghsom
from clxids.gsom import GsomParams, train_gsom
from clxids.mapmodel import assign_labels
from clxids.prune import PruneParams, prune_tree
from clxids.som import SomParams, train_som


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("train")
    ap.add_argument("test")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--delta", type=float, default=0.3)
    ap.add_argument("--timing-samples", type=int, default=2000)
    args = ap.parse_args(argv)

    schema = nsl_kdd_schema()
    train = load_csv(args.train, schema, NSL_KDD_LABEL_MAPPING, header=False)
    test = load_csv(args.test, schema, NSL_KDD_LABEL_MAPPING, header=False)
    pre = fit_preprocessor(train)
    full_tr, ytr = pre.transform(train)
    full_te, yte = pre.transform(test)
    pre.selected = list(NSL_KDD_FEATURES)
    sel_tr, _ = pre.transform(train)
    sel_te, _ = pre.transform(test)

    sig = feature_significance(sel_tr)
    top = [sel_tr.feature_names[i] for i in np.argsort(-sig, kind="stable")[:3]]
    print("top significance:", ", ".join(top), file=sys.stderr)

    runs = []
    t0 = time.perf_counter()
    som = assign_labels(train_som(sel_tr.data, SomParams(seed=args.seed)), sel_tr.data, ytr)
    runs.append(("SOM", som, time.perf_counter() - t0, sel_te))
    t0 = time.perf_counter()
    gsom = assign_labels(train_gsom(sel_tr.data, GsomParams(seed=args.seed)), sel_tr.data, ytr)
    runs.append(("GSOM", gsom, time.perf_counter() - t0, sel_te))
    t0 = time.perf_counter()
    tree = train_ghsom(full_tr.data, ytr, GhsomParams(gsom=GsomParams(spread_factor=0.3, seed=args.seed)))
    t_tree = time.perf_counter() - t0
    runs.append(("GHSOM", tree, t_tree, full_te))
    t0 = time.perf_counter()
    pruned, report = prune_tree(tree, full_tr.data, ytr, PruneParams(args.delta))
    runs.append(("GHSOM pruned", pruned, t_tree + time.perf_counter() - t0, full_te))
    print(f"pruning: maps {report.maps_before} -> {report.maps_after}", file=sys.stderr)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["Model"] + [title for _, title in REPORT_COLUMNS])
    for name, model, secs, te in runs:
        rep = evaluate(model, te.data, yte, train_time_s=secs, timing_samples=args.timing_samples)
        w.writerow([name] + [f"{v:.4f}" if isinstance(v, float) else v for v in rep.csv_row()])


if __name__ == "__main__":
    main()
