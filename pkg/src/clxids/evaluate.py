"""Binary classification metrics, latency benchmarks and the results report."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import LengthMismatch
from .ghsom import GhsomTree, network_size, predict_ghsom, predict_ghsom_batch
from .mapmodel import MALICIOUS, predict_flat, predict_flat_batch

# Column order of the results table.
REPORT_COLUMNS = [
    ("accuracy", "Accuracy"),
    ("precision", "Precision"),
    ("recall", "Recall"),
    ("f1", "F1"),
    ("fpr", "FPR"),
    ("fnr", "FNR"),
    ("network_size", "Network Size"),
    ("train_time_s", "Training Time (s)"),
    ("predict_time_ms", "Prediction Time (ms)"),
]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(truth, pred):
    """Confusion counts with malicious (1) as the positive class."""
    t = np.asarray(truth, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if t.shape != p.shape:
        raise LengthMismatch(f"truth has {t.size} labels, predictions {p.size}")
    pos_t, pos_p = t == MALICIOUS, p == MALICIOUS
    return ConfusionMatrix(
        tp=int(np.sum(pos_t & pos_p)),
        fp=int(np.sum(~pos_t & pos_p)),
        tn=int(np.sum(~pos_t & ~pos_p)),
        fn=int(np.sum(pos_t & ~pos_p)),
    )


def _ratio(num, den):
    return (Fraction(0), True) if den == 0 else (Fraction(num, den), False)


def exact_metrics(c):
    """Rates as exact fractions plus the set of names whose denominator was zero."""
    undefined = set()
    out = {}
    for name, num, den in (
        ("accuracy", c.tp + c.tn, c.total),
        ("precision", c.tp, c.tp + c.fp),
        ("recall", c.tp, c.tp + c.fn),
        ("fpr", c.fp, c.fp + c.tn),
        ("fnr", c.fn, c.fn + c.tp),
    ):
        out[name], bad = _ratio(num, den)
        if bad:
            undefined.add(name)
    p, r = out["precision"], out["recall"]
    if p + r == 0:
        out["f1"] = Fraction(0)
        undefined.add("f1")
    else:
        out["f1"] = 2 * p * r / (p + r)
    return out, undefined


def metrics(c):
    """Float rates (each correctly rounded from its exact value) and undefined flags.

    Undefined ratios are reported as 0.0 and listed under ``"undefined"``.
    """
    exact, undefined = exact_metrics(c)
    out = {k: float(v) for k, v in exact.items()}
    out["undefined"] = sorted(undefined)
    return out


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    fpr: float
    fnr: float
    network_size: int
    train_time_s: float
    predict_time_ms: float
    predict_time_median_ms: float = 0.0
    confusion: dict = field(default_factory=dict)
    undefined: list = field(default_factory=list)

    def to_dict(self):
        return dict(self.__dict__)

    def csv_header(self):
        return [title for _, title in REPORT_COLUMNS]

    def csv_row(self):
        return [getattr(self, key) for key, _ in REPORT_COLUMNS]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        w.writerow(self.csv_row())
        return buf.getvalue()


def predict_batch(model, data):
    if isinstance(model, GhsomTree):
        return predict_ghsom_batch(model, data)
    return predict_flat_batch(model, data)


def predict_one(model, sample):
    if isinstance(model, GhsomTree):
        return predict_ghsom(model, sample)[0]
    return predict_flat(model, sample)


@dataclass(frozen=True)
class Timing:
    mean_ms: float
    median_ms: float
    samples: int
    repetitions: int


def benchmark(model, data, repetitions=1):
    """Per-sample prediction latency, one sample at a time, on a monotonic clock."""
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    times = []
    for _ in range(max(1, repetitions)):
        for x in X:
            t0 = time.perf_counter_ns()
            predict_one(model, x)
            times.append((time.perf_counter_ns() - t0) / 1e6)
    return Timing(mean_ms=float(np.mean(times)), median_ms=float(statistics.median(times)),
                  samples=X.shape[0], repetitions=max(1, repetitions))


def evaluate(model, data, labels, train_time_s=0.0, repetitions=1, timing_samples=None):
    """Full report: metrics on every sample plus latency on up to ``timing_samples`` of them."""
    X = np.asarray(getattr(data, "data", data), dtype=np.float64)
    pred = predict_batch(model, X)
    c = confusion(labels, pred)
    m = metrics(c)
    timed = X if timing_samples is None else X[:timing_samples]
    t = benchmark(model, timed, repetitions)
    return EvalReport(
        accuracy=m["accuracy"], precision=m["precision"], recall=m["recall"], f1=m["f1"],
        fpr=m["fpr"], fnr=m["fnr"], network_size=network_size(model),
        train_time_s=float(train_time_s), predict_time_ms=t.mean_ms,
        predict_time_median_ms=t.median_ms, confusion=c.__dict__.copy(),
        undefined=m["undefined"],
    )
