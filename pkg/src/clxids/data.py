"""CSV ingestion, one-hot encoding, min-max scaling, feature selection and splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ClassWithSingleSample,
    ConfigError,
    DataError,
    EmptyData,
    InvalidParameter,
    MissingLabelColumn,
    RaggedRow,
    UnknownColumn,
    UnknownFeatureName,
    UnmappedLabel,
    UnparseableNumeric,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"
LABEL = "label"
IGNORE = "ignore"
KINDS = (NUMERIC, CATEGORICAL, LABEL, IGNORE)

WILDCARD = "*"

NSL_KDD_COLUMNS = [
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in",
    "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files", "num_outbound_cmds",
    "is_host_login", "is_guest_login", "count", "srv_count", "serror_rate",
    "srv_serror_rate", "rerror_rate", "srv_rerror_rate", "same_srv_rate",
    "diff_srv_rate", "srv_diff_host_rate", "dst_host_count", "dst_host_srv_count",
    "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate", "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate", "label", "difficulty",
]

# Feature subsets used for the flat SOM / GSOM models.
NSL_KDD_FEATURES = [
    "duration", "src_bytes", "dst_bytes", "count", "srv_count",
    "dst_host_count", "dst_host_srv_count",
]
CIC_IDS_2017_FEATURES = [
    "Flow Bytes/s", "Flow Duration", "Flow IAT Max", "Fwd IAT Total",
    "Flow Packets/s", "Destination Port", "Bwd IAT Total", "Fwd Packets/s",
    "Flow IAT Min", "Packet Length Variance", "Flow IAT Mean", "Fwd IAT Max",
    "Idle Max", "Idle Mean", "Idle Min", "Flow IAT Std", "Bwd IAT Max",
]

NSL_KDD_LABEL_MAPPING = {"normal": 0, WILDCARD: 1}
CIC_IDS_2017_LABEL_MAPPING = {"BENIGN": 0, WILDCARD: 1}


def nsl_kdd_schema():
    """Column kinds for the 43-column NSL-KDD files."""
    categorical = {"protocol_type", "service", "flag"}
    schema = {}
    for name in NSL_KDD_COLUMNS:
        if name == "label":
            schema[name] = LABEL
        elif name == "difficulty":
            schema[name] = IGNORE
        elif name in categorical:
            schema[name] = CATEGORICAL
        else:
            schema[name] = NUMERIC
    return schema


def map_label(raw, mapping):
    if raw in mapping:
        return int(mapping[raw])
    if WILDCARD in mapping:
        return int(mapping[WILDCARD])
    raise UnmappedLabel(f"label {raw!r} has no entry in the label mapping")


@dataclass(frozen=True)
class RawDataset:
    columns: list  # [(name, kind)]
    rows: list  # [tuple], numeric cells already parsed to float
    label_mapping: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = [n for n, k in self.columns if k == LABEL]
        if not labels:
            raise MissingLabelColumn("schema declares no label column")
        if len(labels) > 1:
            raise ConfigError(f"schema declares {len(labels)} label columns: {labels}")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise RaggedRow(i + 2, width, len(row))

    @property
    def label_column(self):
        return next(n for n, k in self.columns if k == LABEL)

    @property
    def names(self):
        return [n for n, _ in self.columns]

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        try:
            j = self.names.index(name)
        except ValueError:
            raise UnknownColumn(name) from None
        return [row[j] for row in self.rows]

    def labels(self):
        return np.array([map_label(v, self.label_mapping) for v in self.column(self.label_column)],
                        dtype=np.int64)


def load_csv(path, schema, label_mapping=None, *, delimiter=",", header=True,
             label_optional=False):
    """Parse a delimited file into a :class:`RawDataset`.

    ``schema`` maps column name to one of ``numeric``, ``categorical``,
    ``label`` or ``ignore``. With ``header=False`` the schema's own order is
    taken as the header (the official NSL-KDD files ship without one).
    With ``label_optional`` a file lacking the label column still loads; its
    label cells are empty strings.
    """
    schema = dict(schema)
    for name, kind in schema.items():
        if kind not in KINDS:
            raise ConfigError(f"column {name!r}: unknown kind {kind!r}")
    if LABEL not in schema.values():
        raise MissingLabelColumn("schema declares no label column")

    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        if header:
            try:
                names = [h.strip() for h in next(reader)]
            except StopIteration:
                raise EmptyData(f"{path} is empty") from None
            first_line = 2
        else:
            names = list(schema)
            first_line = 1
        unknown = [n for n in names if n not in schema]
        if unknown:
            raise UnknownColumn(f"columns not declared in schema: {unknown}")
        missing = [n for n in schema if n not in names]
        label_absent = [m for m in missing if schema[m] == LABEL]
        if label_absent and not label_optional:
            raise MissingLabelColumn(f"label column missing from {path}")
        missing = [m for m in missing if schema[m] != LABEL]
        if missing:
            raise UnknownColumn(f"schema columns absent from file: {missing}")
        kinds = [schema[n] for n in names]

        rows = []
        for lineno, cells in enumerate(reader, start=first_line):
            if not cells:
                continue
            if len(cells) != len(names):
                raise RaggedRow(lineno, len(names), len(cells))
            row = []
            for name, kind, cell in zip(names, kinds, cells):
                cell = cell.strip()
                if kind == NUMERIC:
                    try:
                        row.append(float(cell))
                    except ValueError:
                        raise UnparseableNumeric(lineno, name, cell) from None
                else:
                    row.append(cell)
            rows.append(tuple(row))
    columns = list(zip(names, kinds))
    if label_absent:
        columns.append((label_absent[0], LABEL))
        rows = [row + ("",) for row in rows]
    return RawDataset(columns=columns, rows=rows,
                      label_mapping=dict(label_mapping or {}))


@dataclass(frozen=True)
class FeatureMatrix:
    data: np.ndarray
    feature_names: tuple
    norm_params: tuple  # (mins, maxs), one entry per feature

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] == 0:
            raise DataError(f"feature matrix must be 2-D with D > 0, got shape {data.shape}")
        names = tuple(self.feature_names)
        if len(names) != data.shape[1]:
            raise DataError("feature_names length does not match column count")
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise DataError("feature values must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "feature_names", names)

    @property
    def D(self):
        return self.data.shape[1]

    def __len__(self):
        return self.data.shape[0]

    def take(self, idx):
        return FeatureMatrix(self.data[idx], self.feature_names, self.norm_params)

    @classmethod
    def from_unit_array(cls, data, feature_names=None):
        data = np.asarray(data, dtype=np.float64)
        if feature_names is None:
            feature_names = [f"f{j}" for j in range(data.shape[1])]
        D = data.shape[1]
        return cls(data, tuple(feature_names), (np.zeros(D), np.ones(D)))


def fit_minmax(values):
    """Column-wise (min, max) over finite entries; all-non-finite columns get (0, 0)."""
    values = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(values)
    lo = np.where(finite, values, np.inf).min(axis=0)
    hi = np.where(finite, values, -np.inf).max(axis=0)
    bad = ~np.isfinite(lo)
    lo[bad] = 0.0
    hi[bad] = 0.0
    return lo, hi


def apply_minmax(values, mins, maxs):
    """Scale with fitted bounds and clamp to [0, 1].

    Constant columns map to 0.0; NaN maps to 0.0; infinities clamp.
    """
    values = np.asarray(values, dtype=np.float64)
    span = maxs - mins
    constant = span == 0
    safe = np.where(constant, 1.0, span)
    out = (values - mins) / safe
    out = np.where(constant, 0.0, out)
    out = np.nan_to_num(out, nan=0.0, posinf=1.0, neginf=0.0)
    return np.clip(out, 0.0, 1.0)


@dataclass
class Preprocessor:
    """Fitted encoding state; reusable on test data and persisted with models."""

    columns: list
    categories: dict
    feature_names: list
    mins: np.ndarray
    maxs: np.ndarray
    label_mapping: dict
    selected: list | None = None

    @property
    def output_names(self):
        return list(self.selected) if self.selected is not None else list(self.feature_names)

    def encode(self, raw):
        """Raw rows to the unscaled expanded matrix (one-hot blocks are 0/1)."""
        names = raw.names
        blocks = []
        for name, kind in self.columns:
            if kind not in (NUMERIC, CATEGORICAL):
                continue
            if name not in names:
                raise UnknownColumn(f"column {name!r} missing from dataset")
            col = raw.column(name)
            if kind == NUMERIC:
                blocks.append(np.asarray(col, dtype=np.float64)[:, None])
            else:
                cats = self.categories[name]
                index = {c: j for j, c in enumerate(cats)}
                block = np.zeros((len(col), len(cats)))
                for i, v in enumerate(col):
                    j = index.get(v)
                    if j is not None:
                        block[i, j] = 1.0
                blocks.append(block)
        if not blocks:
            raise DataError("schema has no feature columns")
        return np.hstack(blocks)

    def features(self, raw):
        """Scaled (and selected) features only; label cells are never read."""
        data = apply_minmax(self.encode(raw), self.mins, self.maxs)
        m = FeatureMatrix(data, tuple(self.feature_names), (self.mins.copy(), self.maxs.copy()))
        if self.selected is not None:
            m = select_features(m, keep=self.selected)
        return m

    def transform(self, raw):
        m = self.features(raw)
        labels = np.array([map_label(v, self.label_mapping) for v in raw.column(raw.label_column)],
                          dtype=np.int64)
        return m, labels

    def to_dict(self):
        return {
            "columns": [list(c) for c in self.columns],
            "categories": self.categories,
            "feature_names": list(self.feature_names),
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "label_mapping": self.label_mapping,
            "selected": self.selected,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            columns=[tuple(c) for c in doc["columns"]],
            categories={k: list(v) for k, v in doc["categories"].items()},
            feature_names=list(doc["feature_names"]),
            mins=np.asarray(doc["mins"], dtype=np.float64),
            maxs=np.asarray(doc["maxs"], dtype=np.float64),
            label_mapping=dict(doc["label_mapping"]),
            selected=None if doc.get("selected") is None else list(doc["selected"]),
        )


def fit_preprocessor(raw, fit_on=None):
    """Learn one-hot vocabularies and min/max bounds from the rows in ``fit_on``."""
    n = len(raw)
    fit_on = np.arange(n) if fit_on is None else np.asarray(sorted(set(int(i) for i in fit_on)))
    if fit_on.size == 0:
        raise EmptyData("fit_on is empty")
    categories = {}
    feature_names = []
    for name, kind in raw.columns:
        if kind == NUMERIC:
            feature_names.append(name)
        elif kind == CATEGORICAL:
            col = raw.column(name)
            cats = sorted({col[i] for i in fit_on})
            categories[name] = cats
            feature_names.extend(f"{name}={c}" for c in cats)
    pre = Preprocessor(columns=list(raw.columns), categories=categories,
                       feature_names=feature_names, mins=np.zeros(0), maxs=np.zeros(0),
                       label_mapping=dict(raw.label_mapping))
    encoded = pre.encode(raw)[fit_on]
    mins, maxs = fit_minmax(encoded)
    onehot = np.array(["=" in f and f.split("=", 1)[0] in categories for f in feature_names])
    mins[onehot] = 0.0
    maxs[onehot] = 1.0
    pre.mins, pre.maxs = mins, maxs
    return pre


def encode_and_normalize(raw, fit_on=None):
    """One-hot encode and min-max scale ``raw`` with bounds fitted on ``fit_on`` rows only."""
    return fit_preprocessor(raw, fit_on).transform(raw)


def feature_significance(m):
    """Per-feature sample variance rescaled so the largest equals 1."""
    data = m.data if isinstance(m, FeatureMatrix) else np.asarray(m, dtype=np.float64)
    if data.shape[0] < 2:
        raise EmptyData("significance needs at least two samples")
    var = data.var(axis=0, ddof=1)
    var[np.ptp(data, axis=0) == 0] = 0.0  # the mean of a constant column can round off it
    top = var.max()
    if top <= 0:
        return np.zeros_like(var)
    return var / top


def select_features(m, keep=None, top_k=None):
    if (keep is None) == (top_k is None):
        raise ConfigError("pass exactly one of keep or top_k")
    names = list(m.feature_names)
    if keep is not None:
        missing = [k for k in keep if k not in names]
        if missing:
            raise UnknownFeatureName(f"unknown features: {missing}")
        idx = [names.index(k) for k in keep]
    else:
        if not 1 <= top_k <= len(names):
            raise InvalidParameter(f"top_k must be in [1, {len(names)}], got {top_k}")
        sig = feature_significance(m)
        idx = list(np.argsort(-sig, kind="stable")[:top_k])
    mins, maxs = m.norm_params
    return FeatureMatrix(m.data[:, idx], tuple(names[i] for i in idx),
                         (np.asarray(mins)[idx], np.asarray(maxs)[idx]))


def stratified_split(m, labels, test_fraction, seed):
    """Per-class shuffled split; returns ``((train_m, train_y), (test_m, test_y))``."""
    if not 0 < test_fraction < 1:
        raise InvalidParameter("test_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    if len(labels) != len(m):
        raise DataError("labels and feature matrix lengths differ")
    rng = np.random.default_rng(seed)
    test_idx = []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size == 1:
            raise ClassWithSingleSample(f"class {cls} has a single sample")
        n_test = int(math.floor(members.size * test_fraction + 0.5))
        n_test = min(max(n_test, 1), members.size - 1)
        test_idx.extend(rng.permutation(members)[:n_test].tolist())
    test_mask = np.zeros(len(labels), dtype=bool)
    test_mask[test_idx] = True
    train_idx = np.flatnonzero(~test_mask)
    test_idx = np.flatnonzero(test_mask)
    return ((m.take(train_idx), labels[train_idx]), (m.take(test_idx), labels[test_idx]))
