import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from clxids.data import (
    CIC_IDS_2017_FEATURES,
    NSL_KDD_COLUMNS,
    NSL_KDD_FEATURES,
    FeatureMatrix,
    RawDataset,
    apply_minmax,
    encode_and_normalize,
    feature_significance,
    fit_minmax,
    fit_preprocessor,
    load_csv,
    map_label,
    nsl_kdd_schema,
    select_features,
    stratified_split,
)
from clxids.errors import (
    ClassWithSingleSample,
    ConfigError,
    DataError,
    MissingLabelColumn,
    RaggedRow,
    UnknownColumn,
    UnknownFeatureName,
    UnmappedLabel,
    UnparseableNumeric,
)

SCHEMA = {"duration": "numeric", "src_bytes": "numeric", "label": "label"}
MAPPING = {"normal": 0, "attack": 1}


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def raw_from(columns, rows, mapping=MAPPING):
    return RawDataset(columns=columns, rows=[tuple(r) for r in rows], label_mapping=mapping)


# ---------------------------------------------------------------- load_csv


def test_three_row_csv(tmp_path):
    p = write(tmp_path, "duration,src_bytes,label\n1,10,normal\n2,20,attack\n3,30,normal\n")
    raw = load_csv(p, SCHEMA, MAPPING)
    assert len(raw) == 3
    assert sum(k == "numeric" for _, k in raw.columns) == 2
    assert raw.rows[1] == (2.0, 20.0, "attack")
    assert raw.labels().tolist() == [0, 1, 0]


def test_ragged_row_reports_line(tmp_path):
    p = write(tmp_path, "duration,src_bytes,label\n1,10,normal\n2,attack\n")
    with pytest.raises(RaggedRow) as err:
        load_csv(p, SCHEMA, MAPPING)
    assert err.value.line == 3


def test_unparseable_numeric(tmp_path):
    p = write(tmp_path, "duration,src_bytes,label\n1,ten,normal\n")
    with pytest.raises(UnparseableNumeric) as err:
        load_csv(p, SCHEMA, MAPPING)
    assert (err.value.line, err.value.column) == (2, "src_bytes")


def test_missing_label_column(tmp_path):
    p = write(tmp_path, "duration,src_bytes\n1,10\n")
    with pytest.raises(MissingLabelColumn):
        load_csv(p, SCHEMA, MAPPING)


def test_label_optional_fills_blank_labels(tmp_path):
    p = write(tmp_path, "duration,src_bytes\n1,10\n")
    raw = load_csv(p, SCHEMA, MAPPING, label_optional=True)
    assert raw.label_column == "label" and raw.rows == [(1.0, 10.0, "")]


def test_unknown_column_rejected(tmp_path):
    p = write(tmp_path, "duration,src_bytes,extra,label\n1,10,x,normal\n")
    with pytest.raises(UnknownColumn):
        load_csv(p, SCHEMA, MAPPING)


def test_schema_without_label_rejected(tmp_path):
    p = write(tmp_path, "duration\n1\n")
    with pytest.raises(MissingLabelColumn):
        load_csv(p, {"duration": "numeric"})


def test_bad_kind_is_config_error(tmp_path):
    p = write(tmp_path, "duration,label\n1,normal\n")
    with pytest.raises(ConfigError):
        load_csv(p, {"duration": "float", "label": "label"})


def test_missing_file_is_data_error(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv", SCHEMA)


def test_headerless_file_uses_schema_order(tmp_path):
    p = write(tmp_path, "5,6,attack\n")
    raw = load_csv(p, SCHEMA, MAPPING, header=False)
    assert raw.names == ["duration", "src_bytes", "label"]
    assert raw.labels().tolist() == [1]


def test_nsl_kdd_schema_shape():
    s = nsl_kdd_schema()
    assert list(s) == NSL_KDD_COLUMNS and len(s) == 43
    assert s["label"] == "label" and s["protocol_type"] == "categorical"


def test_table_feature_lists():
    assert NSL_KDD_FEATURES == ["duration", "src_bytes", "dst_bytes", "count", "srv_count",
                                "dst_host_count", "dst_host_srv_count"]
    assert len(CIC_IDS_2017_FEATURES) == 17 and len(set(CIC_IDS_2017_FEATURES)) == 17


def test_label_mapping_rules():
    assert map_label("normal", {"normal": 0, "*": 1}) == 0
    assert map_label("neptune", {"normal": 0, "*": 1}) == 1
    with pytest.raises(UnmappedLabel):
        map_label("neptune", {"normal": 0})


# ---------------------------------------------------------------- normalization


def test_numeric_minmax():
    raw = raw_from([("a", "numeric"), ("label", "label")], [(2, "normal"), (4, "normal"), (6, "attack")])
    m, y = encode_and_normalize(raw)
    assert m.data[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert y.tolist() == [0, 0, 1]


def test_categorical_one_hot():
    raw = raw_from([("p", "categorical"), ("label", "label")],
                   [("tcp", "normal"), ("udp", "normal"), ("tcp", "normal")])
    m, _ = encode_and_normalize(raw)
    assert m.feature_names == ("p=tcp", "p=udp")
    assert m.data.tolist() == [[1, 0], [0, 1], [1, 0]]


def test_out_of_range_clamps():
    # fitted on (2, 6): 10 -> (10-2)/4 = 2 -> clamp 1; -2 -> -1 -> clamp 0
    out = apply_minmax(np.array([[10.0], [-2.0], [3.0]]), np.array([2.0]), np.array([6.0]))
    assert out[:, 0].tolist() == [1.0, 0.0, 0.25]


def test_fit_on_subset_only():
    raw = raw_from([("a", "numeric"), ("label", "label")],
                   [(0, "normal"), (10, "normal"), (100, "attack")])
    m, _ = encode_and_normalize(raw, fit_on=[0, 1])
    assert m.data[:, 0].tolist() == [0.0, 1.0, 1.0]
    assert m.norm_params[0][0] == 0 and m.norm_params[1][0] == 10


def test_constant_column_maps_to_zero():
    raw = raw_from([("a", "numeric"), ("label", "label")], [(3, "normal"), (3, "attack")])
    m, _ = encode_and_normalize(raw)
    assert m.data[:, 0].tolist() == [0.0, 0.0]


def test_unknown_category_is_all_zero():
    train = raw_from([("p", "categorical"), ("label", "label")], [("tcp", "normal"), ("udp", "attack")])
    pre = fit_preprocessor(train)
    test = raw_from([("p", "categorical"), ("label", "label")], [("icmp", "normal")])
    m, _ = pre.transform(test)
    assert m.data.tolist() == [[0.0, 0.0]]


def test_nonfinite_values_stay_in_unit_range():
    out = apply_minmax(np.array([[np.nan], [np.inf], [-np.inf], [1.0]]), np.array([0.0]), np.array([2.0]))
    assert out[:, 0].tolist() == [0.0, 1.0, 0.0, 0.5]


def test_preprocessor_round_trip():
    raw = raw_from([("a", "numeric"), ("p", "categorical"), ("label", "label")],
                   [(1, "x", "normal"), (5, "y", "attack"), (3, "x", "attack")])
    pre = fit_preprocessor(raw)
    again = type(pre).from_dict(pre.to_dict())
    assert np.array_equal(pre.transform(raw)[0].data, again.transform(raw)[0].data)


unit_matrices = hnp.arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 5)),
                           elements=st.floats(0, 1))


@given(unit_matrices)
def test_normalization_idempotent(a):
    mins, maxs = fit_minmax(a)
    once = apply_minmax(a, mins, maxs)
    m2, x2 = fit_minmax(once)
    twice = apply_minmax(once, m2, x2)
    assert np.allclose(once, twice, atol=1e-12, rtol=0)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.sampled_from(["a", "b", "c"])), min_size=2, max_size=20),
       st.randoms(use_true_random=False))
def test_labels_never_leak_into_features(rows, rnd):
    labels = [rnd.choice(["normal", "attack"]) for _ in rows]
    shuffled = labels[:]
    rnd.shuffle(shuffled)
    cols = [("v", "numeric"), ("c", "categorical"), ("label", "label")]
    m1, _ = encode_and_normalize(raw_from(cols, [(v, c, l) for (v, c), l in zip(rows, labels)]))
    m2, _ = encode_and_normalize(raw_from(cols, [(v, c, l) for (v, c), l in zip(rows, shuffled)]))
    assert np.array_equal(m1.data, m2.data) and m1.feature_names == m2.feature_names


@given(unit_matrices)
def test_feature_matrix_entries_in_unit_range(a):
    m = FeatureMatrix.from_unit_array(a)
    assert (m.data >= 0).all() and (m.data <= 1).all()


def test_feature_matrix_rejects_out_of_range():
    with pytest.raises(DataError):
        FeatureMatrix(np.array([[1.5]]), ("a",), (np.zeros(1), np.ones(1)))


# ---------------------------------------------------------------- significance and selection


def test_significance_variance_ratio():
    # Deviations of +-0.2 and +-0.1 around 0.5: population variances 0.04 and 0.01.
    a = np.array([[0.3, 0.4], [0.7, 0.6], [0.3, 0.4], [0.7, 0.6]])
    sig = feature_significance(a)
    assert sig.tolist() == pytest.approx([1.0, 0.25], abs=1e-12)


def test_significance_constant_and_equal():
    a = np.array([[0.5, 0.0, 1.0], [0.5, 1.0, 0.0]])
    assert feature_significance(a).tolist() == [0.0, 1.0, 1.0]
    assert feature_significance(np.full((3, 2), 0.2)).tolist() == [0.0, 0.0]


@given(unit_matrices)
def test_significance_range(a):
    sig = feature_significance(a)
    assert ((sig >= 0) & (sig <= 1)).all()
    assert sig.max() == 1.0 or sig.max() == 0.0


def _matrix(names, n=6, seed=0):
    return FeatureMatrix.from_unit_array(np.random.default_rng(seed).random((n, len(names))), names)


def test_select_table_one_list():
    m = _matrix(NSL_KDD_COLUMNS[:41])
    out = select_features(m, keep=NSL_KDD_FEATURES)
    assert out.D == 7 and list(out.feature_names) == NSL_KDD_FEATURES


def test_select_table_two_list():
    m = _matrix(CIC_IDS_2017_FEATURES + ["Label2", "Other"])
    assert select_features(m, keep=CIC_IDS_2017_FEATURES).D == 17


def test_select_identity_and_idempotent():
    names = ["a", "b", "c"]
    m = _matrix(names)
    same = select_features(m, keep=names)
    assert np.array_equal(same.data, m.data)
    once = select_features(m, keep=["c", "a"])
    twice = select_features(once, keep=["c", "a"])
    assert np.array_equal(once.data, twice.data) and once.feature_names == ("c", "a")


def test_select_top_k_ranks_by_significance():
    a = np.array([[0.5, 0.0, 0.4], [0.5, 1.0, 0.6], [0.5, 0.0, 0.4]])
    m = FeatureMatrix.from_unit_array(a, ["flat", "wide", "narrow"])
    assert select_features(m, top_k=2).feature_names == ("wide", "narrow")


def test_select_unknown_name():
    with pytest.raises(UnknownFeatureName):
        select_features(_matrix(["a"]), keep=["b"])


# ---------------------------------------------------------------- split


def test_split_balanced():
    m = _matrix(["a"], n=100)
    y = np.array([0] * 50 + [1] * 50)
    (trm, try_), (tem, tey) = stratified_split(m, y, 0.2, seed=7)
    assert np.bincount(tey).tolist() == [10, 10]
    assert len(trm) == 80 and len(tem) == 20
    (_, _), (tem2, tey2) = stratified_split(m, y, 0.2, seed=7)
    assert np.array_equal(tem.data, tem2.data) and np.array_equal(tey, tey2)


def test_split_imbalanced():
    m = _matrix(["a"], n=100)
    y = np.array([0] * 90 + [1] * 10)
    (_, _), (_, tey) = stratified_split(m, y, 0.2, seed=1)
    assert np.bincount(tey).tolist() == [18, 2]


def test_split_single_sample_class():
    with pytest.raises(ClassWithSingleSample):
        stratified_split(_matrix(["a"], n=3), np.array([0, 0, 1]), 0.5, seed=0)


@given(st.integers(2, 40), st.integers(2, 40), st.floats(0.05, 0.95), st.integers(0, 2**16))
def test_split_proportions_within_one(n0, n1, frac, seed):
    m = _matrix(["a"], n=n0 + n1)
    y = np.array([0] * n0 + [1] * n1)
    (_, ytr), (_, yte) = stratified_split(m, y, frac, seed)
    for cls, n in ((0, n0), (1, n1)):
        got = int((yte == cls).sum())
        assert abs(got - n * frac) <= 1
        assert 1 <= got <= n - 1
    assert len(ytr) + len(yte) == n0 + n1
