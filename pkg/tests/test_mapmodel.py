import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import lattice_map, random_map
from oracles import brute_bmu, brute_pair, brute_predict_flat, brute_quantization_error
from clxids.errors import DataError, DimensionMismatch, EmptyData, MapTooSmall, NoLabeledNeuron
from clxids.mapmodel import (
    MALICIOUS,
    UNLABELED,
    MapModel,
    assign_labels,
    bmu,
    bmu_batch,
    bmu_pair,
    convergence_index,
    convergence_index_from,
    embedding_accuracy,
    predict_flat,
    predict_flat_batch,
    quality_report,
    quantization_error,
    topographic_error,
)

seeds = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- bmu


def test_bmu_identity():
    m = lattice_map([[0.2, 0.3], [0.7, 0.1], [0.5, 0.5]])
    assert bmu(m, [0.7, 0.1]) == (1, 0.0)


def test_bmu_hand_distance():
    m = lattice_map([[0, 0], [1, 1]])
    nid, d = bmu(m, [0.1, 0.1])
    assert nid == 0
    assert d == pytest.approx(math.sqrt(0.02), abs=1e-15)


def test_bmu_tie_goes_to_smallest_id():
    m = lattice_map([[0.5, 0.5], [0.5, 0.5]], ids=[7, 3])
    assert bmu(m, [0.1, 0.9])[0] == 3


def test_bmu_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        bmu(lattice_map([[0, 0]]), [0.1, 0.2, 0.3])


@given(seeds, st.integers(1, 60), st.integers(1, 8))
def test_bmu_matches_linear_scan(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    for x in rng.random((5, D)):
        nid, d = bmu(m, x)
        want_id, want_d = brute_bmu(m, x)
        assert nid == want_id
        assert d == pytest.approx(want_d, abs=1e-12)


@given(seeds, st.integers(1, 30), st.integers(1, 5))
def test_bmu_batch_equals_single(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    X = rng.random((17, D))
    ids, dists = bmu_batch(m, X)
    for x, i, d in zip(X, ids, dists):
        assert bmu(m, x) == (i, d)


@given(seeds, st.integers(2, 30), st.integers(1, 4))
def test_bmu_invariant_under_insertion_order(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    perm = rng.permutation(k)
    shuffled = MapModel("m0", m.weights[perm], m.coords[perm], ids=m.ids[perm], labels=m.labels[perm])
    for x in rng.random((5, D)):
        assert bmu(m, x) == bmu(shuffled, x)
        assert bmu_pair(m, x) == bmu_pair(shuffled, x)


# ---------------------------------------------------------------- bmu_pair


def test_bmu_pair_single_neuron():
    with pytest.raises(MapTooSmall):
        bmu_pair(lattice_map([[0.5]]), [0.5])


def test_bmu_pair_identical_weights():
    m = lattice_map([[0.4, 0.4]] * 3, ids=[5, 2, 9])
    assert bmu_pair(m, [0.0, 0.0]) == (2, 5)


@given(seeds, st.integers(2, 60), st.integers(1, 8))
def test_bmu_pair_matches_full_sort(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    for x in rng.random((5, D)):
        assert bmu_pair(m, x) == brute_pair(m, x)


# ---------------------------------------------------------------- labels and prediction


def test_assign_labels_majority_and_tie():
    m = lattice_map([[0.0], [1.0]])
    X = np.array([[0.0], [0.01], [0.02], [1.0], [0.99]])
    y = np.array([0, 0, 1, 0, 1])
    out = assign_labels(m, X, y)
    assert out.labels.tolist() == [0, 1]  # {0,0,1} -> 0; {0,1} -> 1
    assert out.hit_count.tolist() == [3, 2]
    assert m.labels.tolist() == [UNLABELED, UNLABELED]  # input untouched


def test_zero_hit_neuron_copies_nearest_in_weight_space():
    # Neuron 2 gets no hits; in weight space it sits next to neuron 1 (malicious).
    m = lattice_map([[0.0], [1.0], [0.8]])
    out = assign_labels(m, np.array([[0.0], [1.0]]), np.array([0, 1]))
    assert out.hit_count.tolist() == [1, 1, 0]
    assert out.labels.tolist() == [0, 1, 1]


def test_assign_labels_needs_hits():
    with pytest.raises(EmptyData):
        assign_labels(lattice_map([[0.0]]), np.zeros((0, 1)), np.zeros(0))


def test_no_labeled_neuron_on_predict():
    m = lattice_map([[0.0], [1.0]])
    with pytest.raises(NoLabeledNeuron):
        predict_flat(m, [0.2])


def test_predict_flat_examples():
    m = lattice_map([[0.1, 0.1], [0.9, 0.9]], labels=[0, 1])
    assert predict_flat(m, [0.12, 0.1]) == 0
    assert predict_flat(m, [0.8, 0.95]) == MALICIOUS


@given(seeds, st.integers(1, 40), st.integers(1, 6))
def test_predict_flat_matches_oracle(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    X = rng.random((20, D))
    batch = predict_flat_batch(m, X)
    for x, b in zip(X, batch):
        assert predict_flat(m, x) == brute_predict_flat(m, x) == b


@given(seeds, st.integers(2, 25), st.integers(1, 4), st.integers(5, 200))
def test_training_prediction_reproduces_hit_majority(seed, k, D, n):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D, labeled=False)
    X = rng.random((n, D))
    y = rng.integers(0, 2, n)
    lab = assign_labels(m, X, y)
    groups = {}
    for x, t in zip(X, y):
        groups.setdefault(brute_bmu(m, x)[0], []).append(int(t))
    for x in X:
        votes = groups[brute_bmu(m, x)[0]]
        majority = 1 if 2 * sum(votes) >= len(votes) else 0
        assert predict_flat(lab, x) == majority


# ---------------------------------------------------------------- quality metrics


def test_quantization_error_examples():
    m = lattice_map([[0.1, 0.2], [0.8, 0.8]])
    assert quantization_error(m, m.weights.copy()) == 0.0
    assert quantization_error(lattice_map([[0.0, 0.0]]), [[0.3, 0.4]]) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(EmptyData):
        quantization_error(m, np.zeros((0, 2)))


@given(seeds, st.integers(1, 30), st.integers(1, 5))
def test_quantization_error_matches_loop(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    X = rng.random((25, D))
    q = quantization_error(m, X)
    assert q >= 0
    assert q == pytest.approx(brute_quantization_error(m, X), abs=1e-12)


def test_topographic_error_examples():
    # 3x1 column: ends at rows 0 and 2, a middle neuron far away in weight space.
    m = lattice_map([[0.0], [1.0], [0.02]], coords=[(0, 0), (1, 0), (2, 0)])
    assert topographic_error(m, [[0.01]]) == 1.0
    line = lattice_map([[0.0], [0.5], [1.0]], coords=[(0, 0), (0, 1), (0, 2)])
    assert topographic_error(line, [[0.1], [0.3], [0.6], [0.9]]) == 0.0


def test_embedding_accuracy_examples():
    rng = np.random.default_rng(0)
    data = rng.random((500, 3)) * 0.2 + 0.4
    zeros = lattice_map(np.zeros((10, 3)))
    assert embedding_accuracy(zeros, data) == 0.0
    col = rng.random((30, 1))
    same = lattice_map(col)
    assert embedding_accuracy(same, col) == 1.0


def test_embedding_accuracy_calibration():
    # Neurons resampled from the data: both tests should rarely reject.
    rng = np.random.default_rng(1)
    data = rng.random((4000, 10))
    neurons = data[rng.choice(4000, 400, replace=False)]
    assert embedding_accuracy(lattice_map(neurons), data) >= 0.9


def test_convergence_index_arithmetic():
    assert convergence_index_from(1.0, 0.0) == 1.0
    assert convergence_index_from(0.0, 1.0) == 0.0
    assert convergence_index_from(0.8, 0.2) == pytest.approx(0.8, abs=1e-15)


@given(seeds, st.integers(2, 30), st.integers(1, 4))
def test_quality_ranges(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    X = rng.random((30, D))
    q = quality_report(m, X)
    assert q.quantization_error >= 0
    assert 0 <= q.topographic_error <= 1
    assert 0 <= q.embedding_accuracy <= 1
    assert 0 <= q.convergence_index <= 1
    assert q.convergence_index == convergence_index(m, X)


# ---------------------------------------------------------------- serialization


@given(seeds, st.integers(1, 30), st.integers(1, 6))
def test_json_round_trip_is_bit_exact(seed, k, D):
    rng = np.random.default_rng(seed)
    m = random_map(rng, k, D)
    m.hit_count[:] = rng.integers(0, 50, k)
    m.child_map_id[0] = "m0.x"
    back = MapModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert back.to_dict() == m.to_dict()
    order_a, order_b = m._id_order, back._id_order
    assert np.array_equal(m.weights[order_a], back.weights[order_b])


def test_duplicate_coords_rejected():
    with pytest.raises(DataError):
        MapModel("m0", [[0.0], [1.0]], [(0, 0), (0, 0)])
