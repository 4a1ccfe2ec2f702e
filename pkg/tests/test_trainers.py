import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clxids.errors import EmptyData, InvalidParameter, InvalidSF
from clxids.gsom import GsomParams, growth_threshold, train_gsom
from clxids.mapmodel import MapModel, quantization_error
from clxids.som import SomParams, grid_coords, learning_rate_at, radius_at, train_som
from clxids.synthetic import hierarchical_blobs, two_blobs
from oracles import exact_ln


def connected(m):
    seen, stack = {0}, [0]
    while stack:
        i = stack.pop()
        for j in m.neighbors(i):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(m)


# ---------------------------------------------------------------- SOM


def test_som_defaults():
    p = SomParams()
    assert (p.n, p.m, p.learning_rate, p.epochs) == (18, 18, 0.3, 1000)


@pytest.mark.parametrize("kw", [{"epochs": 0}, {"n": 1}, {"learning_rate": 1.0}, {"learning_rate": 0.0}])
def test_som_rejects_bad_params(kw):
    with pytest.raises(InvalidParameter):
        SomParams(**kw)


def test_som_grid_and_range():
    X = np.random.default_rng(0).random((50, 3))
    m = train_som(X, SomParams(n=4, m=5, epochs=200))
    assert len(m) == 20
    assert set(map(tuple, m.coords.tolist())) == {(r, c) for r in range(4) for c in range(5)}
    assert (m.weights >= 0).all() and (m.weights <= 1).all()
    assert m.hit_count.sum() == 50


def test_som_converges_on_single_point():
    x = np.array([[0.3, 0.8, 0.5]])
    m = train_som(np.repeat(x, 5, axis=0), SomParams(n=4, m=4, epochs=600))
    assert quantization_error(m, x) < 1e-3


def test_som_deterministic():
    X = np.random.default_rng(2).random((40, 2))
    a = train_som(X, SomParams(n=5, m=5, epochs=300, seed=9))
    b = train_som(X, SomParams(n=5, m=5, epochs=300, seed=9))
    assert np.array_equal(a.weights, b.weights)


def test_som_empty_data():
    with pytest.raises(EmptyData):
        train_som(np.zeros((0, 2)), SomParams(n=2, m=2, epochs=1))


def test_som_schedule():
    p = SomParams(n=10, m=6, epochs=100)
    assert radius_at(0, p) == 5.0 and radius_at(100, p) == 1.0
    assert learning_rate_at(0, 0, p) == p.learning_rate
    assert learning_rate_at(p.epochs, 0, p) <= p.learning_rate
    rates = [learning_rate_at(t, 2, p) for t in range(0, 101, 10)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))
    assert grid_coords(2, 3).tolist() == [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]


@pytest.mark.parametrize("family", ["two_blobs", "hierarchical_blobs"])
def test_som_reduces_quantization_error_over_seeds(family):
    passed = 0
    for seed in range(20):
        if family == "two_blobs":
            X = two_blobs(n_train=1000, n_test=10, seed=seed)[0][0].data
        else:
            X = hierarchical_blobs(n_train=300, n_test=10, seed=seed)[0][0].data
        p = SomParams(n=5, m=5, epochs=2000, seed=seed)
        init = MapModel("m0", np.random.default_rng(seed).random((25, X.shape[1])), grid_coords(5, 5))
        passed += quantization_error(train_som(X, p), X) < quantization_error(init, X)
    assert passed >= 19


@settings(max_examples=15)
@given(st.integers(0, 2**16), st.integers(1, 5))
def test_som_weights_stay_in_unit_cube(seed, D):
    X = np.random.default_rng(seed).random((20, D))
    m = train_som(X, SomParams(n=3, m=3, epochs=100, seed=seed))
    assert (m.weights >= 0).all() and (m.weights <= 1).all()


# ---------------------------------------------------------------- GSOM


def test_growth_threshold_values():
    for D, sf in ((7, 0.9), (17, 0.9), (3, 0.3), (1, 0.5)):
        want = float(-D * exact_ln(sf))
        assert growth_threshold(D, sf) == pytest.approx(want, abs=1e-12)
    assert growth_threshold(7, 0.9) == pytest.approx(0.7375236, abs=1e-7)
    assert growth_threshold(17, 0.9) == pytest.approx(1.7911287, abs=1e-7)
    assert growth_threshold(3, 1 - 1e-12) < 1e-10


@pytest.mark.parametrize("sf", [0.0, 1.0, -0.1, 1.5])
def test_growth_threshold_rejects_sf(sf):
    with pytest.raises(InvalidSF):
        growth_threshold(3, sf)


def test_gsom_defaults():
    p = GsomParams()
    assert (p.spread_factor, p.learning_rate, p.epochs, p.max_nodes) == (0.9, 0.006, 100, 10_000)


def test_gsom_starts_from_four_nodes():
    X = np.random.default_rng(0).random((10, 2))
    m = train_gsom(X, GsomParams(epochs=1, spread_factor=0.01))
    assert set(map(tuple, m.coords.tolist())) == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_gsom_no_growth_on_repeated_point():
    X = np.full((30, 3), 0.4)
    m = train_gsom(X, GsomParams(spread_factor=0.5, learning_rate=0.3, epochs=60))
    counts = m.meta["node_counts"]
    # Growth may happen while the map converges, but must stop once CE vanishes.
    assert counts[-1] == counts[len(counts) // 2]


def test_gsom_grows_on_two_clusters():
    (tr, _), _ = two_blobs(n_train=400, n_test=10, seed=3)
    m = train_gsom(tr.data, GsomParams(spread_factor=0.9, epochs=20))
    assert len(m) > 4


def test_gsom_node_count_monotone_and_connected():
    (tr, _), _ = two_blobs(n_train=300, n_test=10, seed=4)
    m = train_gsom(tr.data, GsomParams(spread_factor=0.9, epochs=25, seed=4))
    counts = m.meta["node_counts"]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    assert connected(m)
    assert (m.weights >= 0).all() and (m.weights <= 1).all()


def test_gsom_deterministic():
    X = np.random.default_rng(5).random((80, 3))
    a = train_gsom(X, GsomParams(epochs=15, seed=1))
    b = train_gsom(X, GsomParams(epochs=15, seed=1))
    assert a.to_dict() == b.to_dict()


def test_gsom_budget_flag():
    X = np.random.default_rng(6).random((200, 4))
    m = train_gsom(X, GsomParams(spread_factor=0.99, epochs=30, max_nodes=12))
    assert len(m) <= 12 and m.budget_exceeded


def test_gsom_higher_sf_grows_more():
    passed = 0
    for seed in range(10):
        (tr, _), _ = two_blobs(n_train=300, n_test=10, seed=seed)
        hi = train_gsom(tr.data, GsomParams(spread_factor=0.9, epochs=15, seed=seed))
        lo = train_gsom(tr.data, GsomParams(spread_factor=0.3, epochs=15, seed=seed))
        passed += len(hi) >= len(lo)
    assert passed >= 9


@settings(max_examples=15)
@given(st.integers(0, 2**16), st.integers(1, 4), st.floats(0.05, 0.99))
def test_gsom_invariants(seed, D, sf):
    X = np.random.default_rng(seed).random((40, D))
    m = train_gsom(X, GsomParams(spread_factor=sf, epochs=8, seed=seed, max_nodes=300))
    assert connected(m)
    assert (m.weights >= 0).all() and (m.weights <= 1).all()
    assert m.hit_count.sum() == 40 and (m.cumulative_error >= 0).all()
    counts = m.meta["node_counts"]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
