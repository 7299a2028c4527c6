import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from dhpr.prox import (
    ConjugateUnavailable,
    LossBatch,
    LossSpec,
    RegularizerBatch,
    RegularizerSpec,
    conjugate_value,
    prox_l1,
    prox_least_squares,
    prox_logistic,
    prox_loss,
    prox_reg,
    prox_sparse_group,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vec = arrays(np.float64, st.integers(1, 8), elements=finite)
step = st.floats(1e-3, 20.0)


def test_l1_examples():
    np.testing.assert_array_equal(prox_l1(np.array([3.0, -0.5, -2.0]), 1.0, 1.0), [2.0, 0.0, -1.0])
    np.testing.assert_array_equal(prox_l1(np.array([0.2]), 0.5, 0.4), [0.0])


def test_least_squares_closed_form():
    np.testing.assert_allclose(prox_least_squares(np.array([1.0, 2.0]), 1.0, np.array([3.0, 0.0])), [2.0, 1.0])
    with pytest.raises(ValueError, match="dimension"):
        prox_least_squares(np.zeros(2), 1.0, np.zeros(3))


def test_logistic_optimality_condition():
    xi = np.array([-3.0, 0.0, 0.7, 40.0])
    b = np.array([1.0, -1.0, 1.0, -1.0])
    y = prox_logistic(xi, 2.0, b)
    resid = y - xi - 2.0 * b / (1.0 + np.exp(b * y))
    assert np.max(np.abs(resid)) < 1e-11


def test_logistic_rejects_labels():
    with pytest.raises(ValueError, match="labels"):
        prox_logistic(np.zeros(2), 1.0, np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        LossSpec("logistic", np.array([2.0]))


def test_sparse_group_reduces_to_l1_without_group_weight():
    spec = RegularizerSpec("sparse_group", 0.3, 0.0, (np.array([0, 1]), np.array([2])), (1.0, 1.0))
    x = np.array([1.0, -0.1, 0.5])
    np.testing.assert_array_equal(prox_sparse_group(x, 2.0, spec), prox_l1(x, 2.0, 0.3))


def test_sparse_group_kills_small_group():
    spec = RegularizerSpec("sparse_group", 0.0, 1.0, (np.array([0, 2]), np.array([1])), (1.0, 1.0))
    out = prox_sparse_group(np.array([0.3, 5.0, 0.4]), 1.0, spec)
    np.testing.assert_allclose(out, [0.0, 4.0, 0.0])


def test_spec_validation():
    with pytest.raises(ValueError):
        RegularizerSpec("l2", 1.0)
    with pytest.raises(ValueError):
        RegularizerSpec("l1", -1.0)
    with pytest.raises(ValueError, match="overlap"):
        RegularizerSpec("sparse_group", 1.0, 1.0, (np.array([0, 1]), np.array([1])), (1.0, 1.0))
    with pytest.raises(ValueError):
        LossSpec("hinge")


def test_zero_loss_prox_is_identity():
    x = np.array([1.0, -2.0])
    out = prox_loss(LossSpec("zero"), x, 3.0)
    np.testing.assert_array_equal(out, x)
    assert out is not x


def test_conjugates():
    spec = RegularizerSpec("l1", 2.0)
    assert conjugate_value(spec, np.array([1.0, -2.0])) == 0.0
    assert conjugate_value(spec, np.array([2.5])) == float("inf")
    ls = LossSpec("least_squares", np.array([1.0, 2.0]))
    z = np.array([0.5, -1.0])
    # f*(z) = sup_y <z, y> - ||y - b||^2/2 = ||z||^2/2 + <z, b>
    assert conjugate_value(ls, z) == pytest.approx(0.625 - 1.5)
    with pytest.raises(ConjugateUnavailable):
        conjugate_value(LossSpec("logistic", np.array([1.0])), np.array([-0.5]))


@settings(max_examples=60, deadline=None)
@given(vec, step, st.floats(0.0, 5.0))
def test_l1_matches_bisection(x, t, theta):
    np.testing.assert_allclose(prox_l1(x, t, theta), oracles.prox_l1_oracle(x, t, theta), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(vec, step)
def test_moreau_l1(x, t):
    theta = 0.7
    lhs = prox_l1(x, t, theta) + t * oracles.prox_conj_l1(x / t, 1.0 / t, theta)
    np.testing.assert_allclose(lhs, x, atol=1e-10 * (1 + np.abs(x).max()))


@settings(max_examples=60, deadline=None)
@given(vec, step, st.data())
def test_moreau_logistic(x, t, data):
    b = np.array(data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=len(x), max_size=len(x))))
    lhs = prox_logistic(x, t, b) + t * oracles.prox_conj_logistic(x / t, 1.0 / t, b)
    np.testing.assert_allclose(lhs, x, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(vec, vec, step)
def test_prox_is_firmly_nonexpansive_l1(x, y, t):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    px, py = prox_l1(x, t, 1.3), prox_l1(y, t, 1.3)
    assert np.dot(px - py, x - y) >= np.dot(px - py, px - py) - 1e-9


def test_batches_match_single_specs():
    r = oracles.rng(3)
    specs = [RegularizerSpec("l1", float(th)) for th in (0.1, 0.5, 2.0)]
    X = r.standard_normal((3, 5))
    t = np.array([0.5, 1.0, 2.0])
    out = RegularizerBatch(specs).prox(X, t)
    for i in range(3):
        np.testing.assert_array_equal(out[i], prox_reg(specs[i], X[i], t[i]))
    losses = [LossSpec("logistic", np.array([1.0, -1.0])), LossSpec("logistic", np.array([1.0]))]
    lb = LossBatch(losses, [2, 1])
    Xi = r.standard_normal((2, 2))
    Y = lb.prox(Xi, np.array([0.3, 0.7]))
    np.testing.assert_allclose(Y[0], prox_logistic(Xi[0], 0.3, losses[0].b), rtol=0, atol=1e-14)
    np.testing.assert_allclose(Y[1, :1], prox_logistic(Xi[1, :1], 0.7, losses[1].b), rtol=0, atol=1e-14)
    assert Y[1, 1] == Xi[1, 1]


def test_batch_rejects_mixed_kinds():
    with pytest.raises(ValueError):
        RegularizerBatch([RegularizerSpec("l1", 1.0), RegularizerSpec("sparse_group", 1.0, 0.0, (), ())])


@pytest.mark.parametrize(
    "xi,t,theta,expect",
    [([2.0], 0.5, 1.0, [1.5]), ([-0.3], 0.5, 1.0, [0.0]), ([0.0, 0.0], 3.0, 2.0, [0.0, 0.0])],
)
def test_l1_table(xi, t, theta, expect):
    np.testing.assert_array_equal(prox_l1(np.array(xi), t, theta), expect)


def test_sparse_group_single_block_value():
    spec = RegularizerSpec("sparse_group", 0.0, 1.0, (np.array([0, 1]),), (np.sqrt(2.0),))
    out = prox_sparse_group(np.array([3.0, 4.0]), 1.0, spec)
    np.testing.assert_allclose(out, (1 - np.sqrt(2.0) / 5) * np.array([3.0, 4.0]), rtol=0, atol=1e-14)
    np.testing.assert_allclose(out, [2.1515, 2.8686], atol=1e-4)
    ref = oracles.prox_sparse_group_oracle(np.array([3.0, 4.0]), 1.0, 0.0, 1.0, [[0, 1]], [np.sqrt(2.0)])
    np.testing.assert_allclose(out, ref, atol=1e-8)


def test_sparse_group_limits():
    groups = (np.array([0, 1]), np.array([2]))
    x = np.array([0.4, -0.9, 0.2])
    big = RegularizerSpec("sparse_group", 10.0, 1.0, groups, (1.0, 1.0))
    np.testing.assert_array_equal(prox_sparse_group(x, 1.0, big), 0.0)
    zero = RegularizerSpec("sparse_group", 0.0, 0.0, groups, (1.0, 1.0))
    np.testing.assert_array_equal(prox_sparse_group(x, 1.0, zero), x)


def test_least_squares_table():
    np.testing.assert_array_equal(prox_least_squares(np.zeros(1), 1.0, np.array([2.0])), [1.0])
    b = np.array([0.3, -2.0])
    np.testing.assert_allclose(prox_least_squares(b, 7.0, b), b, rtol=0, atol=1e-15)
    np.testing.assert_allclose(prox_least_squares(np.array([5.0]), 1e-8, np.zeros(1)), [5.0], atol=1e-7)


def test_logistic_table():
    y = prox_logistic(np.zeros(1), 1.0, np.ones(1))
    ref = oracles.bisect_root(lambda v: v - 1.0 / (1.0 + np.exp(v)), -1.0, 1.0)
    assert y[0] == pytest.approx(ref, abs=1e-12)
    assert y[0] == pytest.approx(0.40106, abs=1e-4)
    assert prox_logistic(np.zeros(1), 1.0, -np.ones(1))[0] == pytest.approx(-ref, abs=1e-12)
    assert prox_logistic(np.array([3.0]), 1e-10, np.ones(1))[0] == pytest.approx(3.0, abs=1e-8)


def test_conjugate_table():
    assert conjugate_value(LossSpec("least_squares", np.array([1.0, 2.0])), np.zeros(2)) == 0.0
    assert conjugate_value(RegularizerSpec("l1", 1.0), np.array([0.5, -1.0])) == 0.0
    assert conjugate_value(RegularizerSpec("l1", 1.0), np.array([1.1, 0.0])) == float("inf")
