import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dhpr import _kernels_py, kernels
from dhpr.graph import make_graph

compiled = pytest.importorskip("dhpr._kernels")

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
shape = st.tuples(st.integers(1, 5), st.integers(1, 7))


@settings(max_examples=60, deadline=None)
@given(shape.flatmap(lambda s: st.tuples(arrays(np.float64, s, elements=finite), arrays(np.float64, s[0], elements=st.floats(0, 50)))))
def test_soft_threshold_backends_agree(args):
    X, t = args
    assert compiled.soft_threshold(X, t).tobytes() == _kernels_py.soft_threshold(X, t).tobytes()


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.lists(st.integers(1, 4), min_size=1, max_size=4), st.integers(0, 1000))
def test_group_shrink_backends_agree(n, sizes, seed):
    r = np.random.Generator(np.random.Philox(seed))
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    Y = r.standard_normal((n, int(ptr[-1])))
    th = r.uniform(0, 2, (n, len(sizes)))
    np.testing.assert_allclose(compiled.group_shrink(Y, ptr, th), _kernels_py.group_shrink(Y, ptr, th), rtol=0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 10**6))
def test_logistic_prox_backends_agree(n, m, seed):
    r = np.random.Generator(np.random.Philox(seed))
    xi = r.standard_normal((n, m)) * 10.0 ** r.uniform(-2, 3, (n, m))
    t = 10.0 ** r.uniform(-3, 3, n)
    b = r.choice([-1.0, 1.0], (n, m))
    a = compiled.logistic_prox(xi, t, b)
    c = _kernels_py.logistic_prox(xi, t, b)
    np.testing.assert_allclose(a, c, rtol=1e-13, atol=1e-13)
    resid = a - xi - t[:, None] * b * _kernels_py._sigmoid(-b * a)
    assert np.abs(resid).max() <= 1e-10 * (1 + np.abs(xi).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 10), st.integers(1, 5), st.integers(0, 1000))
def test_neighbor_mix_bitwise(n, d, seed):
    g = make_graph("random", n, 0.7, seed)
    X = np.random.Generator(np.random.Philox(seed)).standard_normal((n, d))
    ip, ix, w = g.csr
    assert compiled.neighbor_mix(ip, ix, w, X).tobytes() == _kernels_py.neighbor_mix(ip, ix, w, X).tobytes()


def test_backend_selection():
    forced = os.environ.get("DHPR_PURE_PYTHON", "") in ("1", "true", "yes")
    assert kernels.BACKEND == ("python" if forced else "cython")
