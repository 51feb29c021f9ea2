from __future__ import annotations

import numpy as np
import pytest
from scipy.special import logsumexp

from unotb import _kernels_py, kernels

compiled = pytest.importorskip("unotb._kernels")
IMPLS = [pytest.param(_kernels_py, id="python"), pytest.param(compiled, id="cython")]


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("impl", IMPLS)
def test_softmin_rows_matches_logsumexp(impl, rng):
    C = rng.uniform(0, 5, size=(37, 23))
    g = rng.normal(size=23)
    logw = np.log(rng.dirichlet(np.ones(23)))
    eps = 0.07
    ref = -eps * logsumexp((g - C) / eps + logw, axis=1)
    np.testing.assert_allclose(impl.softmin_rows(C, g, logw, eps, 1), ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
def test_softmin_rows_zero_weight_atoms(impl):
    C = np.array([[0.0, 1.0], [2.0, 0.5]])
    logw = np.array([np.log(0.5), -1e300])
    out = impl.softmin_rows(C, np.zeros(2), logw, 0.1, 1)
    np.testing.assert_allclose(out, -0.1 * (np.log(0.5) - C[:, 0] / 0.1))


def test_softmin_threads_do_not_change_result(rng):
    C = rng.uniform(size=(64, 40))
    g = rng.normal(size=40)
    logw = np.full(40, -np.log(40))
    a = compiled.softmin_rows(C, g, logw, 0.01, 1)
    b = compiled.softmin_rows(C, g, logw, 0.01, 4)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("impl", IMPLS)
def test_sqdist(impl, rng):
    X = rng.normal(size=(11, 3))
    Y = rng.normal(size=(7, 3))
    ref = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(-1)
    np.testing.assert_allclose(impl.sqdist(X, Y, 1), ref, rtol=1e-12, atol=1e-12)
    assert np.all(impl.sqdist(X, X, 1).diagonal() == 0.0)


@pytest.mark.parametrize("relu", [True, False])
def test_bias_relu_backends_agree(relu, rng):
    base = rng.normal(size=(50, 16))
    b = rng.normal(size=16)
    a, c = base.copy(), base.copy()
    _kernels_py.bias_relu_(a, b, relu)
    compiled.bias_relu_(c, b, relu)
    np.testing.assert_array_equal(a, c)
    ref = base + b
    np.testing.assert_array_equal(a, np.maximum(ref, 0) if relu else ref)


@pytest.mark.parametrize("want_bias", [True, False])
def test_relu_backward_backends_agree(want_bias, rng):
    out = np.maximum(rng.normal(size=(40, 9)), 0)
    g = rng.normal(size=(40, 9))
    gm_py, gb_py = _kernels_py.relu_backward(g, out, want_bias)
    gm_c, gb_c = compiled.relu_backward(g, out, want_bias)
    np.testing.assert_array_equal(gm_py, gm_c)
    np.testing.assert_array_equal(gm_py, np.where(out > 0, g, 0.0))
    if want_bias:
        np.testing.assert_allclose(gb_c, gb_py, rtol=1e-12, atol=1e-12)
    else:
        assert gb_c is None


@pytest.mark.parametrize("impl", [_kernels_py, compiled], ids=["python", "cython"])
def test_relu_backward_inplace_masks_input(impl, rng):
    out = np.maximum(rng.normal(size=(40, 9)), 0)
    g = rng.normal(size=(40, 9))
    ref, gb_ref = impl.relu_backward(g, out, True)
    gm, gb = impl.relu_backward(g, out, True, True)
    assert gm is g
    np.testing.assert_array_equal(g, ref)
    np.testing.assert_array_equal(gb, gb_ref)


def test_inplace_wrapper_copies_read_only_input(rng):
    out = np.maximum(rng.normal(size=(5, 3)), 0)
    g = rng.normal(size=(5, 3))
    g.flags.writeable = False
    gm, _ = kernels.relu_backward(g, out, False, inplace=True)
    assert gm is not g
    np.testing.assert_array_equal(gm, np.where(out > 0, g, 0.0))


def test_dispatch_wrappers_accept_non_contiguous(rng):
    X = rng.normal(size=(6, 4))[:, ::2]
    np.testing.assert_allclose(kernels.sqdist(X, X.T.T), _kernels_py.sqdist(np.ascontiguousarray(X), np.ascontiguousarray(X)))
