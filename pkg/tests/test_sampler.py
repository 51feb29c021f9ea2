from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from helpers import identity_maps, linear_potentials, two_point_source
from unotb import sampler
from unotb.cost import CostFn
from unotb.divergence import Divergence
from unotb.errors import NumericError, ShapeError
from unotb.model import MapBank, PotentialBank
from unotb.trainer import ctransform_terms

KL1 = Divergence.from_config("kl", 1.0)
BAL = Divergence.from_config("balanced")
TWO_POINT_FRACTION = 0.7310585786300049  # 1 / (1 + e^-1)


def two_point_setup():
    # f(y) = -y0 so that f^c(0, 0) = 0 and f^c(1, 0) = 1 under identity maps
    pots = linear_potentials(2, [1.0], w=[-1.0, 0.0])
    return pots, identity_maps(2), two_point_source([0.0, 0.0], [1.0, 0.0])


def test_ctransform_zero_potential_identity_map(rng):
    x = rng.normal(size=(7, 2))
    fc = sampler.estimate_ctransform(linear_potentials(2, [1.0]), identity_maps(2), 0, x)
    np.testing.assert_allclose(fc, 0.0, atol=1e-12)


def test_ctransform_constant_potential(rng):
    x = rng.normal(size=(7, 2))
    fc = sampler.estimate_ctransform(linear_potentials(2, [1.0], m=5.0), identity_maps(2), 0, x)
    np.testing.assert_allclose(fc, -5.0)


def test_ctransform_agrees_with_trainer_terms(rng):
    pots = PotentialBank(2, [0.3, 0.7], hidden=(16,), rng=rng)
    maps = MapBank([2, 2], 2, hidden=(16,), rng=rng)
    x = rng.normal(size=(50, 2))
    cost = CostFn()
    fc = sampler.estimate_ctransform(pots, maps, 1, x, cost)
    np.testing.assert_array_equal(fc, ctransform_terms(pots, maps, cost, 1, x, None).data)


def test_ctransform_stochastic_averages_draws(rng):
    pots = PotentialBank(2, [0.5, 0.5], hidden=(8,), rng=rng)
    maps = MapBank([2, 2], 2, hidden=(8,), noise_dim=1, rng=rng)
    x = rng.normal(size=(5, 2))
    a = sampler.estimate_ctransform(pots, maps, 0, x, rng=np.random.default_rng(3))
    noise = maps.noise(np.random.default_rng(3), 5 * sampler.STOCHASTIC_DRAWS)
    y = maps(0, np.repeat(x, sampler.STOCHASTIC_DRAWS, axis=0), noise)
    xr = np.repeat(x, sampler.STOCHASTIC_DRAWS, axis=0)
    terms = 0.5 * ((xr - y) ** 2).sum(1) - pots(0, y)
    np.testing.assert_allclose(a, terms.reshape(5, -1).mean(1), rtol=1e-12)


def test_ctransform_shape_check():
    with pytest.raises(ShapeError):
        sampler.estimate_ctransform(linear_potentials(2, [1.0]), identity_maps(2), 0, np.zeros((3, 3)))


def test_weights_examples():
    wts = sampler.weights_from_ctransform(KL1, [0.0, 1.0])
    np.testing.assert_allclose(wts.w, [1.0, math.exp(-1)])
    assert wts.c_rej == 1.0
    np.testing.assert_allclose(wts.prob, [1.0, 0.36787944117144233])
    bal = sampler.weights_from_ctransform(BAL, [3.0, -2.0, 0.5])
    np.testing.assert_array_equal(bal.prob, 1.0)
    const = sampler.weights_from_ctransform(KL1, [2.0, 2.0, 2.0])
    np.testing.assert_array_equal(const.prob, 1.0)


def test_degenerate_and_empty_weights():
    with pytest.raises(NumericError, match="degenerate acceptance"):
        sampler.weights_from_ctransform(KL1, [1e6, 1e6])
    with pytest.raises(ShapeError):
        sampler.weights_from_ctransform(KL1, [])


def test_probabilities_in_unit_interval(rng):
    for kind in ("kl", "chi2", "softplus", "balanced"):
        div = Divergence.from_config(kind, 2.0)
        p = sampler.weights_from_ctransform(div, rng.normal(scale=3, size=200)).prob
        assert np.all((p >= 0) & (p <= 1))


def test_balanced_accepts_everything_and_is_ancestral(rng):
    pots = PotentialBank(2, [0.5, 0.5], hidden=(8,), rng=rng)
    maps = MapBank([2, 2], 2, hidden=(8,), rng=rng)
    source = lambda r, n: r.normal(size=(n, 2))  # noqa: E731
    res = sampler.rejection_sample(pots, maps, 0, source, 300, BAL, seed=5, pool_size=100)
    assert res.acceptance_rate == 1.0
    np.testing.assert_array_equal(res.index, np.arange(300))
    src_rng = np.random.default_rng(np.random.SeedSequence(5).spawn(4)[0])
    draws = np.vstack([source(src_rng, 100) for _ in range(3)])
    np.testing.assert_array_equal(res.accepted, draws)
    np.testing.assert_array_equal(res.samples, maps(0, draws))


def test_two_point_composition():
    pots, maps, source = two_point_setup()
    n = 100_000
    res = sampler.rejection_sample(pots, maps, 0, source, n, KL1, seed=11)
    frac = float(np.mean(res.accepted[:, 0] == 0.0))
    se = math.sqrt(TWO_POINT_FRACTION * (1 - TWO_POINT_FRACTION) / n)
    assert abs(frac - TWO_POINT_FRACTION) <= 3 * se
    # identity maps leave accepted points in place
    np.testing.assert_array_equal(res.samples, res.accepted)
    counts = [int(np.sum(res.accepted[:, 0] == 0.0)), int(np.sum(res.accepted[:, 0] == 1.0))]
    expected = [n * TWO_POINT_FRACTION, n * (1 - TWO_POINT_FRACTION)]
    assert stats.chisquare(counts, expected).pvalue > 0.01
    assert res.acceptance_rate == pytest.approx((1 + math.exp(-1)) / 2, abs=0.01)


def test_same_seed_same_indices():
    pots, maps, source = two_point_setup()
    a = sampler.rejection_sample(pots, maps, 0, source, 500, KL1, seed=3)
    b = sampler.rejection_sample(pots, maps, 0, source, 500, KL1, seed=3)
    c = sampler.rejection_sample(pots, maps, 0, source, 500, KL1, seed=4)
    np.testing.assert_array_equal(a.index, b.index)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.index, c.index)


def test_low_acceptance_aborts(monkeypatch):
    pots, maps, source = two_point_setup()
    monkeypatch.setattr(sampler, "MAX_CANDIDATES", 1000)
    monkeypatch.setattr(sampler, "MIN_RATE", 0.99)
    with pytest.raises(NumericError, match="acceptance rate"):
        sampler.rejection_sample(pots, maps, 0, source, 10**6, KL1, seed=0, pool_size=500)


def test_n_target_validation():
    pots, maps, source = two_point_setup()
    with pytest.raises(ValueError):
        sampler.rejection_sample(pots, maps, 0, source, 0, KL1)
