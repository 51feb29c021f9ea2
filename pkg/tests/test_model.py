from __future__ import annotations

import numpy as np
import pytest

from unotb.core import Tape, Tensor
from unotb.cost import CostFn
from unotb.errors import ConfigError, ShapeError
from unotb.model import MapBank, PotentialBank, map_eval, potential_eval


def random_lam(rng, K):
    lam = rng.uniform(0.1, 1.0, K)
    return lam / lam.sum()


@pytest.mark.parametrize("K", [2, 3, 5])
def test_congruence_holds_for_random_banks(K, rng):
    lam = random_lam(rng, K)
    bank = PotentialBank(3, lam, hidden=(16, 16), rng=rng)
    bank.m.data[...] = rng.normal()
    for net in bank.g:
        for p in net.parameters:
            p.data += rng.normal(scale=0.3, size=p.data.shape)
    y = rng.normal(scale=2.0, size=(1000, 3))
    total = sum(lam[k] * bank(k, y) for k in range(K))
    np.testing.assert_allclose(total, float(bank.m.data), atol=1e-10)


def test_single_marginal_potential_is_g_plus_m(rng):
    bank = PotentialBank(2, [1.0], hidden=(8,), rng=rng)
    bank.m.data[...] = 0.25
    y = rng.normal(size=(5, 2))
    np.testing.assert_allclose(bank(0, y), bank.g[0](y).data[:, 0] + 0.25)


def test_potential_gradient_through_m(rng):
    bank = PotentialBank(2, [0.25, 0.75], hidden=(8,), rng=rng)
    tape = Tape(watch=[bank.m])
    y = rng.normal(size=(4, 2))
    out = bank.potential(0, y, tape).sum()
    grads = tape.backward(out)
    # f_1 carries m / (K lam_1) = m / 0.5
    assert float(grads[bank.m]) == pytest.approx(4 * 2.0)


def test_potential_rejects_bad_inputs(rng):
    bank = PotentialBank(2, [0.5, 0.5], hidden=(4,), rng=rng)
    with pytest.raises(ShapeError):
        bank(0, np.zeros((3, 3)))
    with pytest.raises(IndexError):
        bank(2, np.zeros((3, 2)))


@pytest.mark.parametrize("lam", [[0.5, 0.6], [1.2, -0.2], []])
def test_weights_must_be_on_simplex(lam):
    with pytest.raises(ConfigError):
        PotentialBank(2, lam)


def test_one_based_wrappers(rng):
    pots = PotentialBank(2, [0.5, 0.5], hidden=(4,), rng=rng)
    maps = MapBank([2, 2], 2, hidden=(4,), rng=rng)
    y = rng.normal(size=(3, 2))
    np.testing.assert_array_equal(potential_eval(pots, 2, y), pots(1, y))
    np.testing.assert_array_equal(map_eval(maps, 1, y), maps(0, y))


def test_map_bank_noise_handling(rng):
    det = MapBank([2], 2, hidden=(4,), rng=rng)
    with pytest.raises(ShapeError):
        det.apply(0, np.zeros((3, 2)), np.zeros((3, 1)))
    sto = MapBank([2], 2, hidden=(4,), noise_dim=3, rng=rng)
    assert sto.stochastic
    with pytest.raises(ShapeError, match="needs noise"):
        sto.apply(0, np.zeros((3, 2)))
    out = sto.apply(0, np.zeros((3, 2)), sto.noise(rng, 3))
    assert out.data.shape == (3, 2)
    # different noise, different outputs
    out2 = sto.apply(0, np.zeros((3, 2)), sto.noise(rng, 3))
    assert not np.allclose(out.data, out2.data)


def test_map_bank_state_roundtrip(rng):
    a = MapBank([2, 3], 2, hidden=(6,), rng=rng)
    b = MapBank([2, 3], 2, hidden=(6,), rng=np.random.default_rng(5))
    b.load_state(a.state())
    x = rng.normal(size=(4, 3))
    np.testing.assert_array_equal(a(1, x), b(1, x))


def test_quadratic_cost():
    c = CostFn()
    assert c.eval([0.0, 0.0], [3.0, 4.0]) == pytest.approx(12.5)
    np.testing.assert_allclose(CostFn(alpha=2.0).grad_y([1.0, 0.0], [0.0, 0.0]), [-2.0, 0.0])
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(c.matrix(x, x), [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ShapeError):
        c.eval(np.zeros(2), np.zeros(3))
    with pytest.raises(ConfigError):
        CostFn("l1")


def test_cost_on_tape_gradient(rng):
    c = CostFn(alpha=1.5)
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=(5, 2))
    from unotb.core import Parameter

    p = Parameter("y", y.copy())
    tape = Tape(watch=[p])
    out = c.on_tape(x, tape.param(p)).sum()
    assert out.item() == pytest.approx(float(np.sum(c.eval(x, y))))
    np.testing.assert_allclose(tape.backward(out)[p], c.grad_y(x, y))
