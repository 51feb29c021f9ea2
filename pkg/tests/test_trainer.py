from __future__ import annotations

import numpy as np
import pytest

from unotb.core import Tape, load_checkpoint
from unotb.cost import CostFn
from unotb.divergence import Divergence
from unotb.errors import ConfigError, NumericError, TrainingDiverged
from unotb.model import MapBank, PotentialBank
from unotb.trainer import BarycenterConfig, build_banks, map_objective, potential_objective, train


def constant_banks(f_value: float, m: float = 0.0, K: int = 1):
    """Maps sending everything to the origin; potentials equal ``f_value`` there."""
    lam = [1.0 / K] * K
    pots = PotentialBank(2, lam, hidden=(4,))
    maps = MapBank([2] * K, 2, hidden=(4,))
    for net in maps.T + pots.g:
        for p in net.parameters:
            p.data[...] = 0.0
    pots.m.data[...] = m
    for net in pots.g:
        net.biases[-1].data[...] = f_value - m  # K=1: f = g + m
    return pots, maps


def cfg_for(divs, lam, **kw):
    return BarycenterConfig(divergences=divs, lam=lam, dim=2, **kw)


def test_balanced_loss_is_minus_margin():
    # f(T) - c = 1 on one sample: -conj(1) + m = -1
    pots, maps = constant_banks(1.0)
    cfg = cfg_for([Divergence("balanced")], [1.0])
    loss = potential_objective(pots, maps, cfg, [np.zeros((1, 2))], [None])
    assert loss.item() == pytest.approx(-1.0)


def test_kl_loss_at_zero_margin():
    pots, maps = constant_banks(0.0)
    cfg = cfg_for([Divergence("kl", 1.0)], [1.0])
    assert potential_objective(pots, maps, cfg, [np.zeros((1, 2))], [None]).item() == pytest.approx(0.0)


def test_kl_loss_with_m():
    pots, maps = constant_banks(1.0, m=0.5)
    cfg = cfg_for([Divergence("kl", 1.0)], [1.0])
    loss = potential_objective(pots, maps, cfg, [np.zeros((1, 2))], [None])
    assert loss.item() == pytest.approx(-1.218281828459045, abs=1e-12)


def test_map_loss_examples():
    cfg = cfg_for([Divergence("balanced")], [1.0])
    pots, maps = constant_banks(2.0)
    # x at distance sqrt(2) from T(x) = 0: c = 1, f = 2
    x = np.array([[1.0, 1.0]])
    assert map_objective(pots, maps, cfg, 0, x, None).item() == pytest.approx(-1.0)
    pots, maps = constant_banks(0.0)
    assert map_objective(pots, maps, cfg, 0, np.zeros((3, 2)), None).item() == pytest.approx(0.0)


def test_map_loss_is_a_mean():
    cfg = cfg_for([Divergence("balanced")], [1.0])
    pots, maps = constant_banks(0.5)
    # c = (0, 1), f = 0.5: per-sample (-0.5, 0.5)
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert map_objective(pots, maps, cfg, 0, x, None).item() == pytest.approx(0.0)


def small_setup(divs, seed=0, K=2):
    lam = [1.0 / K] * K
    cfg = cfg_for(divs, lam, hidden_f=(16, 16), hidden_t=(16, 16), seed=seed)
    pots, maps = build_banks(cfg)
    rng = np.random.default_rng(seed + 100)
    batches = [rng.normal(size=(32, 2)) + k for k in range(K)]
    return cfg, pots, maps, batches


def test_loss_is_affine_in_m_with_autodiff_slope():
    cfg, pots, maps, batches = small_setup([Divergence("balanced")] * 2)
    tape = Tape(watch=[pots.m])
    loss = potential_objective(pots, maps, cfg, batches, [None, None], tape)
    slope = float(tape.backward(loss)[pots.m])
    vals = []
    for m in (-1.0, 0.0, 1.0, 2.5):
        pots.m.data[...] = m
        vals.append(potential_objective(pots, maps, cfg, batches, [None, None]).item())
    diffs = np.diff(vals) / np.diff([-1.0, 0.0, 1.0, 2.5])
    np.testing.assert_allclose(diffs, slope, atol=1e-6)
    # each f_k carries m / (K lam_k): the balanced terms contribute -1, the explicit + m gives +1
    assert slope == pytest.approx(1.0 - 1.0, abs=1e-9)


@pytest.mark.parametrize("kind", ["kl", "chi2", "softplus"])
def test_potential_step_increases_loss(kind):
    from unotb.core import AdamState

    cfg, pots, maps, batches = small_setup([Divergence(kind, 2.0)] * 2)
    params = pots.parameters + [pots.m]
    before = potential_objective(pots, maps, cfg, batches, [None, None]).item()
    tape = Tape(watch=params)
    grads = tape.backward(potential_objective(pots, maps, cfg, batches, [None, None], tape))
    # plain gradient ascent with a tiny step
    for p in params:
        p.data += 1e-6 * grads[p]
    after = potential_objective(pots, maps, cfg, batches, [None, None]).item()
    assert after > before
    assert AdamState(params)  # optimizer accepts the same parameter list


def test_map_step_decreases_loss():
    cfg, pots, maps, batches = small_setup([Divergence("kl", 1.0)] * 2)
    params = maps.parameters(1)
    before = map_objective(pots, maps, cfg, 1, batches[1], None).item()
    tape = Tape(watch=params)
    grads = tape.backward(map_objective(pots, maps, cfg, 1, batches[1], None, tape))
    for p in params:
        p.data -= 1e-6 * grads[p]
    assert map_objective(pots, maps, cfg, 1, batches[1], None).item() < before


def test_loss_invariant_to_sample_order():
    cfg, pots, maps, batches = small_setup([Divergence("kl", 1.0), Divergence("chi2", 3.0)])
    a = potential_objective(pots, maps, cfg, batches, [None, None]).item()
    perm = np.random.default_rng(0).permutation(32)
    b = potential_objective(pots, maps, cfg, [x[perm] for x in batches], [None, None]).item()
    assert a == pytest.approx(b, rel=1e-13)


def test_stochastic_maps_average_over_draws():
    cfg = cfg_for([Divergence("kl", 1.0)] * 2, [0.5, 0.5], hidden_f=(8,), hidden_t=(8,), noise_dim=2, noise_draws=4)
    pots, maps = build_banks(cfg)
    rng = np.random.default_rng(0)
    x = [rng.normal(size=(5, 2)) for _ in range(2)]
    noise = [maps.noise(rng, 20) for _ in range(2)]
    val = potential_objective(pots, maps, cfg, x, noise).item()
    assert np.isfinite(val)


def normal(rng, n):
    return rng.standard_normal((n, 2))


def tiny_cfg(**kw):
    base = dict(
        divergences=[Divergence("kl", 1.0), Divergence("balanced")],
        lam=[0.5, 0.5],
        dim=2,
        batch_size=16,
        iters=5,
        n_t=2,
        hidden_f=(8,),
        hidden_t=(8,),
        seed=3,
    )
    base.update(kw)
    return BarycenterConfig(**base)


def test_train_is_bitwise_deterministic(tmp_path):
    _, _, r1 = train(tiny_cfg(), [normal, normal], checkpoint_path=tmp_path / "a.bin")
    _, _, r2 = train(tiny_cfg(), [normal, normal], checkpoint_path=tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert r1.to_dict(timing=False) == r2.to_dict(timing=False)
    state = load_checkpoint(tmp_path / "a.bin")
    assert "m" in state and "T2.1.W" in state and "g1.0.b" in state


def test_report_lengths_match_iterations():
    _, _, rep = train(tiny_cfg(iters=7), [normal, normal])
    assert len(rep.potential_loss) == len(rep.map_losses) == len(rep.m_trajectory) == 7
    assert all(len(v) == 2 for v in rep.map_losses)
    assert np.all(np.isfinite(rep.potential_loss))
    assert rep.wall_time_sec > 0


def test_seed_changes_the_run():
    _, _, a = train(tiny_cfg(seed=1), [normal, normal])
    _, _, b = train(tiny_cfg(seed=2), [normal, normal])
    assert a.potential_loss != b.potential_loss


@pytest.mark.parametrize(
    "kw,msg",
    [
        (dict(n_t=0), "N_T must be ≥ 1"),
        (dict(batch_size=0), "batch size"),
        (dict(lam=[0.7, 0.7]), "sum to 1"),
        (dict(lam=[1.0], divergences=[Divergence("kl")]), "K >= 2"),
        (dict(noise_draws=3), "noise draw"),
    ],
)
def test_config_validation(kw, msg):
    with pytest.raises(ConfigError, match=msg):
        train(tiny_cfg(**kw), [normal, normal])


def test_diverging_loss_aborts():
    def huge(rng, n):
        return 1e6 * rng.standard_normal((n, 2))

    with pytest.raises(TrainingDiverged, match="diverged"):
        train(tiny_cfg(divergences=[Divergence("balanced")] * 2), [huge, huge])


def test_nan_input_names_marginal_and_sample():
    def poisoned(rng, n):
        x = rng.standard_normal((n, 2))
        x[3, 0] = np.nan
        return x

    with pytest.raises(NumericError, match="marginal 2, sample 3"):
        train(tiny_cfg(), [normal, poisoned])


def test_identical_marginals_learn_identity_maps():
    cfg = BarycenterConfig(
        divergences=[Divergence("balanced")] * 2,
        lam=[0.5, 0.5],
        dim=2,
        batch_size=128,
        iters=2000,
        n_t=3,
        hidden_f=(32, 32),
        hidden_t=(32, 32),
        seed=0,
    )
    _, maps, _ = train(cfg, [normal, normal])
    x = np.random.default_rng(5).standard_normal((5000, 2))
    for k in range(2):
        assert np.mean(np.sum((maps(k, x) - x) ** 2, axis=1)) <= 0.05


def test_callback_sees_every_iteration():
    seen = []
    train(tiny_cfg(iters=3), [normal, normal], callback=lambda it, p, m: seen.append(it))
    assert seen == [0, 1, 2]


def test_cost_objects_are_used():
    cfg = tiny_cfg(costs=[CostFn(alpha=2.0), CostFn()])
    _, _, rep = train(cfg, [normal, normal])
    assert np.all(np.isfinite(rep.potential_loss))
