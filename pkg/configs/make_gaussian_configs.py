"""Write the seeded Gaussian benchmark configs (D = 2 and D = 4).

Run from the repository root: ``python3 configs/make_gaussian_configs.py``.
The instances come from ``unotb.gaussian.benchmark_instance(dim, 3, seed)``.
"""

from __future__ import annotations

import json
from pathlib import Path

from unotb.gaussian import benchmark_instance

LAM = (0.25, 0.25, 0.5)
SEEDS = {2: 20, 4: 40}
TRAIN = {
    "batch_size": 256,
    "iters": 10000,
    "n_t": 3,
    "lr_f": 1e-3,
    "lr_t": 1e-3,
    "lr_m": 1e-3,
    "hidden_f": [128, 128, 128],
    "hidden_t": [128, 128, 128],
}


def render(dim: int, seed: int) -> str:
    gs = benchmark_instance(dim, k=len(LAM), seed=seed)
    lines = [
        f"# balanced Gaussian barycenter, D={dim}, instance seed {seed}",
        f'name = "gaussian_d{dim}"',
        f"K = {len(LAM)}",
    ]
    lines += [f"{k} = {json.dumps(v)}" for k, v in TRAIN.items()]
    lines += [
        "seed = 0",
        'oracle.kind = "gaussian"',
        "eval.n = 10000",
        "eval.seed = 1",
    ]
    for i, (g, lam) in enumerate(zip(gs, LAM), 1):
        params = {"mean": g.mean.tolist(), "cov": g.cov.tolist()}
        lines += [
            f'k.{i}.dataset = "gaussian"',
            f"k.{i}.params = {json.dumps(params)}",
            f'k.{i}.divergence = "kl"',
            f"k.{i}.tau = 100",
            f"k.{i}.lambda = {lam}",
        ]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    here = Path(__file__).parent
    for dim, seed in SEEDS.items():
        (here / f"gaussian_d{dim}.cfg").write_text(render(dim, seed))
