"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20] [--train-iters 20] [--json out.json]

Times each hot kernel on problem sizes used in training and in the
discrete oracle, then one full training step with each backend.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from unotb import _kernels_py, kernels

try:
    from unotb import _kernels as _compiled
except ImportError:
    _compiled = None


def best_ms(fn, repeat: int) -> float:
    number = 5
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e3


def kernel_cases(rng):
    n = 2000
    C = rng.uniform(0, 10, size=(n, n))
    g = rng.normal(size=n)
    logw = np.full(n, -np.log(n))
    X = rng.normal(size=(n, 2))
    Y = rng.normal(size=(n, 2))
    h = rng.normal(size=(1024, 128))
    b = rng.normal(size=128)
    gr = rng.normal(size=(1024, 128))
    act = np.maximum(h, 0)
    return {
        "softmin_rows 2000x2000": lambda m: m.softmin_rows(C, g, logw, 0.01, 1),
        "sqdist 2000x2000x2": lambda m: m.sqdist(X, Y, 1),
        "bias_relu_ 1024x128": lambda m: m.bias_relu_(h.copy(), b, True),
        "relu_backward 1024x128": lambda m: m.relu_backward(gr, act, True),
    }


def train_step_ms(iters: int) -> float:
    from unotb.datagen import sampler
    from unotb.divergence import Divergence
    from unotb.trainer import BarycenterConfig, train

    cfg = BarycenterConfig(
        divergences=[Divergence.from_config("balanced"), Divergence.from_config("kl", 5.0)],
        lam=[0.5, 0.5],
        dim=2,
        batch_size=1024,
        iters=iters,
        n_t=3,
    )
    report = train(cfg, [sampler("spiral"), sampler("gm8")])[2]
    return report.wall_time_sec / iters * 1e3


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--train-iters", type=int, default=20)
    p.add_argument("--json", help="write results here")
    args = p.parse_args(argv)
    if _compiled is None:
        print("compiled extension not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in kernel_cases(rng).items():
        t_py = best_ms(lambda: fn(_kernels_py), args.repeat)
        t_c = best_ms(lambda: fn(_compiled), args.repeat)
        rows.append({"case": name, "python_ms": t_py, "cython_ms": t_c, "speedup": t_py / t_c})
    step = {"case": "train_step batch 1024 N_T 3"}
    saved = kernels._impl
    try:
        for impl, key in ((_kernels_py, "python_ms"), (_compiled, "cython_ms")):
            kernels._impl = impl
            step[key] = train_step_ms(args.train_iters)
    finally:
        kernels._impl = saved
    step["speedup"] = step["python_ms"] / step["cython_ms"]
    rows.append(step)
    w = max(len(r["case"]) for r in rows)
    print(f"{'case':<{w}}  {'python ms':>10}  {'cython ms':>10}  {'speedup':>7}")
    for r in rows:
        print(f"{r['case']:<{w}}  {r['python_ms']:>10.3f}  {r['cython_ms']:>10.3f}  {r['speedup']:>6.2f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
