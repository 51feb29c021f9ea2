"""Command-line entry point: ``unotb <command> CONFIG --out DIR``.

Commands share one config file and one output directory, so a full run is::

    unotb generate cfg.txt --out runs/toy
    unotb train    cfg.txt --out runs/toy
    unotb oracle   cfg.txt --out runs/toy
    unotb eval     cfg.txt --out runs/toy
    unotb metrics  cfg.txt --out runs/toy
    unotb plot     cfg.txt --out runs/toy

Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, datagen, kernels
from .config import RunConfig
from .config import load as load_config
from .core import load_checkpoint
from .discrete_ot import interpolated_barycenter_oracle, w2_empirical
from .errors import ConfigError, NumericError, ShapeError
from .gaussian import GaussianParams, apply_map, fixed_point_barycenter, ot_map
from .metrics import MetricReport, bw2_uvp, config_hash, l2_map_metric, l2_uvp
from .model import MapBank, PotentialBank
from .plotting import scatter_svg
from .sampler import rejection_sample
from .trainer import build_banks, train

log = logging.getLogger("unotb")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

CHECKPOINT = "checkpoint.bin"


def source_hash() -> str:
    """Hash of every source file in the installed package."""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.suffix in (".py", ".pyx") and "__pycache__" not in path.parts:
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()[:16]


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, X, header: list[str] | None) -> None:
    path.write_text(datagen.to_csv(X, header))


def _read_csv(path: Path, header: bool) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path} (run the producing command first)")
    return datagen.from_csv(path.read_text(), header=header)


def _coords(d: int) -> list[str]:
    return [f"x{i + 1}" for i in range(d)]


def write_manifest(out: Path, command: str, cfg: RunConfig, extra: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": cfg.text,
        "config_hash": config_hash(cfg.text),
        "source_hash": source_hash(),
        "version": __version__,
        "backend": kernels.BACKEND,
        "seed": cfg.seed,
    }
    if extra:
        manifest.update(extra)
    _dump(out / f"manifest_{command}.json", manifest)


# -- commands ---------------------------------------------------------------


def cmd_generate(cfg: RunConfig, out: Path, args) -> None:
    for i, m in enumerate(cfg.marginals, 1):
        spec = datagen.DatasetSpec(m.dataset, cfg.data_n, cfg.data_seed + i - 1, m.params)
        X = datagen.generate(spec)
        _write_csv(out / f"data_k{i}.csv", X, _coords(X.shape[1]) if args.header else None)
    write_manifest(out, "generate", cfg)


def cmd_generate_one(args) -> int:
    params = json.loads(args.params) if args.params else {}
    spec = datagen.DatasetSpec(args.dataset, args.n, args.seed, params)
    X = datagen.generate(spec)
    text = datagen.to_csv(X, _coords(X.shape[1]) if args.header else None)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path, args) -> None:
    cfg.train.validate()
    samplers = [m.sampler() for m in cfg.marginals]
    _, _, report = train(cfg.train, samplers, checkpoint_path=out / CHECKPOINT)
    _dump(out / "report.json", report.to_dict(timing=False))
    _dump(out / "timing.json", {"wall_time_sec": report.wall_time_sec})
    write_manifest(out, "train", cfg)


def load_banks(cfg: RunConfig, out: Path) -> tuple[PotentialBank, MapBank]:
    path = out / CHECKPOINT
    if not path.exists():
        raise FileNotFoundError(f"missing checkpoint: {path} (run 'train' first)")
    potentials, maps = build_banks(cfg.train)
    state = load_checkpoint(path)
    try:
        potentials.load_state(state)
        maps.load_state(state)
    except KeyError as exc:
        raise ConfigError(f"checkpoint {path} lacks parameter {exc.args[0]!r}; architecture mismatch") from None
    except ShapeError as exc:
        raise ConfigError(f"checkpoint {path} does not match the config: {exc}") from None
    return potentials, maps


def cmd_eval(cfg: RunConfig, out: Path, args) -> None:
    potentials, maps = load_banks(cfg, out)
    stats = {}
    hdr = _coords(cfg.train.dim) if args.header else None
    for i, m in enumerate(cfg.marginals, 1):
        res = rejection_sample(
            potentials,
            maps,
            i - 1,
            m.sampler(),
            cfg.eval_n,
            m.divergence,
            m.cost,
            seed=[cfg.eval_seed, i],
            pool_size=cfg.eval_pool or None,
        )
        _write_csv(out / f"accepted_k{i}.csv", res.accepted, _coords(res.accepted.shape[1]) if args.header else None)
        _write_csv(out / f"barycenter_k{i}.csv", res.samples, hdr)
        stats[f"k{i}"] = {
            "acceptance_rate": res.acceptance_rate,
            "n_candidates": res.n_candidates,
            "n_accepted": int(res.accepted.shape[0]),
        }
    _dump(out / "acceptance.json", stats)
    write_manifest(out, "eval", cfg)


def _oracle_inputs(cfg: RunConfig) -> list[np.ndarray]:
    ss = np.random.SeedSequence(cfg.oracle_seed).spawn(cfg.K)
    return [
        datagen.sample(m.dataset, cfg.oracle_n, np.random.default_rng(s), **m.params)
        for m, s in zip(cfg.marginals, ss)
    ]


def _gaussian_inputs(cfg: RunConfig) -> list[GaussianParams]:
    gs = []
    for i, m in enumerate(cfg.marginals, 1):
        if m.dataset != "gaussian":
            raise ConfigError(f"gaussian oracle needs gaussian marginals; k.{i}.dataset is {m.dataset!r}")
        gs.append(GaussianParams(m.params["mean"], m.params["cov"]))
    return gs


def cmd_oracle(cfg: RunConfig, out: Path, args) -> None:
    if cfg.oracle_kind == "interpolation":
        if cfg.K != 2 or not cfg.marginals[0].divergence.is_balanced:
            raise ConfigError("interpolation oracle needs K = 2 with a balanced first marginal")
        if bool(args.x1) != bool(args.x2):
            raise ConfigError("--x1 and --x2 must be given together")
        if args.x1:
            X1, X2 = _read_csv(Path(args.x1), args.header), _read_csv(Path(args.x2), args.header)
        else:
            X1, X2 = _oracle_inputs(cfg)
        div2 = cfg.marginals[1].divergence
        if div2.kind not in ("kl", "balanced"):
            raise ConfigError(f"interpolation oracle supports KL or balanced second sides, got {div2.kind!r}")
        # a balanced second side is the large-tau limit
        tau = 1e6 if div2.is_balanced else div2.tau
        orc = interpolated_barycenter_oracle(
            X1, X2, (cfg.marginals[0].lam, cfg.marginals[1].lam), tau, cfg.oracle_rel_eps, cfg.oracle_tol
        )
        w = orc.source_weights() * X2.shape[0]
        hdr = _coords(X1.shape[1]) if args.header else None
        _write_csv(out / "oracle_x1.csv", X1, hdr)
        _write_csv(out / "oracle_x2.csv", X2, hdr)
        _write_csv(out / "oracle_tstar.csv", orc.t_star, hdr)
        _dump(
            out / "oracle.json",
            {
                "kind": "interpolation",
                "n": [int(X1.shape[0]), int(X2.shape[0])],
                # reweighting of the relaxed side relative to uniform
                "relaxed_weight_range": [float(w.min()), float(w.max())],
                "value": orc.plan.value,
                "iterations": orc.plan.n_iter,
                "residual": orc.plan.residual,
                "tau": orc.tau,
            },
        )
    elif cfg.oracle_kind == "gaussian":
        gs = _gaussian_inputs(cfg)
        bary, iters = fixed_point_barycenter(gs, [m.lam for m in cfg.marginals])
        maps = [ot_map(g, bary) for g in gs]
        _dump(
            out / "oracle.json",
            {
                "kind": "gaussian",
                "iterations": iters,
                "barycenter": {"mean": bary.mean.tolist(), "cov": bary.cov.tolist()},
                "maps": [{"A": A.tolist(), "b": b.tolist()} for A, b in maps],
            },
        )
    else:
        raise ConfigError("config sets no oracle (oracle.kind = none)")
    write_manifest(out, "oracle", cfg)


def _map_outputs(maps: MapBank, k: int, X: np.ndarray, seed) -> np.ndarray:
    noise = maps.noise(np.random.default_rng(seed), X.shape[0]) if maps.stochastic else None
    return maps.apply(k, X, noise).data


def cmd_metrics(cfg: RunConfig, out: Path, args) -> None:
    potentials, maps = load_banks(cfg, out)
    h = config_hash(cfg.text)
    reports: list[MetricReport] = []
    result: dict = {}
    if cfg.oracle_kind == "interpolation":
        X1 = _read_csv(out / "oracle_x1.csv", args.header)
        t_star = _read_csv(out / "oracle_tstar.csv", args.header)
        t_hat = _map_outputs(maps, 0, X1, [cfg.eval_seed, 0])
        l2 = l2_map_metric(t_hat, t_star)
        w2, w2sq = w2_empirical(t_hat, t_star, tol=cfg.w2_tol)
        reports += [
            MetricReport("L2", l2, X1.shape[0], cfg.seed, h),
            MetricReport("W2", w2sq, X1.shape[0], cfg.seed, h),
        ]
        result.update({"L2": l2, "W2": w2sq, "W2_distance": w2})
    elif cfg.oracle_kind == "gaussian":
        path = out / "oracle.json"
        if not path.exists():
            raise FileNotFoundError(f"missing input file: {path} (run 'oracle' first)")
        orc = json.loads(path.read_text())
        bary = GaussianParams(orc["barycenter"]["mean"], orc["barycenter"]["cov"])
        gs = _gaussian_inputs(cfg)
        ss = np.random.SeedSequence([cfg.eval_seed, 7]).spawn(cfg.K)
        uvp_total = 0.0
        bw_total = 0.0
        for i, (m, g, mp, s) in enumerate(zip(cfg.marginals, gs, orc["maps"], ss), 1):
            X = g.sample(cfg.eval_n, np.random.default_rng(s))
            t_star = apply_map(np.asarray(mp["A"]), np.asarray(mp["b"]), X)
            t_hat = _map_outputs(maps, i - 1, X, [cfg.eval_seed, i])
            uvp = l2_uvp(t_hat, t_star, bary)
            res = rejection_sample(
                potentials, maps, i - 1, m.sampler(), cfg.eval_n, m.divergence, m.cost, seed=[cfg.eval_seed, i]
            )
            bw = bw2_uvp(res.samples, bary)
            reports += [
                MetricReport(f"L2_UVP_k{i}", uvp, cfg.eval_n, cfg.seed, h),
                MetricReport(f"BW2_UVP_k{i}", bw, cfg.eval_n, cfg.seed, h),
            ]
            result[f"L2_UVP_k{i}"] = uvp
            result[f"BW2_UVP_k{i}"] = bw
            uvp_total += m.lam * uvp
            bw_total += m.lam * bw
        reports += [
            MetricReport("L2_UVP", uvp_total, cfg.eval_n, cfg.seed, h),
            MetricReport("BW2_UVP", bw_total, cfg.eval_n, cfg.seed, h),
        ]
        result.update({"L2_UVP": uvp_total, "BW2_UVP": bw_total})
    else:
        raise ConfigError("metrics need an oracle (set oracle.kind)")
    result["reports"] = [r.to_dict() for r in reports]
    _dump(out / "metrics.json", result)
    write_manifest(out, "metrics", cfg)


PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def cmd_plot(cfg: RunConfig, out: Path, args) -> None:
    series: list[tuple[str, np.ndarray]] = []
    for i in range(1, cfg.K + 1):
        for stem, label in (("data", "input"), ("accepted", "accepted"), ("barycenter", "barycenter")):
            path = out / f"{stem}_k{i}.csv"
            if path.exists():
                series.append((f"{label}_k{i}", _read_csv(path, args.header)))
    path = out / "oracle_tstar.csv"
    if path.exists():
        series.append(("oracle_barycenter", _read_csv(path, args.header)))
    if not series:
        raise FileNotFoundError(f"nothing to plot in {out}; run generate/eval first")
    layers = [(name, X[:, :2], PALETTE[j % len(PALETTE)]) for j, (name, X) in enumerate(series)]
    (out / "plot.svg").write_text(scatter_svg(layers, title=cfg.name))
    rows = ["series,x,y"]
    for name, X, _ in layers:
        rows += [f"{name},{float(x)!r},{float(y)!r}" for x, y in X]
    (out / "plot_series.csv").write_text("\n".join(rows) + "\n")


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "metrics": cmd_metrics,
    "plot": cmd_plot,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="unotb", description="Semi-unbalanced OT barycenters with neural maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"{name} step of a run")
        sp.add_argument("config", nargs="?" if name == "generate" else None, help="run config file")
        sp.add_argument("--out", "-o", default=None, help="output directory (default runs/<name>)")
        sp.add_argument("--header", action="store_true", help="write (and expect) CSV header rows")
        if name == "generate":
            sp.add_argument("--dataset", help="generate one dataset without a config")
            sp.add_argument("--n", type=int, default=1000)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--params", help="JSON dataset parameters (gaussian: mean, cov)")
            sp.add_argument("--output", help="CSV path for --dataset mode ('-' for stdout)")
        if name == "oracle":
            sp.add_argument("--x1", help="CSV of balanced-side points (default: sample from the config)")
            sp.add_argument("--x2", help="CSV of relaxed-side points")
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "generate" and args.dataset:
        return cmd_generate_one(args)
    if args.config is None:
        raise ConfigError("a config file is required (or --dataset for generate)")
    cfg = load_config(args.config)
    if args.verbose and not cfg.train.log_every:
        cfg.train.log_every = 100
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    COMMANDS[args.command](cfg, out, args)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
