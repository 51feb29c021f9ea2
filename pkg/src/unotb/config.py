"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment. Values are JSON
(``5``, ``1e-3``, ``"kl"``, ``[128, 128]``, ``{"mean": [0, 0]}``); a bare
word such as ``kl`` is read as a string. Per-marginal keys use the prefix
``k.<index>.`` with 1-based indices::

    K = 2
    batch_size = 1024
    k.1.dataset = "spiral"
    k.1.divergence = "balanced"
    k.1.lambda = 0.5
    k.2.dataset = "gm8"
    k.2.divergence = "kl"
    k.2.tau = 5
    k.2.lambda = 0.5
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import datagen
from .cost import CostFn
from .divergence import Divergence
from .errors import ConfigError
from .trainer import BarycenterConfig

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

GLOBAL_KEYS = {
    "K": int,
    "dim": int,
    "batch_size": int,
    "iters": int,
    "n_t": int,
    "lr_f": float,
    "lr_t": float,
    "lr_m": float,
    "betas": list,
    "hidden_f": list,
    "hidden_t": list,
    "noise_dim": int,
    "noise_draws": int,
    "grad_clip": float,
    "seed": int,
    "log_every": int,
    "data.n": int,
    "data.seed": int,
    "eval.n": int,
    "eval.seed": int,
    "eval.pool": int,
    "oracle.kind": str,
    "oracle.n": int,
    "oracle.seed": int,
    "oracle.rel_eps": float,
    "oracle.tol": float,
    "metrics.w2_tol": float,
    "plot": bool,
    "name": str,
}
MARGINAL_KEYS = {
    "dataset": str,
    "params": dict,
    "divergence": str,
    "tau": float,
    "lambda": float,
    "cost": str,
    "cost_alpha": float,
}
ORACLE_KINDS = ("none", "interpolation", "gaussian")


def parse_value(raw: str, where: str = ""):
    raw = raw.strip()
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if _BARE.match(raw):
            return raw
        raise ConfigError(f"{where}cannot parse value {raw!r}") from None


def parse_text(text: str) -> dict:
    """Raw ``key -> value`` mapping; duplicate keys are an error."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = _strip_comment(line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if not _KEY.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = parse_value(raw, f"line {lineno}: ")
    return out


def _strip_comment(line: str) -> str:
    # '#' inside a quoted JSON string is data, not a comment
    quoted = escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif ch == "\\" and quoted:
            escaped = True
        elif ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _coerce(key: str, value, kind):
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is bool and isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is list and isinstance(value, list):
        return value
    if kind is dict and isinstance(value, dict):
        return value
    raise ConfigError(f"key {key!r}: expected {kind.__name__}, got {value!r}")


@dataclass
class Marginal:
    dataset: str
    lam: float
    divergence: Divergence
    cost: CostFn = field(default_factory=CostFn)
    params: dict = field(default_factory=dict)

    def sampler(self):
        return datagen.sampler(self.dataset, **self.params)


@dataclass
class RunConfig:
    train: BarycenterConfig
    marginals: list[Marginal]
    data_n: int = 1000
    data_seed: int = 0
    eval_n: int = 2000
    eval_seed: int = 1
    eval_pool: int = 0
    oracle_kind: str = "none"
    oracle_n: int = 2000
    oracle_seed: int = 2
    oracle_rel_eps: float = 1e-3
    oracle_tol: float = 1e-6
    w2_tol: float = 1e-3
    plot: bool = True
    name: str = "run"
    text: str = ""

    @property
    def K(self) -> int:
        return len(self.marginals)

    @property
    def seed(self) -> int:
        return self.train.seed


def from_mapping(raw: dict, text: str = "") -> RunConfig:
    glob: dict = {}
    per_k: dict[int, dict] = {}
    for key, value in raw.items():
        if key.startswith("k."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in MARGINAL_KEYS:
                raise ConfigError(f"unknown key {key!r}")
            idx = int(parts[1])
            per_k.setdefault(idx, {})[parts[2]] = _coerce(key, value, MARGINAL_KEYS[parts[2]])
        elif key in GLOBAL_KEYS:
            glob[key] = _coerce(key, value, GLOBAL_KEYS[key])
        else:
            raise ConfigError(f"unknown key {key!r}")
    K = glob.get("K", len(per_k))
    if sorted(per_k) != list(range(1, K + 1)):
        raise ConfigError(f"expected marginal sections k.1 .. k.{K}, got {sorted(per_k)}")
    marginals = []
    for idx in range(1, K + 1):
        sec = per_k[idx]
        if "dataset" not in sec:
            raise ConfigError(f"missing key 'k.{idx}.dataset'")
        if sec["dataset"] not in datagen.GENERATORS:
            raise ConfigError(f"k.{idx}.dataset: unknown dataset {sec['dataset']!r}")
        if "lambda" not in sec:
            raise ConfigError(f"missing key 'k.{idx}.lambda'")
        kind = sec.get("divergence", "balanced")
        tau = sec.get("tau", 1.0)
        if tau <= 0:
            raise ConfigError(f"k.{idx}.tau must be > 0, got {tau}")
        marginals.append(
            Marginal(
                dataset=sec["dataset"],
                lam=sec["lambda"],
                divergence=Divergence.from_config(kind, tau),
                cost=CostFn(sec.get("cost", "quadratic"), sec.get("cost_alpha", 1.0)),
                params=sec.get("params", {}),
            )
        )
    lam = [m.lam for m in marginals]
    if any(l <= 0 for l in lam) or abs(sum(lam) - 1.0) > 1e-9:
        raise ConfigError(f"lambda must be positive and sum to 1, got {lam}")
    dims = [datagen.dim_of(m.dataset, **m.params) for m in marginals]
    dim = glob.get("dim", dims[0])
    train = BarycenterConfig(
        divergences=[m.divergence for m in marginals],
        lam=lam,
        dim=dim,
        costs=[m.cost for m in marginals],
        in_dims=dims,
        datasets=[m.dataset for m in marginals],
        **{
            k: (tuple(v) if k in ("betas", "hidden_f", "hidden_t") else v)
            for k, v in glob.items()
            if k in BarycenterConfig.__dataclass_fields__
        },
    )
    oracle_kind = glob.get("oracle.kind", "none")
    if oracle_kind not in ORACLE_KINDS:
        raise ConfigError(f"oracle.kind must be one of {ORACLE_KINDS}, got {oracle_kind!r}")
    cfg = RunConfig(
        train=train,
        marginals=marginals,
        data_n=glob.get("data.n", 1000),
        data_seed=glob.get("data.seed", 0),
        eval_n=glob.get("eval.n", 2000),
        eval_seed=glob.get("eval.seed", 1),
        eval_pool=glob.get("eval.pool", 0),
        oracle_kind=oracle_kind,
        oracle_n=glob.get("oracle.n", 2000),
        oracle_seed=glob.get("oracle.seed", 2),
        oracle_rel_eps=glob.get("oracle.rel_eps", 1e-3),
        oracle_tol=glob.get("oracle.tol", 1e-6),
        w2_tol=glob.get("metrics.w2_tol", 1e-3),
        plot=glob.get("plot", True),
        name=glob.get("name", "run"),
        text=text,
    )
    if cfg.data_n < 1 or cfg.eval_n < 1 or cfg.oracle_n < 1:
        raise ConfigError("sample sizes must be >= 1")
    return cfg


def loads(text: str) -> RunConfig:
    return from_mapping(parse_text(text), text)


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    return loads(text)
