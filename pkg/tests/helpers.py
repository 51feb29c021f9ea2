"""Shared test fixtures: hand-set banks and config rewriting."""

from __future__ import annotations

import json
import re

import numpy as np

from unotb.model import MapBank, PotentialBank

# criterion number -> one-line verdict, printed in the terminal summary
CRITERIA: dict[int, str] = {}


def verdict(n: int, ok: bool, detail: str) -> bool:
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[n] = line
    print(line)
    return ok


def identity_maps(dim: int, K: int = 1) -> MapBank:
    maps = MapBank([dim] * K, dim, hidden=())
    for net in maps.T:
        net.weights[0].data[...] = np.eye(dim)
        net.biases[0].data[...] = 0.0
    return maps


def linear_potentials(dim: int, lam, w=None, m: float = 0.0) -> PotentialBank:
    """Potentials whose auxiliary nets are ``g_k(y) = w . y`` (or zero)."""
    bank = PotentialBank(dim, lam, hidden=())
    for net in bank.g:
        net.weights[0].data[...] = 0.0 if w is None else np.asarray(w, dtype=np.float64).reshape(dim, 1)
        net.biases[0].data[...] = 0.0
    bank.m.data[...] = m
    return bank


def two_point_source(a, b):
    pts = np.array([a, b], dtype=np.float64)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        return pts[rng.integers(0, 2, size=n)]

    return draw


def override(text: str, **over) -> str:
    """Config text with keys replaced or appended; ``__`` in a name stands for ``.``."""
    for key, value in over.items():
        key = key.replace("__", ".")
        line = f"{key} = {json.dumps(value)}"
        pat = re.compile(rf"^{re.escape(key)}\s*=.*$", re.M)
        text = pat.sub(line, text) if pat.search(text) else text + line + "\n"
    return text
