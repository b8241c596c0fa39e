"""Dobrushin influences of the cross potential, computed by exhaustion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .lattice import STEPS

# the 12 sites at l1 distance 1 or 2 from the origin
OFFSETS = tuple(sorted((dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
                       if 0 < abs(dx) + abs(dy) <= 2))
_POS = {o: k for k, o in enumerate(OFFSETS)}


def _neighborhood_bits() -> np.ndarray:
    """All 2^12 assignments of the offsets, as a (4096, 12) 0/1 array."""
    codes = np.arange(1 << len(OFFSETS))
    return ((codes[:, None] >> np.arange(len(OFFSETS))) & 1).astype(np.int8)


def p_zero_table(beta: float) -> np.ndarray:
    """P(origin = 0 | neighborhood code) for every one of the 4096 codes."""
    bits = _neighborhood_bits()

    def val(site, center):
        if site == (0, 0):
            return np.full(len(bits), center, dtype=np.int8)
        return bits[:, _POS[site]]

    energy = []
    for c in (0, 1):
        e = np.zeros(len(bits))
        for cx, cy in ((0, 0),) + STEPS:
            mid = val((cx, cy), c)
            nb = sum(val((cx + dx, cy + dy), c) for dx, dy in STEPS)
            ok = (nb == 0) == (mid == 1)
            e += np.where(ok, -beta, beta)
        energy.append(e)
    d = energy[1] - energy[0]
    return 1.0 / (1.0 + np.exp(-d))


def influence(j, beta: float, table: np.ndarray | None = None) -> float:
    """sup over neighborhoods of the TV change at the origin when site j flips."""
    j = tuple(j)
    if not 0 < abs(j[0]) + abs(j[1]):
        raise ValueError("offset must be nonzero")
    if abs(j[0]) + abs(j[1]) > 2:
        return 0.0
    p0 = p_zero_table(beta) if table is None else table
    k = _POS[j]
    codes = np.arange(len(p0))
    lo = codes[(codes >> k) & 1 == 0]
    return float(np.max(np.abs(p0[lo] - p0[lo | (1 << k)])))


@dataclass
class InfluenceTable:
    beta: float
    entries: dict
    alpha: float


def influence_table(beta: float) -> InfluenceTable:
    if beta <= 0:
        raise ValueError("beta must be positive")
    p0 = p_zero_table(beta)
    entries = {o: influence(o, beta, p0) for o in OFFSETS}
    return InfluenceTable(beta, entries, sum(entries.values()))


def alpha(beta: float) -> float:
    """Sum of the influences on the origin (the sup over sites by shift invariance)."""
    return influence_table(beta).alpha


def find_beta0(lo: float = 0.04, hi: float = 0.06, tol: float = 1e-6) -> float:
    """Root of alpha(beta) = 1 by bisection on a bracketing interval."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    a_lo, a_hi = alpha(lo), alpha(hi)
    if not (a_lo < 1.0 < a_hi):
        raise ValueError(f"[{lo}, {hi}] does not bracket alpha = 1 "
                         f"(alpha(lo) = {a_lo:.6f}, alpha(hi) = {a_hi:.6f})")
    return bisect(lambda b: alpha(b) - 1.0, lo, hi, xtol=tol)
