"""Glauber dynamics for the cross potential, grand coupling, exact Gibbs
tables on small regions, error probabilities and entropy bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .dobrushin import OFFSETS, p_zero_table
from .lattice import BoundaryRule, Configuration, Region

LOG2E = math.log2(math.e)
MAX_EXACT_SITES = 20


@dataclass(frozen=True)
class UpdateToken:
    w: tuple
    u: float


def token_stream(region: Region, seed: int):
    """Endless (site, uniform) pairs from a counter-based generator."""
    rng = np.random.Generator(np.random.Philox(seed))
    sites = region.sites()
    while True:
        ks = rng.integers(0, len(sites), size=4096)
        us = rng.random(4096)
        for k, u in zip(ks.tolist(), us.tolist()):
            yield UpdateToken(sites[k], u)


@lru_cache(maxsize=64)
def _table(beta: float) -> np.ndarray:
    return p_zero_table(beta)


class _Chain:
    """Mutable working copy of a configuration with a 2-site frame."""

    PAD = 2

    def __init__(self, cfg: Configuration):
        self.region = cfg.region
        self.torus = cfg.region.is_torus
        if self.torus:
            self.a = cfg.bits.astype(np.int8).copy()
        else:
            self.a = cfg.padded(self.PAD).astype(np.int8)

    def index(self, site):
        r = self.region
        if self.torus:
            return site[0] % r.width, site[1] % r.height
        return site[0] - r.x0 + self.PAD, site[1] - r.y0 + self.PAD

    def code(self, site) -> int:
        x, y = self.index(site)
        a = self.a
        c = 0
        if self.torus:
            w, h = a.shape
            for k, (dx, dy) in enumerate(OFFSETS):
                c |= int(a[(x + dx) % w, (y + dy) % h]) << k
        else:
            for k, (dx, dy) in enumerate(OFFSETS):
                c |= int(a[x + dx, y + dy]) << k
        return c

    def get(self, site) -> int:
        return int(self.a[self.index(site)])

    def set(self, site, v: int):
        self.a[self.index(site)] = v

    def configuration(self, boundary: BoundaryRule) -> Configuration:
        if self.torus:
            return Configuration(self.region, self.a, boundary)
        p = self.PAD
        return Configuration(self.region, self.a[p:-p, p:-p], boundary)


def glauber_step(cfg: Configuration, token: UpdateToken, beta: float) -> Configuration:
    """Heat-bath update at token.w: 0 if u <= P(0 | rest), else 1."""
    if not cfg.region.contains(cfg.region.wrap(token.w)):
        raise ValueError("update site outside the region")
    ch = _Chain(cfg)
    p0 = _table(beta)[ch.code(token.w)]
    return cfg.with_bits({token.w: 0 if token.u <= p0 else 1})


def c_beta(beta: float) -> float:
    return 13.0 - 24.0 / (1.0 + math.exp(-10.0 * beta))


def mixing_bound(n: int, beta: float, eps: float) -> int:
    """ceil((n / c_beta) (ln n + ln 1/eps)) with c_beta = 13 - 24/(1 + e^(-10 beta))."""
    c = c_beta(beta)
    if c <= 0:
        raise ValueError(f"c_beta = {c:.4g} is not positive; need beta < ln(13/11)/10")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return math.ceil(n / c * (math.log(n) + math.log(1.0 / eps)))


def coalescence_time(x: Configuration, y: Configuration, beta: float, seed: int,
                     t_max: int = 1_000_000, tail: int = 0):
    """First time two chains driven by one token stream agree on the region.

    Returns None on timeout.  With tail > 0 the chains keep running that
    many extra steps and an AssertionError is raised if they ever separate.
    """
    if x.region != y.region or x.boundary != y.boundary:
        raise ValueError("chains must share region and boundary")
    if np.array_equal(x.bits, y.bits):
        return 0
    cx, cy = _Chain(x), _Chain(y)
    table = _table(beta)
    diff = int(np.sum(x.bits != y.bits))
    hit = None
    for t, tok in enumerate(token_stream(x.region, seed), start=1):
        old = cx.get(tok.w) != cy.get(tok.w)
        vx = 0 if tok.u <= table[cx.code(tok.w)] else 1
        vy = 0 if tok.u <= table[cy.code(tok.w)] else 1
        cx.set(tok.w, vx)
        cy.set(tok.w, vy)
        diff += int(vx != vy) - int(old)
        if hit is None and diff == 0:
            hit = t
        if hit is not None:
            if diff != 0:
                raise AssertionError(f"coupled chains separated at step {t}")
            if t >= hit + tail:
                return hit
        if t >= t_max:
            return hit
    return hit


def extreme_starts(region: Region, boundary: BoundaryRule):
    """Checkerboard fillings used as the two extreme initial states."""
    ev = Configuration.from_rule(region, BoundaryRule("even"), boundary)
    od = Configuration.from_rule(region, BoundaryRule("odd"), boundary)
    return ev, od


def coalescence_experiment(width: int, height: int, beta: float, seeds, t_max: int = 1_000_000,
                           boundary: BoundaryRule | None = None, torus: bool = False) -> dict:
    region = Region.torus(width, height) if torus else Region.window(0, 0, width - 1, height - 1)
    boundary = boundary if boundary is not None else BoundaryRule("even")
    x, y = extreme_starts(region, boundary)
    times = [coalescence_time(x, y, beta, int(s), t_max) for s in seeds]
    done = [t for t in times if t is not None]
    return {"times": times, "timeouts": len(times) - len(done),
            "median": float(np.median([t if t is not None else math.inf for t in times]))}


def one_step_contraction(region: Region, beta: float, samples: int, seed: int,
                         boundary: BoundaryRule | None = None) -> dict:
    """Mean and standard error of rho(X1, Y1) - 1 over random Hamming-adjacent pairs."""
    boundary = boundary if boundary is not None else BoundaryRule("even")
    rng = np.random.Generator(np.random.Philox(seed))
    table = _table(beta)
    sites = region.sites()
    out = np.empty(samples)
    for k in range(samples):
        bits = rng.integers(0, 2, size=region.shape)
        cfg = Configuration(region, bits, boundary)
        v = sites[rng.integers(len(sites))]
        w = sites[rng.integers(len(sites))]
        u = rng.random()
        cx, cy = _Chain(cfg), _Chain(cfg)
        cy.set(v, 1 - cy.get(v))
        vx = 0 if u <= table[cx.code(w)] else 1
        vy = 0 if u <= table[cy.code(w)] else 1
        # distance after the update: the flipped site v, unless w == v, plus any new disagreement at w
        dist = (0 if w == v else 1) + (0 if w == v else int(vx != vy))
        out[k] = dist - 1
    return {"mean": float(out.mean()), "sigma": float(out.std(ddof=1) / math.sqrt(samples)),
            "bound": -c_beta(beta) / len(region)}


# exact small-volume Gibbs measures

def _all_configs(region: Region) -> np.ndarray:
    n = len(region)
    if n > MAX_EXACT_SITES:
        raise ValueError(f"region has {n} sites; exact enumeration is capped at {MAX_EXACT_SITES}")
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    return bits.reshape((1 << n,) + region.shape)


def _framed(region: Region, boundary: BoundaryRule, bits: np.ndarray, pad: int) -> np.ndarray:
    """Stack of configurations with `pad` boundary sites around each."""
    if region.is_torus:
        return np.pad(bits, ((0, 0), (pad, pad), (pad, pad)), mode="wrap")
    xs, ys = np.meshgrid(np.arange(region.x0 - pad, region.x1 + pad + 1),
                         np.arange(region.y0 - pad, region.y1 + pad + 1), indexing="ij")
    frame = boundary.values(xs, ys).astype(np.int8)
    out = np.broadcast_to(frame, (len(bits),) + frame.shape).copy()
    out[:, pad:pad + region.width, pad:pad + region.height] = bits
    return out


def _error_masks(region: Region, boundary: BoundaryRule, bits: np.ndarray) -> np.ndarray:
    """Per-configuration error masks over Lambda+ (window enlarged by one, corners cleared)."""
    if region.is_torus:
        arr = _framed(region, boundary, bits, 1)
        return _stack_errors(arr)
    arr = _framed(region, boundary, bits, 2)
    m = _stack_errors(arr)
    m[:, 0, 0] = m[:, 0, -1] = m[:, -1, 0] = m[:, -1, -1] = False
    return m


def _stack_errors(arr: np.ndarray) -> np.ndarray:
    c = arr[:, 1:-1, 1:-1]
    k = arr[:, 2:, 1:-1] + arr[:, :-2, 1:-1] + arr[:, 1:-1, 2:] + arr[:, 1:-1, :-2]
    return ((c == 1) & (k > 0)) | ((c == 0) & (k == 0))


@dataclass
class ExactGibbs:
    """Probabilities of all 2^|region| configurations; bit k of a code is region.sites()[k]."""

    region: Region
    beta: float
    boundary: BoundaryRule
    probs: np.ndarray
    errors: np.ndarray
    error_masks: np.ndarray

    def configuration(self, code: int) -> Configuration:
        n = len(self.region)
        bits = np.array([(code >> k) & 1 for k in range(n)], dtype=np.uint8).reshape(self.region.shape)
        return Configuration(self.region, bits, self.boundary)

    def site_error_probability(self, site) -> float:
        r = self.region
        off = 0 if r.is_torus else 1
        x, y = site[0] - r.x0 + off, site[1] - r.y0 + off
        return float(self.probs[self.error_masks[:, x, y]].sum())


def exact_gibbs(region: Region, beta: float, boundary: BoundaryRule | None = None) -> ExactGibbs:
    """mu(omega) proportional to exp(-2 beta * errors in Lambda+), by full enumeration."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    boundary = boundary if boundary is not None else BoundaryRule("even")
    bits = _all_configs(region)
    masks = _error_masks(region, boundary, bits)
    errs = masks.reshape(len(bits), -1).sum(axis=1)
    logw = -2.0 * beta * (errs - errs.min())
    w = np.exp(logw)
    probs = w / w.sum()
    return ExactGibbs(region, beta, boundary, probs, errs, masks)


def glauber_operator(g: ExactGibbs) -> np.ndarray:
    """One exact random-scan Glauber transition applied to the table g.probs.

    Conditionals come from the local cross potential, not from the table.
    """
    r = g.region
    n = len(r)
    table = _table(g.beta)
    bits = _all_configs(r)
    arr = _framed(r, g.boundary, bits, 2)
    codes = np.arange(1 << n)
    out = np.zeros_like(g.probs)
    for k, (x, y) in enumerate(r.sites()):
        a, b = x - r.x0 + 2, y - r.y0 + 2
        nb = np.zeros(len(codes), dtype=np.int64)
        for q, (dx, dy) in enumerate(OFFSETS):
            nb |= arr[:, a + dx, b + dy].astype(np.int64) << q
        p0 = table[nb]
        lo = codes & ~(1 << k)
        hi = codes | (1 << k)
        # mass at c flows to the lo/hi versions of c with the conditional at c
        np.add.at(out, lo, g.probs * p0)
        np.add.at(out, hi, g.probs * (1.0 - p0))
    return out / n


def error_prob_bounds(region: Region, beta: float, i, boundary: BoundaryRule | None = None,
                      gibbs: ExactGibbs | None = None) -> tuple[float, float, float]:
    """(exact, upper, lower) for P(i is in error); raises if the sandwich fails."""
    g = gibbs if gibbs is not None else exact_gibbs(region, beta, boundary)
    if not region.contains(i):
        raise ValueError("site must lie in the region")
    exact = g.site_error_probability(i)
    upper = 16.0 * math.exp(-2.0 * beta)
    lower = 1.0 / (1.0 + math.exp(10.0 * beta))
    if not lower <= exact <= upper:
        raise AssertionError(f"error probability {exact} outside [{lower}, {upper}]")
    return exact, upper, lower


def entropy_exact(region: Region, beta: float, boundary: BoundaryRule | None = None) -> float:
    """Shannon entropy per site (bits) of the exact finite-volume measure."""
    p = exact_gibbs(region, beta, boundary).probs
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum() / len(region))


def entropy_lower_bound(beta: float, h0: float) -> tuple[float, str]:
    """max{A + H0, 1 + A - 2 beta log2 e} with A = 2 beta log2 e / (1 + e^(10 beta)).

    Returns the value and which branch attains it ("ground" or "flat").
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    a = 2.0 * beta * LOG2E / (1.0 + math.exp(min(10.0 * beta, 700.0)))
    ground = a + h0
    flat = 1.0 + a - 2.0 * beta * LOG2E
    return (ground, "ground") if ground >= flat else (flat, "flat")


def entropy_crossover(h0: float) -> tuple[float, float]:
    """Crossover of the two branches: (numerical root, closed form (1 - H0)/(2 log2 e))."""
    closed = (1.0 - h0) / (2.0 * LOG2E)

    def gap(b):
        a = 2.0 * b * LOG2E / (1.0 + math.exp(10.0 * b))
        return (a + h0) - (1.0 + a - 2.0 * b * LOG2E)

    root = brentq(gap, 0.0, 1.0, xtol=1e-14)
    return root, closed
