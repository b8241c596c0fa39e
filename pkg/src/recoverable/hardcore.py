"""The maximal hard-core model: MIS-supported measures with weight lambda^|eta|.

Exact finite-volume computations run a column transfer over a window whose
outside is frozen to a boundary configuration.  Column x of the window is
a bit mask, bit k standing for row y0 + k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import STEPS, BoundaryRule, Configuration, Region, is_maximal

MAX_EXACT_SIDE = 11


def _mask(bits) -> int:
    return sum(int(b) << k for k, b in enumerate(bits))


@dataclass
class _Frame:
    """Column constraints for MIS completions of a window under a fixed outside."""

    region: Region
    h: int
    left: int            # occupied mask of the column left of the window
    right: int
    rim: list            # per column: frame bits above/below that cover row 0 / row h-1
    forbid: list         # per column: bits that must be 0
    force: list          # per column: bits that must be 1
    columns: list        # per column: admissible masks

    @property
    def width(self) -> int:
        return self.region.width


def _frame(outside: Configuration, region: Region) -> _Frame:
    """Translate the outside values around `region` into per-column constraints."""
    if region.is_torus:
        raise ValueError("exact enumeration needs a window region")
    x0, y0, x1, y1 = region.x0, region.y0, region.x1, region.y1
    h = region.height
    big = outside.values_on(Region.window(x0 - 3, y0 - 3, x1 + 3, y1 + 3)).astype(int)

    def val(x, y):
        return int(big[x - x0 + 3, y - y0 + 3])

    # outside sites whose cross avoids the window must already obey the rule
    for x in range(x0 - 2, x1 + 3):
        for y in range(y0 - 2, y1 + 3):
            if region.contains((x, y)) or (x0 <= x <= x1 and y0 - 1 <= y <= y1 + 1) \
                    or (y0 <= y <= y1 and x0 - 1 <= x <= x1 + 1):
                continue
            nb = sum(val(x + dx, y + dy) for dx, dy in STEPS)
            if (nb == 0) != (val(x, y) == 1):
                raise ValueError(f"outside configuration violates the recovery rule at {(x, y)}")

    left = _mask([val(x0 - 1, y) for y in range(y0, y1 + 1)])
    right = _mask([val(x1 + 1, y) for y in range(y0, y1 + 1)])
    full = (1 << h) - 1
    rim, forbid, force = [], [], []
    for x in range(x0, x1 + 1):
        below, above = val(x, y0 - 1), val(x, y1 + 1)
        r = below | (above << (h - 1))
        f = r
        if x == x0:
            f |= left
        if x == x1:
            f |= right
        g = 0
        # a ring 0 with no occupied outer neighbor must be covered from inside
        if below == 0 and val(x - 1, y0 - 1) + val(x + 1, y0 - 1) + val(x, y0 - 2) == 0:
            g |= 1
        if above == 0 and val(x - 1, y1 + 1) + val(x + 1, y1 + 1) + val(x, y1 + 2) == 0:
            g |= 1 << (h - 1)
        if x == x0:
            for k, y in enumerate(range(y0, y1 + 1)):
                if val(x0 - 1, y) == 0 and val(x0 - 2, y) + val(x0 - 1, y - 1) + val(x0 - 1, y + 1) == 0:
                    g |= 1 << k
        if x == x1:
            for k, y in enumerate(range(y0, y1 + 1)):
                if val(x1 + 1, y) == 0 and val(x1 + 2, y) + val(x1 + 1, y - 1) + val(x1 + 1, y + 1) == 0:
                    g |= 1 << k
        rim.append(r)
        forbid.append(f)
        force.append(g)
    cols = [c for c in range(1 << h) if c & (c >> 1) == 0]
    columns = [[c for c in cols if c & f == 0 and c & g == g and c <= full]
               for f, g in zip(forbid, force)]
    return _Frame(region, h, left, right, rim, forbid, force, columns)


def _covered(prev: int, cur: int, nxt: int, rim: int, h: int) -> bool:
    full = (1 << h) - 1
    cover = cur | prev | nxt | ((cur << 1) & full) | (cur >> 1) | rim
    return cover == full


def _walk(fr: _Frame):
    """Depth-first enumeration of admissible column sequences."""
    w = fr.width
    out = []
    seq = []

    def rec(x, prev, cur):
        if x == w - 1:
            if _covered(prev, cur, fr.right, fr.rim[x], fr.h):
                out.append(tuple(seq))
            return
        for nxt in fr.columns[x + 1]:
            if nxt & cur == 0 and _covered(prev, cur, nxt, fr.rim[x], fr.h):
                seq.append(nxt)
                rec(x + 1, cur, nxt)
                seq.pop()

    for c in fr.columns[0]:
        seq.append(c)
        rec(0, fr.left, c)
        seq.pop()
    return out


def _to_bits(cols, h: int) -> np.ndarray:
    return np.array([[(c >> k) & 1 for k in range(h)] for c in cols], dtype=np.uint8)


@dataclass
class Conditional:
    """Finite-volume law of the maximal hard-core model given the outside."""

    region: Region
    patterns: list       # bit arrays over the region
    weights: list
    Z: object

    @property
    def probabilities(self) -> list:
        return [w / self.Z for w in self.weights]


def mhc_conditional(region: Region, outside: Configuration, lam) -> Conditional:
    """All MIS completions of `outside` inside `region`, weighted lam^(occupied in region)."""
    if lam <= 0:
        raise ValueError("activity must be positive")
    if max(region.shape) > MAX_EXACT_SIDE:
        raise ValueError("region too large for exact enumeration")
    fr = _frame(outside, region)
    pats = [_to_bits(c, fr.h) for c in _walk(fr)]
    weights = [lam ** int(p.sum()) for p in pats]
    return Conditional(region, pats, weights, sum(weights))


def embed(outside: Configuration, region: Region, bits: np.ndarray) -> Configuration:
    """Configuration on a window covering `region` plus a margin, with `bits` inside region."""
    r = outside.region
    upd = {}
    for (a, b), v in np.ndenumerate(bits):
        upd[(region.x0 + a, region.y0 + b)] = int(v)
    return outside.with_bits(upd)


# parity events

def parity_rectangles(m: int, center=(0, 0)) -> dict:
    """The four rectangles W, E, S, N as inclusive (x0, y0, x1, y1)."""
    cx, cy = center
    return {
        "W": (cx - m - 1, cy - m, cx + m, cy + m),
        "E": (cx - m, cy - m, cx + m + 1, cy + m),
        "S": (cx - m, cy - m - 1, cx + m, cy + m),
        "N": (cx - m, cy - m, cx + m, cy + m + 1),
    }


def _agrees(cfg: Configuration, rect, parity: str) -> bool:
    x0, y0, x1, y1 = rect
    reg = Region.window(x0, y0, x1, y1)
    vals = cfg.values_on(reg)
    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1), indexing="ij")
    ref = BoundaryRule(parity).values(xs, ys)
    return bool(np.array_equal(vals, ref))


def is_m_odd(cfg: Configuration, m: int, center=(0, 0)) -> bool:
    return any(_agrees(cfg, r, "odd") for r in parity_rectangles(m, center).values())


def is_m_even(cfg: Configuration, m: int, center=(0, 0)) -> bool:
    return any(_agrees(cfg, r, "even") for r in parity_rectangles(m, center).values())


def _exact_weight(lam):
    if isinstance(lam, float) and lam.is_integer():
        return int(lam)
    return lam


def parity_weights(n: int, m: int, lam, boundary: str = "even", center=(0, 0)) -> dict:
    """Exact weights of the m-odd and m-even events on U_n (shifted to `center`).

    Column transfer over the box; each DP state carries 8 flags recording
    whether the columns so far still agree with the odd (even) checkerboard
    on each of the four rectangles.
    """
    if m >= n:
        raise ValueError("need m < n so the rectangles lie inside the box")
    if boundary not in ("even", "odd"):
        raise ValueError("boundary must be even or odd")
    lam = _exact_weight(lam)
    cx, cy = center
    region = Region.window(cx - n, cy - n, cx + n, cy + n)
    if max(region.shape) > MAX_EXACT_SIDE:
        raise ValueError("box too large for exact enumeration")
    outside = Configuration.from_rule(region, BoundaryRule(boundary))
    fr = _frame(outside, region)
    h = fr.h
    rects = list(parity_rectangles(m, center).values())
    checks = []   # per column: list of (flag bit, row mask, required bits)
    for k, x in enumerate(range(region.x0, region.x1 + 1)):
        col = []
        for q, (a0, b0, a1, b1) in enumerate(rects):
            if not a0 <= x <= a1:
                continue
            rows = _mask([1 if b0 <= y <= b1 else 0 for y in range(region.y0, region.y1 + 1)])
            odd = _mask([(x + y) % 2 for y in range(region.y0, region.y1 + 1)]) & rows
            even = rows & ~odd
            col.append((q, rows, odd))
            col.append((q + 4, rows, even))
        checks.append(col)

    def flags_after(flags, k, c):
        for bit, rows, want in checks[k]:
            if flags >> bit & 1 and c & rows != want:
                flags &= ~(1 << bit)
        return flags

    pop = [bin(c).count("1") for c in range(1 << h)]
    dp = {}
    for c in fr.columns[0]:
        key = (fr.left, c, flags_after(0xFF, 0, c))
        dp[key] = dp.get(key, 0) + lam ** pop[c]
    for k in range(fr.width - 1):
        nd = {}
        rim = fr.rim[k]
        for (prev, cur, flags), wgt in dp.items():
            for nxt in fr.columns[k + 1]:
                if nxt & cur or not _covered(prev, cur, nxt, rim, h):
                    continue
                key = (cur, nxt, flags_after(flags, k + 1, nxt))
                nd[key] = nd.get(key, 0) + wgt * lam ** pop[nxt]
        dp = nd
    total = odd = even = 0
    last = fr.width - 1
    for (prev, cur, flags), wgt in dp.items():
        if not _covered(prev, cur, fr.right, fr.rim[last], h):
            continue
        total += wgt
        if flags & 0x0F:
            odd += wgt
        if flags & 0xF0:
            even += wgt
    return {"total": total, "odd": odd, "even": even}


def parity_probability(n: int, m: int, lam, boundary: str = "even", method: str = "exact",
                       center=(0, 0), **mcmc) -> dict:
    """P(m-odd | m-odd or m-even) under the boundary condition outside U_n."""
    if method == "exact":
        w = parity_weights(n, m, lam, boundary, center)
        hom = w["odd"] + w["even"]
        if hom == 0:
            raise ValueError("the homogeneous event has zero mass")
        p = Fraction(w["odd"], hom) if isinstance(hom, int) else w["odd"] / hom
        return {"value": float(p), "exact": p, "method": "exact", **w}
    if method == "mcmc":
        return parity_mcmc(n, m, lam, boundary, **mcmc)
    raise ValueError(f"unknown method {method!r}")


def block_heat_bath(cfg: Configuration, lam, rng, block: int = 3, sweeps: int = 100):
    """Resample random block x block windows from their exact conditional law.

    Each update is reversible for the maximal hard-core measure on the
    window of `cfg` (outside values stay fixed).  Yields the configuration
    after every sweep.
    """
    r = cfg.region
    nblocks = max(1, (r.width * r.height) // (block * block))
    for _ in range(sweeps):
        for _ in range(nblocks):
            x = int(rng.integers(r.x0, r.x1 - block + 2))
            y = int(rng.integers(r.y0, r.y1 - block + 2))
            reg = Region.window(x, y, x + block - 1, y + block - 1)
            cond = mhc_conditional(reg, cfg, lam)
            p = np.array([float(v) for v in cond.probabilities])
            k = int(rng.choice(len(p), p=p / p.sum()))
            cfg = embed(cfg, reg, cond.patterns[k])
        yield cfg


def parity_mcmc(n: int, m: int, lam, boundary: str = "even", sweeps: int = 2000,
                burn: int = 200, seed: int = 0, block: int = 3) -> dict:
    """Empirical estimate of the conditional parity probability by block heat-bath."""
    region = Region.window(-n, -n, n, n)
    cfg = Configuration.from_rule(region, BoundaryRule(boundary))
    rng = np.random.Generator(np.random.Philox(seed))
    odd = hom = 0
    for t, c in enumerate(block_heat_bath(cfg, lam, rng, block, sweeps)):
        if t < burn:
            continue
        o, e = is_m_odd(c, m), is_m_even(c, m)
        odd += o
        hom += o or e
    if hom == 0:
        raise ValueError("no homogeneous samples")
    return {"value": odd / hom, "method": "empirical", "samples": sweeps - burn, "homogeneous": hom}


def check_support(cond: Conditional, outside: Configuration) -> bool:
    """Every pattern completes the outside to an MIS on the enlarged window."""
    reg = cond.region
    big = Region.window(reg.x0 - 3, reg.y0 - 3, reg.x1 + 3, reg.y1 + 3)
    for p in cond.patterns:
        vals = outside.values_on(big).copy()
        vals[3:3 + reg.width, 3:3 + reg.height] = p
        cfg = Configuration(big, vals, outside.boundary)
        inner = Region.window(reg.x0 - 1, reg.y0 - 1, reg.x1 + 1, reg.y1 + 1)
        if not is_maximal(cfg, inner):
            return False
    return True
