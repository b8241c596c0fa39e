"""Configurations on Z^2 windows and tori, the recovery rule and MIS predicates.

Sites are integer pairs (x, y).  A window stores bits[x - x0, y - y0];
anything outside the window is read from a boundary rule.  On a torus
every coordinate wraps and there is no outside.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# unit steps, listed N, E, S, W (N = +y, E = +x)
STEPS = ((0, 1), (1, 0), (0, -1), (-1, 0))
CROSS = ((0, 0),) + STEPS


@dataclass(frozen=True)
class Region:
    """Rectangle x0..x1 by y0..y1 (inclusive), either a window or a torus."""

    kind: str
    x0: int
    x1: int
    y0: int
    y1: int

    def __post_init__(self):
        if self.kind not in ("window", "torus"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError("empty region")
        if self.kind == "torus" and (self.x0, self.y0) != (0, 0):
            raise ValueError("torus regions start at the origin")
        if self.kind == "torus" and min(self.width, self.height) < 2:
            raise ValueError("torus dimensions must be at least 2")

    @classmethod
    def window(cls, x0: int, y0: int, x1: int, y1: int) -> "Region":
        return cls("window", x0, x1, y0, y1)

    @classmethod
    def torus(cls, width: int, height: int) -> "Region":
        return cls("torus", 0, width - 1, 0, height - 1)

    @classmethod
    def box(cls, n: int) -> "Region":
        """The box U_n = {-n..n}^2."""
        return cls.window(-n, -n, n, n)

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width, self.height)

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    def __len__(self) -> int:
        return self.width * self.height

    def contains(self, site) -> bool:
        x, y = site
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def wrap(self, site):
        if not self.is_torus:
            return tuple(site)
        return (site[0] % self.width, site[1] % self.height)

    def sites(self) -> list:
        return [(x, y) for x in range(self.x0, self.x1 + 1) for y in range(self.y0, self.y1 + 1)]

    def neighbors(self, site) -> list:
        x, y = site
        return [self.wrap((x + dx, y + dy)) for dx, dy in STEPS]

    def plus_sites(self) -> list:
        """Lambda plus its outer boundary; on a torus just the torus."""
        if self.is_torus:
            return self.sites()
        out = self.sites()
        for x in range(self.x0, self.x1 + 1):
            out += [(x, self.y0 - 1), (x, self.y1 + 1)]
        for y in range(self.y0, self.y1 + 1):
            out += [(self.x0 - 1, y), (self.x1 + 1, y)]
        return out


@dataclass(frozen=True)
class BoundaryRule:
    """Values outside a window: even/odd checkerboard, all zero, or a periodic tile.

    For `periodic`, pattern[a, b] is the value at every site with
    x = a (mod px), y = b (mod py).
    """

    kind: str = "even"
    pattern: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("even", "odd", "zero", "periodic"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "periodic":
            if self.pattern is None or len(self.pattern) == 0 or len(self.pattern[0]) == 0:
                raise ValueError("periodic boundary needs a nonempty pattern")
            if len({len(r) for r in self.pattern}) != 1:
                raise ValueError("periodic pattern rows must have equal length")

    @classmethod
    def periodic(cls, pattern) -> "BoundaryRule":
        arr = np.asarray(pattern, dtype=np.uint8)
        return cls("periodic", tuple(tuple(int(v) for v in row) for row in arr))

    def values(self, xs, ys) -> np.ndarray:
        """Vectorized lookup over broadcastable coordinate arrays."""
        xs, ys = np.broadcast_arrays(np.asarray(xs), np.asarray(ys))
        if self.kind == "even":
            return ((xs + ys) % 2 == 0).astype(np.uint8)
        if self.kind == "odd":
            return ((xs + ys) % 2 == 1).astype(np.uint8)
        if self.kind == "zero":
            return np.zeros(xs.shape, dtype=np.uint8)
        pat = np.asarray(self.pattern, dtype=np.uint8)
        return pat[xs % pat.shape[0], ys % pat.shape[1]]

    def value(self, site) -> int:
        return int(self.values(site[0], site[1]))


class Configuration:
    """A bit window plus a boundary rule; query() is defined at every site."""

    def __init__(self, region: Region, bits=None, boundary: BoundaryRule | None = None):
        self.region = region
        if bits is None:
            bits = np.zeros(region.shape, dtype=np.uint8)
        bits = np.array(bits, dtype=np.uint8)
        if bits.shape != region.shape:
            raise ValueError(f"bits shape {bits.shape} does not match region {region.shape}")
        if np.any(bits > 1):
            raise ValueError("bits must be 0/1")
        bits.setflags(write=False)
        self.bits = bits
        self.boundary = boundary if boundary is not None else BoundaryRule("zero")

    # constructors
    @classmethod
    def from_rule(cls, region: Region, rule: BoundaryRule, boundary: BoundaryRule | None = None):
        """Fill the window with `rule` (e.g. the checkerboards)."""
        xs, ys = np.meshgrid(np.arange(region.x0, region.x1 + 1),
                             np.arange(region.y0, region.y1 + 1), indexing="ij")
        return cls(region, rule.values(xs, ys), boundary if boundary is not None else rule)

    @classmethod
    def from_sites(cls, region: Region, sites: Iterable, boundary: BoundaryRule | None = None):
        bits = np.zeros(region.shape, dtype=np.uint8)
        for x, y in sites:
            x, y = region.wrap((x, y))
            bits[x - region.x0, y - region.y0] = 1
        return cls(region, bits, boundary)

    def __eq__(self, other):
        return (isinstance(other, Configuration) and self.region == other.region
                and self.boundary == other.boundary and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.region, self.boundary, self.bits.tobytes()))

    def __repr__(self):
        return f"Configuration({self.region}, ones={int(self.bits.sum())}, boundary={self.boundary.kind})"

    def key(self) -> bytes:
        return self.bits.tobytes()

    def query(self, site) -> int:
        x, y = self.region.wrap(site)
        r = self.region
        if r.contains((x, y)):
            return int(self.bits[x - r.x0, y - r.y0])
        return self.boundary.value((x, y))

    def support(self) -> set:
        r = self.region
        xs, ys = np.nonzero(self.bits)
        return {(int(x) + r.x0, int(y) + r.y0) for x, y in zip(xs, ys)}

    def with_bits(self, updates: dict) -> "Configuration":
        """Copy with some in-window sites overwritten."""
        bits = self.bits.copy()
        r = self.region
        for site, v in updates.items():
            x, y = r.wrap(site)
            if not r.contains((x, y)):
                raise ValueError(f"site {site} is outside the window")
            bits[x - r.x0, y - r.y0] = v
        return Configuration(r, bits, self.boundary)

    def padded(self, pad: int = 1) -> np.ndarray:
        """Window values extended by `pad` sites on every side (wrapping on a torus)."""
        r = self.region
        if r.is_torus:
            return np.pad(self.bits, pad, mode="wrap")
        xs, ys = np.meshgrid(np.arange(r.x0 - pad, r.x1 + pad + 1),
                             np.arange(r.y0 - pad, r.y1 + pad + 1), indexing="ij")
        out = self.boundary.values(xs, ys)
        out[pad:pad + r.width, pad:pad + r.height] = self.bits
        return out

    def values_on(self, region: Region) -> np.ndarray:
        """Values over an arbitrary rectangle (window coordinates)."""
        xs, ys = np.meshgrid(np.arange(region.x0, region.x1 + 1),
                             np.arange(region.y0, region.y1 + 1), indexing="ij")
        r = self.region
        if r.is_torus:
            return self.bits[xs % r.width, ys % r.height]
        out = self.boundary.values(xs, ys)
        inside = (xs >= r.x0) & (xs <= r.x1) & (ys >= r.y0) & (ys <= r.y1)
        out[inside] = self.bits[xs[inside] - r.x0, ys[inside] - r.y0]
        return out


@dataclass(frozen=True)
class ErrorReport:
    sites: frozenset
    count: int


def neighbor_count(arr: np.ndarray) -> np.ndarray:
    """Number of occupied 4-neighbors for the interior of a padded array."""
    return arr[2:, 1:-1] + arr[:-2, 1:-1] + arr[1:-1, 2:] + arr[1:-1, :-2]


def error_mask(arr: np.ndarray) -> np.ndarray:
    """Recovery-rule violations on the interior of a padded 0/1 array."""
    arr = arr.astype(np.int16)
    c = arr[1:-1, 1:-1]
    k = neighbor_count(arr)
    return ((c == 1) & (k > 0)) | ((c == 0) & (k == 0))


def recovery_ok(cfg: Configuration, i) -> bool:
    """True iff site i is 1 exactly when all four neighbors are 0."""
    x, y = i
    nb = sum(cfg.query((x + dx, y + dy)) for dx, dy in STEPS)
    return (nb == 0) == (cfg.query(i) == 1)


def _rect_errors(cfg: Configuration, rect: Region) -> set:
    arr = cfg.values_on(Region.window(rect.x0 - 1, rect.y0 - 1, rect.x1 + 1, rect.y1 + 1))
    xs, ys = np.nonzero(error_mask(arr))
    return {cfg.region.wrap((int(a) + rect.x0, int(b) + rect.y0)) for a, b in zip(xs, ys)}


def plus_errors(cfg: Configuration, region: Region) -> set:
    """Errors on region plus its outer boundary (the region itself on a torus)."""
    if region.is_torus:
        return _rect_errors(cfg, region)
    big = Region.window(region.x0 - 1, region.y0 - 1, region.x1 + 1, region.y1 + 1)
    corners = {(big.x0, big.y0), (big.x0, big.y1), (big.x1, big.y0), (big.x1, big.y1)}
    return {s for s in _rect_errors(cfg, big) if s not in corners}


def error_set(cfg: Configuration, region=None) -> ErrorReport:
    """Sites of `region` (a Region or an iterable of sites) where the rule fails.

    With region=None the check covers the window plus its outer boundary.
    """
    if region is None:
        bad = plus_errors(cfg, cfg.region)
    elif isinstance(region, Region):
        bad = _rect_errors(cfg, region)
    else:
        bad = {cfg.region.wrap(s) for s in region if not recovery_ok(cfg, s)}
    return ErrorReport(frozenset(bad), len(bad))


def plus_size(region: Region) -> int:
    return len(region.plus_sites())


def hamiltonian(cfg: Configuration, region: Region | None = None, beta: float = 1.0) -> float:
    """-beta |Lambda+| + 2 beta (errors in Lambda+)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    region = region if region is not None else cfg.region
    return -beta * plus_size(region) + 2.0 * beta * len(plus_errors(cfg, region))


def is_independent(cfg: Configuration, region: Region | None = None) -> bool:
    """No edge touching `region` joins two occupied sites."""
    region = region if region is not None else cfg.region
    if region.is_torus:
        b = cfg.bits
        return not (np.any(b & np.roll(b, 1, 0)) or np.any(b & np.roll(b, 1, 1)))
    arr = cfg.values_on(Region.window(region.x0 - 1, region.y0 - 1, region.x1 + 1, region.y1 + 1))
    c = arr[1:-1, 1:-1]
    return not np.any(c & (arr[2:, 1:-1] | arr[:-2, 1:-1] | arr[1:-1, 2:] | arr[1:-1, :-2]))


def is_maximal(cfg: Configuration, region: Region | None = None) -> bool:
    """Independent with no recovery error inside `region` (an MIS there)."""
    region = region if region is not None else cfg.region
    return is_independent(cfg, region) and error_set(cfg, region).count == 0


def complete_to_mis(cfg: Configuration, region: Region | None = None,
                    order: Sequence | None = None) -> Configuration:
    """Greedy completion: visit sites in `order` and occupy every free site.

    `order` defaults to row-major over `region`; it must list sites of the window.
    """
    region = region if region is not None else cfg.region
    if not is_independent(cfg, region):
        raise ValueError("input is not independent on the region")
    order = list(order) if order is not None else region.sites()
    r = cfg.region
    if r.is_torus:
        pad = 0
        bits = cfg.bits.astype(np.uint8).copy()
    else:
        # keep a padded working copy so neighbor lookups are plain indexing
        x0, y0 = min(s[0] for s in order) - 1, min(s[1] for s in order) - 1
        x1, y1 = max(s[0] for s in order) + 1, max(s[1] for s in order) + 1
        work = cfg.values_on(Region.window(x0, y0, x1, y1)).copy()
    for s in order:
        if r.is_torus:
            x, y = r.wrap(s)
            if bits[x, y] or any(bits[(x + dx) % r.width, (y + dy) % r.height] for dx, dy in STEPS):
                continue
            bits[x, y] = 1
        else:
            if not r.contains(s):
                raise ValueError(f"site {s} is outside the window")
            a, b = s[0] - x0, s[1] - y0
            if work[a, b] or work[a + 1, b] or work[a - 1, b] or work[a, b + 1] or work[a, b - 1]:
                continue
            work[a, b] = 1
    if not r.is_torus:
        bits = cfg.bits.copy()
        for s in order:
            bits[s[0] - r.x0, s[1] - r.y0] = work[s[0] - x0, s[1] - y0]
    return Configuration(r, bits, cfg.boundary)


def repair_map(cfg: Configuration, i) -> Configuration:
    """Local repair of an error at i that never creates new errors.

    A 0 in error is occupied.  A 1 in error is cleared, then every
    erroneous 0 in the cross around it is occupied (N, E, S, W order).
    """
    i = cfg.region.wrap(i)
    if not cfg.region.contains(i):
        raise ValueError("site must lie in the window")
    if recovery_ok(cfg, i):
        raise ValueError(f"site {i} is not in error")
    if cfg.query(i) == 0:
        return cfg.with_bits({i: 1})
    out = cfg.with_bits({i: 0})
    for dx, dy in STEPS:
        j = cfg.region.wrap((i[0] + dx, i[1] + dy))
        if not cfg.region.contains(j):
            continue
        if out.query(j) == 0 and not recovery_ok(out, j):
            out = out.with_bits({j: 1})
    return out


def cross_energy(center_bit: int, nbr_bits: Sequence[int], beta: float) -> float:
    """Cross potential: -beta when the cross obeys the rule, +beta otherwise."""
    ok = (sum(nbr_bits) == 0) == (center_bit == 1)
    return -beta if ok else beta


def one_vertex_prob(cfg: Configuration, i, beta: float) -> tuple[float, float]:
    """Conditional law of site i given everything else, from the five crosses holding i."""
    x, y = i
    q = cfg.query
    energy = []
    for v in (0, 1):
        e = cross_energy(v, [q((x + dx, y + dy)) for dx, dy in STEPS], beta)
        for dx, dy in STEPS:
            jx, jy = x + dx, y + dy
            nb = [v if (jx + ex, jy + ey) == (x, y) else q((jx + ex, jy + ey)) for ex, ey in STEPS]
            e += cross_energy(q((jx, jy)), nb, beta)
        energy.append(e)
    # p_v proportional to exp(-E_v)
    d = energy[1] - energy[0]
    p0 = 1.0 / (1.0 + np.exp(-d)) if d >= 0 else np.exp(d) / (1.0 + np.exp(d))
    return float(p0), float(1.0 - p0)


def checkerboard(region: Region, parity: str = "even", boundary: BoundaryRule | None = None) -> Configuration:
    """omega^e (ones where x+y is even) or omega^o restricted to a region."""
    rule = BoundaryRule(parity)
    return Configuration.from_rule(region, rule, boundary if boundary is not None else rule)
