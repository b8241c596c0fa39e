"""Periodic ground states, Delaunay triangulations of MIS on tori, the
triangle feasibility table, 5x5 block labels and the Peierls count check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import STEPS, Configuration, Region, complete_to_mis, is_independent, is_maximal

RHO_SQ = Fraction(5, 2)  # squared covering radius bound
REGULAR_SIDES = (5, 5, 10)
BLOCK = 5


# periodic ground states

@dataclass(frozen=True)
class PeriodicState:
    """A periodic configuration given by its pattern on a period box (px, py)."""

    name: str
    generators: tuple
    pattern: tuple  # occupied residues (x mod px, y mod py)
    period: tuple

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.pattern), self.period[0] * self.period[1])

    def values(self, xs, ys) -> np.ndarray:
        px, py = self.period
        tile = np.zeros(self.period, dtype=np.uint8)
        for a, b in self.pattern:
            tile[a, b] = 1
        return tile[np.asarray(xs) % px, np.asarray(ys) % py]

    def on(self, region: Region) -> Configuration:
        xs, ys = np.meshgrid(np.arange(region.x0, region.x1 + 1),
                             np.arange(region.y0, region.y1 + 1), indexing="ij")
        return Configuration(region, self.values(xs, ys))


def _sparse_state(sign: int, c: int) -> PeriodicState:
    # L1 = <(2,1),(-1,2)> is {x - 2y = 0 mod 5}; L2 = <(1,2),(-2,1)> is {x + 2y = 0 mod 5}
    pattern = tuple((a, b) for a in range(5) for b in range(5) if (a + sign * 2 * b - c) % 5 == 0)
    gens = ((2, 1), (-1, 2)) if sign < 0 else ((1, 2), (-2, 1))
    name = f"L{1 if sign < 0 else 2}+{c}"
    return PeriodicState(name, gens, pattern, (5, 5))


def sparse_ground_states() -> list[PeriodicState]:
    return [_sparse_state(sign, c) for sign in (-1, 1) for c in range(5)]


def dense_ground_states() -> list[PeriodicState]:
    return [PeriodicState("even", ((1, 1), (1, -1)), ((0, 0), (1, 1)), (2, 2)),
            PeriodicState("odd", ((1, 1), (1, -1)), ((1, 0), (0, 1)), (2, 2))]


def enumerate_ground_states() -> dict:
    """The 2 densest and the 10 sparsest periodic MIS."""
    return {"dense": dense_ground_states(), "sparse": sparse_ground_states()}


def density(state: PeriodicState) -> Fraction:
    return state.density


def torus_mis(width: int, height: int, size: int | None = None) -> list[np.ndarray]:
    """All MIS of the torus (optionally only those of a given size), by row enumeration."""
    rows = [r for r in range(1 << width)
            if r & ((r << 1) | (r >> (width - 1))) & ((1 << width) - 1) == 0]
    full = (1 << width) - 1

    def horiz(r):
        return ((r << 1) | (r >> 1) | (r >> (width - 1)) | (r << (width - 1))) & full

    out = []
    pops = {r: bin(r).count("1") for r in rows}

    def rec(stack, total):
        if size is not None and total > size:
            return
        if len(stack) == height:
            # rows 0 and height-1 are adjacent; every site needs itself or a neighbor occupied
            for k in range(height):
                r = stack[k]
                cover = r | horiz(r) | stack[k - 1] | stack[(k + 1) % height]
                if cover != full:
                    return
            if stack[0] & stack[-1]:
                return
            if size is None or total == size:
                bits = np.array([[(stack[y] >> x) & 1 for y in range(height)] for x in range(width)],
                                dtype=np.uint8)
                out.append(bits)
            return
        for r in rows:
            if stack and r & stack[-1]:
                continue
            # the row two above is now fully surrounded, check it is covered
            if len(stack) >= 2:
                k = len(stack) - 1
                cover = stack[k] | horiz(stack[k]) | stack[k - 1] | r
                if cover != full:
                    continue
            rec(stack + [r], total + pops[r])

    rec([], 0)
    return out


# Delaunay triangulation on a torus

@dataclass(frozen=True)
class Triangle:
    """Vertices as lifted integer points; the first lies in the fundamental domain."""

    vertices: tuple

    @property
    def sides_sq(self) -> tuple:
        (a, b, c) = self.vertices
        d = lambda p, q: (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        return tuple(sorted((d(a, b), d(b, c), d(c, a))))

    @property
    def area(self) -> Fraction:
        (x1, y1), (x2, y2), (x3, y3) = self.vertices
        return Fraction(abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)), 2)

    @property
    def circumradius_sq(self) -> Fraction:
        s = self.sides_sq
        return Fraction(s[0] * s[1] * s[2], 16) / (self.area ** 2)

    @property
    def regular(self) -> bool:
        return self.sides_sq == REGULAR_SIDES


@dataclass
class Triangulation:
    triangles: list
    occupied: list
    torus: Region
    cells: int
    cocircular_cells: int

    def total_area(self) -> Fraction:
        return sum((t.area for t in self.triangles), Fraction(0))

    def covering_radius_sq(self) -> Fraction:
        return max(t.circumradius_sq for t in self.triangles)


def circumcenter(p, q, r) -> tuple:
    (x1, y1), (x2, y2), (x3, y3) = p, q, r
    d = 2 * (x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))
    if d == 0:
        raise ValueError("collinear points")
    s1, s2, s3 = x1 * x1 + y1 * y1, x2 * x2 + y2 * y2, x3 * x3 + y3 * y3
    return (Fraction(s1 * (y2 - y3) + s2 * (y3 - y1) + s3 * (y1 - y2), d),
            Fraction(s1 * (x3 - x2) + s2 * (x1 - x3) + s3 * (x2 - x1), d))


def _dist_sq(p, c) -> Fraction:
    return (p[0] - c[0]) ** 2 + (p[1] - c[1]) ** 2


def delaunay(occupied, torus: Region) -> Triangulation:
    """Delaunay triangulation of an MIS on a torus, via 3x3 lifting and exact arithmetic.

    Empty circles are grouped by their center; a cell with k cocircular
    vertices is fanned from its lexicographically smallest vertex.
    """
    if not torus.is_torus:
        raise ValueError("delaunay needs a torus region")
    W, H = torus.shape
    if min(W, H) < 4:
        raise ValueError("torus dimensions must be at least 4")
    cfg = occupied if isinstance(occupied, Configuration) else Configuration.from_sites(torus, occupied)
    if not is_maximal(cfg, torus):
        raise ValueError("occupied set is not an MIS on the torus")
    base = sorted(cfg.support())
    lifted = [(x + a * W, y + b * H) for x, y in base for a in (-1, 0, 1) for b in (-1, 0, 1)]
    # every empty circle of an MIS has radius^2 <= 5/2, so partners lie within distance^2 10
    reach = 10
    near = {p: [q for q in lifted if q != p and _dist_sq(q, p) <= reach] for p in base}
    cells = {}
    for a in base:
        nb = near[a]
        for b, c in itertools.combinations(nb, 2):
            try:
                ctr = circumcenter(a, b, c)
            except ValueError:
                continue
            r2 = _dist_sq(a, ctr)
            if r2 > RHO_SQ:
                continue
            key = (ctr[0] % W, ctr[1] % H)
            if key in cells:
                continue
            if any(_dist_sq(q, ctr) < r2 for q in nb):
                continue
            # all lifted points on the circle form the cell
            on = [q for q in [a] + nb if _dist_sq(q, ctr) == r2]
            cells[key] = (ctr, on)
    triangles = []
    cocircular = 0
    for ctr, on in cells.values():
        ordered = sorted(on, key=lambda q: _angle_key(q, ctr))
        k = ordered.index(min(ordered))
        ordered = ordered[k:] + ordered[:k]
        if len(ordered) > 3:
            cocircular += 1
        for i in range(1, len(ordered) - 1):
            triangles.append(_canonical((ordered[0], ordered[i], ordered[i + 1]), W, H))
    tri = Triangulation(triangles, base, torus, len(cells), cocircular)
    if tri.total_area() != W * H:
        raise AssertionError(f"triangle areas sum to {tri.total_area()}, expected {W * H}")
    return tri


def _angle_key(q, ctr):
    """Counterclockwise angle about ctr; cell vertices are lattice points, far apart in angle."""
    return float(np.arctan2(float(q[1] - ctr[1]), float(q[0] - ctr[0])))


def _canonical(verts, W, H) -> Triangle:
    """Shift the triangle so its smallest vertex lies in the fundamental domain."""
    v = min(verts)
    sx, sy = (v[0] % W) - v[0], (v[1] % H) - v[1]
    moved = sorted((p[0] + sx, p[1] + sy) for p in verts)
    return Triangle(tuple(moved))


def empty_circumcircle(tri: Triangulation) -> bool:
    """No occupied site (any lift) lies strictly inside any triangle's circumcircle."""
    W, H = tri.torus.shape
    pts = [(x + a * W, y + b * H) for x, y in tri.occupied for a in (-2, -1, 0, 1, 2) for b in (-2, -1, 0, 1, 2)]
    arr = np.array(pts, dtype=float)
    for t in tri.triangles:
        ctr = circumcenter(*t.vertices)
        r2 = t.circumradius_sq
        cand = np.nonzero((arr[:, 0] - float(ctr[0])) ** 2 + (arr[:, 1] - float(ctr[1])) ** 2 < float(r2) + 1)[0]
        if any(_dist_sq(pts[k], ctr) < r2 for k in cand):
            return False
    return True


# triangle feasibility table

@dataclass(frozen=True)
class TableRow:
    pair: tuple       # second vertex (x, y); first vertex is the origin
    third: tuple      # third vertex (u, v)
    area: Fraction
    ratio_sq: Fraction  # circumradius^2 / (5/2)
    regular: bool
    feasible: bool    # circumradius <= sqrt(5/2)
    realizable: bool  # the triangle can be a Delaunay triangle of some MIS

    @property
    def ratio(self) -> float:
        return float(self.ratio_sq) ** 0.5


def realizable(verts) -> bool:
    """Some MIS occupies the three vertices and leaves the open circumdisk empty.

    Sites strictly inside the circle must be 0 and covered by an occupied
    neighbor outside it; any independent partial assignment then extends
    greedily to an MIS of the plane.
    """
    ones = set(map(tuple, verts))
    ctr = circumcenter(*verts)
    r2 = _dist_sq(verts[0], ctr)
    cx, cy = int(ctr[0]), int(ctr[1])
    zeros = {(a, b) for a in range(cx - 4, cx + 5) for b in range(cy - 4, cy + 5)
             if _dist_sq((a, b), ctr) < r2}
    if ones & zeros:
        return False

    def nbrs(p):
        return [(p[0] + dx, p[1] + dy) for dx, dy in STEPS]

    if any(q in ones for p in ones for q in nbrs(p)):
        return False
    need = [z for z in zeros if not any(q in ones for q in nbrs(z))]
    cand = sorted({q for z in need for q in nbrs(z)} - zeros - ones)
    cand = [c for c in cand if not any(q in ones for q in nbrs(c))]
    for k in range(len(cand) + 1):
        for pick in itertools.combinations(cand, k):
            s = set(pick)
            if any(q in s for c in s for q in nbrs(c)):
                continue
            if all(any(q in s for q in nbrs(z)) for z in need):
                return True
    return False


def feasible_triangle_table(max_l1: int = 5) -> list[TableRow]:
    """Every triangle with a vertex at the origin and pairwise l1 distances <= max_l1."""
    rows = []
    rng = range(-max_l1, max_l1 + 1)
    l1 = lambda a, b: abs(a) + abs(b)
    for x, y in itertools.product(rng, rng):
        if not 0 < l1(x, y) <= max_l1:
            continue
        for u, v in itertools.product(rng, rng):
            if l1(u, v) > max_l1 or l1(u - x, v - y) > max_l1 or x * v - y * u == 0:
                continue
            t = Triangle(((0, 0), (x, y), (u, v)))
            ratio_sq = t.circumradius_sq / RHO_SQ
            feasible = ratio_sq <= 1
            rows.append(TableRow((x, y), (u, v), t.area, ratio_sq, t.regular, feasible,
                                 feasible and realizable(t.vertices)))
    return rows


def max_defective_area(rows=None) -> Fraction:
    """Largest area among feasible, realizable, defective triangles."""
    rows = feasible_triangle_table() if rows is None else rows
    return max(r.area for r in rows if r.realizable and not r.regular)


# block labels and the Peierls check

@dataclass
class BlockLabeling:
    """labels[i, j] = index of the pattern the block is correct for, or -1."""

    labels: np.ndarray
    matches: np.ndarray
    components: list
    patterns: list
    offset: tuple

    @property
    def incorrect(self) -> int:
        return int(np.sum(self.labels < 0))


def _block_matches(cfg: Configuration, patterns, offset) -> np.ndarray:
    r = cfg.region
    if r.width % BLOCK or r.height % BLOCK:
        raise ValueError("region dimensions must be multiples of 5")
    ox, oy = offset
    view = Region.window(r.x0 + ox, r.y0 + oy, r.x1 + ox, r.y1 + oy)
    vals = cfg.values_on(view)
    xs, ys = np.meshgrid(np.arange(view.x0, view.x1 + 1), np.arange(view.y0, view.y1 + 1), indexing="ij")
    bw, bh = r.width // BLOCK, r.height // BLOCK
    out = np.full((bw, bh), -1, dtype=int)
    for k, q in enumerate(patterns):
        same = (vals == q.values(xs, ys)).reshape(bw, BLOCK, bh, BLOCK).all(axis=(1, 3))
        out[same & (out < 0)] = k
    return out


def block_labeling(cfg: Configuration, patterns=None, offset=(0, 0)) -> BlockLabeling:
    """Q-correct blocks match Q together with their 8 neighboring blocks.

    Incorrect blocks are grouped into components by 8-connectivity (cyclic
    on a torus).
    """
    patterns = sparse_ground_states() if patterns is None else list(patterns)
    match = _block_matches(cfg, patterns, offset)
    bw, bh = match.shape
    torus = cfg.region.is_torus
    labels = match.copy()
    for i in range(bw):
        for j in range(bh):
            if match[i, j] < 0:
                continue
            for di, dj in itertools.product((-1, 0, 1), repeat=2):
                a, b = i + di, j + dj
                if torus:
                    a, b = a % bw, b % bh
                elif not (0 <= a < bw and 0 <= b < bh):
                    continue
                if match[a, b] != match[i, j]:
                    labels[i, j] = -1
                    break
    bad = np.argwhere(labels < 0)
    index = {tuple(p): k for k, p in enumerate(bad.tolist())}
    ri, ci = [], []
    for k, (i, j) in enumerate(bad.tolist()):
        for di, dj in itertools.product((-1, 0, 1), repeat=2):
            a, b = i + di, j + dj
            if torus:
                a, b = a % bw, b % bh
            q = index.get((a, b))
            if q is not None:
                ri.append(k)
                ci.append(q)
    comps = []
    if len(bad):
        g = coo_matrix((np.ones(len(ri)), (ri, ci)), shape=(len(bad), len(bad)))
        n, lab = connected_components(g, directed=False)
        comps = [sorted(tuple(p) for p in bad[lab == c].tolist()) for c in range(n)]
    return BlockLabeling(labels, match, comps, patterns, tuple(offset))


class PreconditionError(ValueError):
    pass


def peierls_check(omega: Configuration, eta: PeriodicState, torus: Region | None = None,
                  offset=(0, 0)) -> list[dict]:
    """Occupation excess of omega over eta on every contour component of incorrect blocks."""
    torus = omega.region if torus is None else torus
    if not is_maximal(omega, torus):
        raise PreconditionError("omega is not an MIS on the torus")
    sparse = sparse_ground_states()
    if eta not in sparse:
        raise PreconditionError("reference state must be a sparse ground state")
    lab = block_labeling(omega, sparse, offset)
    ref = sparse.index(eta)
    correct = lab.labels[lab.labels >= 0]
    if np.any(correct != ref):
        raise PreconditionError("exterior of omega does not match the reference ground state")
    ox, oy = offset
    view = Region.window(torus.x0 + ox, torus.y0 + oy, torus.x1 + ox, torus.y1 + oy)
    w = omega.values_on(view).astype(int)
    e = eta.on(view).bits.astype(int)
    bw, bh = lab.labels.shape
    wb = w.reshape(bw, BLOCK, bh, BLOCK).sum(axis=(1, 3))
    eb = e.reshape(bw, BLOCK, bh, BLOCK).sum(axis=(1, 3))
    out = []
    for comp in lab.components:
        idx = tuple(np.array(comp).T)
        lhs = int(wb[idx].sum() - eb[idx].sum())
        rhs = max(1.0, len(comp) / 270)
        out.append({"blocks": len(comp), "lhs": lhs, "rhs": rhs, "pass": lhs >= rhs})
    return out


def perturb(eta: PeriodicState, torus: Region, rng, k_max: int = 3) -> Configuration:
    """Relocate or delete up to k_max occupied sites of eta, then complete greedily at random."""
    cfg = eta.on(torus)
    sites = sorted(cfg.support())
    k = int(rng.integers(1, k_max + 1))
    picks = [sites[i] for i in rng.choice(len(sites), size=k, replace=False)]
    bits = cfg.bits.copy()
    W, H = torus.shape
    for x, y in picks:
        bits[x, y] = 0
    for x, y in picks:
        if rng.random() < 0.5:
            dx, dy = [(dx, dy) for dx in range(-2, 3) for dy in range(-2, 3)
                      if 0 < abs(dx) + abs(dy) <= 2][rng.integers(12)]
            a, b = (x + dx) % W, (y + dy) % H
            trial = bits.copy()
            trial[a, b] = 1
            if is_independent(Configuration(torus, trial), torus):
                bits = trial
    start = Configuration(torus, bits)
    order = [torus.sites()[i] for i in rng.permutation(len(torus))]
    return complete_to_mis(start, torus, order)


def peierls_campaign(samples: int = 200, seed: int = 0, width: int = 30, height: int = 30) -> dict:
    """Perturbations of L1 on a torus; every contour must satisfy the Peierls inequality."""
    torus = Region.torus(width, height)
    eta = sparse_ground_states()[0]
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(samples):
        omega = perturb(eta, torus, rng)
        comps = peierls_check(omega, eta, torus)
        results.append({"components": len(comps),
                        "min_margin": min((c["lhs"] - c["rhs"] for c in comps), default=None),
                        "pass": all(c["pass"] for c in comps)})
    passed = sum(r["pass"] for r in results)
    return {"samples": samples, "passed": passed, "pass_rate": passed / samples,
            "with_contour": sum(r["components"] > 0 for r in results), "results": results}
