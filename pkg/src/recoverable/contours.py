"""Contours around the odd-agreement component and the shift map that removes them.

All work happens on a square working window U_N (N = n + 2 by default)
that strictly contains the box U_n where configurations may differ from
the even checkerboard.  Arrays are indexed [x + N, y + N].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .hardcore import _frame, _to_bits, _walk, is_m_even, is_m_odd, parity_rectangles
from .lattice import BoundaryRule, Configuration, Region, complete_to_mis, is_maximal

SHIFTS = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}
SHIFT_ORDER = ("E", "W", "N", "S")
FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


class NotOdd(ValueError):
    pass


def working_window(eta: Configuration, pad: int = 2) -> Region:
    r = eta.region
    half = max(abs(r.x0), abs(r.x1), abs(r.y0), abs(r.y1)) + pad
    return Region.box(half)


def odd_parity(region: Region) -> np.ndarray:
    xs, ys = np.meshgrid(np.arange(region.x0, region.x1 + 1), np.arange(region.y0, region.y1 + 1),
                         indexing="ij")
    return ((xs + ys) % 2).astype(np.uint8)


def odd_component(eta: Configuration, m: int, window: Region | None = None) -> np.ndarray:
    """Boolean mask of the 4-connected component of {eta = omega^o} containing U_m."""
    window = window if window is not None else working_window(eta)
    vals = eta.values_on(window)
    agree = vals == odd_parity(window)
    lab, _ = ndimage.label(agree, structure=FOUR)
    c = -window.x0
    core = lab[c - m:c + m + 1, c - m:c + m + 1]
    ids = np.unique(core)
    if len(ids) != 1 or ids[0] == 0:
        raise NotOdd("no agreement component contains U_m")
    return lab == ids[0]


@dataclass
class Contour:
    window: Region
    R: np.ndarray          # odd component
    interior: np.ndarray   # R and its holes
    exterior: np.ndarray   # sites joined to the frame of the window avoiding R
    edges: list            # lattice edges (u, v) with u in R, v exterior
    cycle: list            # dual vertices (doubled edge midpoints) in cyclic order

    @property
    def length(self) -> int:
        return len(self.edges)


def _exterior(R: np.ndarray) -> np.ndarray:
    lab, _ = ndimage.label(~R, structure=FOUR)
    frame = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    frame = frame[frame > 0]
    return np.isin(lab, frame)


def _dual_neighbors(p):
    """Dual vertices sharing an endpoint with edge p and perpendicular to it."""
    x, y = p
    return [(x + dx, y + dy) for dx in (-1, 1) for dy in (-1, 1)]


def _assemble_cycle(points: set) -> list:
    """Order dual vertices into one closed cycle; raises if that is impossible."""
    if not points:
        raise AssertionError("empty contour")
    adj = {p: [q for q in _dual_neighbors(p) if q in points] for p in points}
    bad = [p for p, q in adj.items() if len(q) != 2]
    if bad:
        raise AssertionError(f"contour is not a simple cycle at {bad[:4]}")
    start = min(points)
    cyc = [start]
    prev, cur = None, start
    while True:
        a, b = adj[cur]
        nxt = a if a != prev else b
        if nxt == start:
            break
        cyc.append(nxt)
        prev, cur = cur, nxt
    if len(cyc) != len(points):
        raise AssertionError("contour splits into several cycles")
    # counterclockwise orientation via the shoelace sign
    area = sum(p[0] * q[1] - q[0] * p[1] for p, q in zip(cyc, cyc[1:] + cyc[:1]))
    if area < 0:
        cyc = [cyc[0]] + cyc[1:][::-1]
    return cyc


def extract_contour(eta: Configuration, m: int, window: Region | None = None) -> Contour:
    window = window if window is not None else working_window(eta)
    R = odd_component(eta, m, window)
    ext = _exterior(R)
    interior = ~ext
    edges = []
    x0, y0 = window.x0, window.y0
    W, H = R.shape
    for a, b in zip(*np.nonzero(R)):
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            c, d = a + dx, b + dy
            if 0 <= c < W and 0 <= d < H and ext[c, d]:
                edges.append(((int(a) + x0, int(b) + y0), (int(c) + x0, int(d) + y0)))
    mids = {(u[0] + v[0], u[1] + v[1]) for u, v in edges}
    return Contour(window, R, interior, ext, edges, _assemble_cycle(mids))


def shift(eta: Configuration, s, contour: Contour | None = None, m: int | None = None):
    """theta_s: move the occupied interior by s and occupy the vacated interior sites.

    Returns (shifted configuration on the working window, I'_s mask).
    """
    if contour is None:
        if m is None:
            raise ValueError("need the contour or m")
        contour = extract_contour(eta, m)
    win = contour.window
    vals = eta.values_on(win).astype(bool)
    inside, outside = contour.interior, contour.exterior
    dx, dy = s
    moved = np.zeros_like(vals)
    src = vals & inside
    # the frame of the window is exterior, so nothing moves off the array
    moved[max(dx, 0):vals.shape[0] + min(dx, 0), max(dy, 0):vals.shape[1] + min(dy, 0)] = \
        src[max(-dx, 0):vals.shape[0] - max(dx, 0), max(-dy, 0):vals.shape[1] - max(dy, 0)]
    back = np.ones_like(vals)  # v - s outside the array counts as exterior
    back[max(dx, 0):vals.shape[0] + min(dx, 0), max(dy, 0):vals.shape[1] + min(dy, 0)] = \
        outside[max(-dx, 0):vals.shape[0] - max(dx, 0), max(-dy, 0):vals.shape[1] - max(dy, 0)]
    added = inside & back
    new = moved | (vals & outside) | added
    cfg = Configuration(win, new.astype(np.uint8), BoundaryRule("even"))
    return cfg, added


def choose_shift(eta: Configuration, m: int, contour: Contour | None = None) -> str:
    """First direction in E, W, N, S whose shift makes the configuration m-even."""
    contour = contour if contour is not None else extract_contour(eta, m)
    for name in SHIFT_ORDER:
        out, _ = shift(eta, SHIFTS[name], contour)
        if is_m_even(out, m):
            return name
    raise AssertionError("no shift produces an m-even configuration")


def phi(eta: Configuration, m: int):
    """The contour-removing map; returns (image, chosen direction, contour)."""
    contour = extract_contour(eta, m)
    name = choose_shift(eta, m, contour)
    out, _ = shift(eta, SHIFTS[name], contour)
    return out, name, contour


def occupied_in_box(cfg: Configuration, n: int) -> int:
    return int(cfg.values_on(Region.box(n)).sum())


def verify_instance(eta: Configuration, m: int, n: int) -> dict:
    """Check every shift property on one m-odd configuration."""
    contour = extract_contour(eta, m)
    L = contour.length
    base = occupied_in_box(eta, n)
    shifts = {}
    for name, s in SHIFTS.items():
        out, added = shift(eta, s, contour)
        shifts[name] = {
            "in_X0": bool(is_maximal(out, Region.box(n + 1))),
            "increase": occupied_in_box(out, n) - base,
            "added": int(added.sum()),
            "m_even": bool(is_m_even(out, m)),
        }
    chosen = choose_shift(eta, m, contour)
    # the dual of R read as "odd occupied sites and their neighbors"
    occ_odd = eta.values_on(contour.window).astype(bool) & (odd_parity(contour.window) == 1)
    blob = ndimage.binary_dilation(occ_odd, structure=FOUR)
    lab, _ = ndimage.label(blob, structure=FOUR)
    c = -contour.window.x0
    same_reading = bool(np.array_equal(lab == lab[c, c], contour.R)) if lab[c, c] else False
    return {
        "length": L,
        "length_mod4": L % 4 == 0,
        "length_lower": L >= 2 * math.sqrt(2) * m,
        "increase": shifts[chosen]["increase"],
        "quarter": L / 4,
        "all_shifts_valid": all(v["in_X0"] for v in shifts.values()),
        "all_increase_quarter": all(v["increase"] == v["added"] == L // 4 and L % 4 == 0
                                    for v in shifts.values()),
        "chosen_shift": chosen,
        "chosen_even": shifts[chosen]["m_even"],
        "readings_agree": same_reading,
        "shifts": shifts,
    }


def paint_instance(n: int, paint: np.ndarray, protected: np.ndarray, rng) -> Configuration:
    """MIS on U_n (even boundary) that follows omega^o where painted, omega^e elsewhere.

    Occupied sites that clash with a neighbor are cleared unless protected;
    the remaining free sites are filled greedily in random order.
    """
    region = Region.box(n)
    odd = odd_parity(region).astype(bool)
    bits = np.where(paint | protected, odd, ~odd)
    frame = Configuration(region, bits, BoundaryRule("even")).padded(1).astype(bool)
    nb = frame[2:, 1:-1] | frame[:-2, 1:-1] | frame[1:-1, 2:] | frame[1:-1, :-2]
    bits = bits & ~(bits & nb & ~protected)
    cfg = Configuration(region, bits.astype(np.uint8), BoundaryRule("even"))
    free = [s for s in region.sites() if not protected[s[0] + n, s[1] + n]]
    order = [free[k] for k in rng.permutation(len(free))]
    return complete_to_mis(cfg, region, order)


def random_odd_instance(n: int, m: int, rng, blobs: int = 3) -> Configuration:
    """A random m-odd MIS on U_n with even boundary.

    One of the four parity rectangles is protected in the odd phase; a few
    random odd patches inside U_{n-1} are added, then a few even patches
    that may punch holes.
    """
    shape = (2 * n + 1, 2 * n + 1)
    rect = list(parity_rectangles(m).values())[rng.integers(4)]
    protected = np.zeros(shape, dtype=bool)
    protected[rect[0] + n:rect[2] + 1 + n, rect[1] + n:rect[3] + 1 + n] = True
    paint = np.zeros(shape, dtype=bool)
    holes = np.zeros(shape, dtype=bool)
    for k in range(2 * blobs):
        a0, b0 = rng.integers(1, 2 * n, size=2)
        a1 = min(a0 + rng.integers(1, n + 1), 2 * n - 1)
        b1 = min(b0 + rng.integers(1, n + 1), 2 * n - 1)
        (paint if k < blobs else holes)[a0:a1 + 1, b0:b1 + 1] = True
    return paint_instance(n, paint & ~holes, protected, rng)


def enumerate_box(n: int, boundary: str = "even") -> list:
    """Every MIS completion of the checkerboard boundary inside U_n."""
    region = Region.box(n)
    outside = Configuration.from_rule(region, BoundaryRule(boundary))
    fr = _frame(outside, region)
    return [Configuration(region, _to_bits(c, fr.h), BoundaryRule(boundary)) for c in _walk(fr)]


def preimage_multiplicity(n: int, m: int) -> dict:
    """Largest number of m-odd configurations sharing one image, per contour and overall."""
    per_contour: dict = {}
    overall: dict = {}
    count = 0
    for eta in enumerate_box(n):
        if not is_m_odd(eta, m):
            continue
        count += 1
        img, _, contour = phi(eta, m)
        key = img.values_on(Region.box(n + 1)).tobytes()
        ckey = tuple(sorted(contour.cycle))
        per_contour[(key, ckey)] = per_contour.get((key, ckey), 0) + 1
        overall[key] = overall.get(key, 0) + 1
    return {"odd_configurations": count,
            "max_per_contour": max(per_contour.values(), default=0),
            "max_overall": max(overall.values(), default=0)}


def render(eta: Configuration, m: int) -> str:
    """ASCII picture, top row first: '#' occupied in R, '*' occupied elsewhere,
    'o' empty in R, 'h' interior outside R, '.' exterior."""
    contour = extract_contour(eta, m)
    vals = eta.values_on(contour.window)
    rows = []
    W, H = vals.shape
    for b in range(H - 1, -1, -1):
        line = []
        for a in range(W):
            if vals[a, b] and contour.R[a, b]:
                ch = "#"
            elif vals[a, b]:
                ch = "*"
            elif contour.R[a, b]:
                ch = "o"
            elif contour.interior[a, b]:
                ch = "h"
            else:
                ch = "."
            line.append(ch)
        rows.append("".join(line))
    return "\n".join(rows)
