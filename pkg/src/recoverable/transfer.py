"""Transfer matrices for counting maximal independent sets on strips, the
two-seam cylinder upper bound, and strip densities at activity lambda.

A column of height m is an m-bit mask; bit m-1 is the top row.  A strip
state is a pair of adjacent columns (left, right).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

MAX_M = 20
MAX_P = 8


def _full(m: int) -> int:
    return (1 << m) - 1


def _vert(c: int, m: int) -> int:
    """Sites whose vertical neighbor in column c is occupied."""
    return ((c << 1) | (c >> 1)) & _full(m)


def independent_columns(m: int) -> list[int]:
    return [c for c in range(1 << m) if c & (c >> 1) == 0]


@dataclass(frozen=True)
class TransferState:
    left: int
    right: int
    m: int

    @property
    def is_left_state(self) -> bool:
        """Every 0 of the left column touches a 1 (nothing lies further left)."""
        cover = self.right | _vert(self.left, self.m) | self.left
        return cover == _full(self.m)

    @property
    def is_right_state(self) -> bool:
        cover = self.left | _vert(self.right, self.m) | self.right
        return cover == _full(self.m)

    def columns(self) -> np.ndarray:
        """2-column 0/1 array, row 0 is the top row."""
        bits = [[(self.left >> k) & 1, (self.right >> k) & 1] for k in range(self.m - 1, -1, -1)]
        return np.array(bits, dtype=np.uint8)


@dataclass
class TransferMatrix:
    states: list
    matrix: sp.csr_matrix
    weight: float | None = None

    @property
    def dimension(self) -> int:
        return len(self.states)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_states(m: int) -> list[TransferState]:
    """All pairs of independent columns with no horizontal double 1, sorted by (left, right)."""
    if not 1 <= m <= MAX_M:
        raise ValueError(f"m must lie in 1..{MAX_M}")
    cols = independent_columns(m)
    return [TransferState(a, b, m) for a in cols for b in cols if a & b == 0]


def _transitions(states: list[TransferState], m: int):
    """Yield (i, j, appended column) for every allowed transition."""
    full = _full(m)
    index = {(s.left, s.right): k for k, s in enumerate(states)}
    by_left: dict[int, list[int]] = {}
    for s in states:
        by_left.setdefault(s.left, []).append(s.right)
    rows, cols, appended = [], [], []
    for i, s in enumerate(states):
        # zeros of the middle column not yet covered by left, itself or its vertical neighbors
        need = full & ~(s.left | s.right | _vert(s.right, m))
        xs = np.array(by_left[s.right], dtype=np.int64)
        ok = xs[(xs & need) == need]
        for x in ok.tolist():
            rows.append(i)
            cols.append(index[(s.right, x)])
            appended.append(x)
    return np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(appended, dtype=np.int64)


def popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    return np.unpackbits(a.view(np.uint8).reshape(-1, 8), axis=1).sum(axis=1).reshape(a.shape)


def build_transfer(m: int, lam: float | None = None) -> TransferMatrix:
    """Column-pair transfer matrix; with lam each entry carries lam**(ones in the appended column)."""
    states = build_states(m)
    rows, cols, appended = _transitions(states, m)
    if lam is None:
        data = np.ones(len(rows), dtype=np.int64)
    else:
        if lam <= 0:
            raise ValueError("activity must be positive")
        data = np.power(float(lam), popcount(appended).astype(float))
    n = len(states)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    return TransferMatrix(states, mat, lam)


def _path_mis_count(m: int) -> int:
    """Maximal independent sets of a path on m vertices (a single column)."""
    full = _full(m)
    return sum(1 for c in independent_columns(m) if (c | _vert(c, m)) == full)


def _primes_below(limit: int, count: int) -> list[int]:
    out = []
    q = limit - 1
    while len(out) < count:
        if q % 2 and all(q % d for d in range(3, math.isqrt(q) + 1, 2)):
            out.append(q)
        q -= 1
    return out


def crt(residues, moduli) -> int:
    """Chinese remaindering for pairwise coprime moduli."""
    x, mod = 0, 1
    for r, q in zip(residues, moduli):
        t = ((int(r) - x) * pow(mod, -1, q)) % q
        x += mod * t
        mod *= q
    return x


def count_mis(m: int, n: int) -> int:
    """Exact number of MIS on an m x n grid with zero boundary.

    Evaluates 1_L T^(n-2) 1_R with exact integer arithmetic: the vector is
    carried modulo enough 31-bit primes to exceed 2^(mn), then recombined.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if n == 1:
        return _path_mis_count(m)
    tm = build_transfer(m)
    left = np.array([s.is_left_state for s in tm.states])
    right = np.array([s.is_right_state for s in tm.states])
    if n == 2:
        return int(np.sum(left & right))
    nprimes = m * n // 30 + 2
    primes = np.array(_primes_below(1 << 31, nprimes), dtype=np.int64)
    tt = tm.matrix.T.tocsr().astype(np.int64)
    v = np.zeros((tm.dimension, nprimes), dtype=np.int64)
    v[left] = 1
    for _ in range(n - 2):
        v = tt @ v
        v %= primes
    res = v[right].sum(axis=0) % primes
    return crt(res.tolist(), primes.tolist())


def h0_lower(m: int, n: int, count: int | None = None) -> float:
    """log2 |MIS(m x n, zero boundary)| / ((m+1)(n+1))."""
    count = count_mis(m, n) if count is None else count
    return math.log2(count) / ((m + 1) * (n + 1))


class IterationLimit(RuntimeError):
    def __init__(self, estimate: float, iterations: int):
        super().__init__(f"power iteration did not converge after {iterations} steps "
                         f"(last estimate {estimate!r})")
        self.estimate = estimate
        self.iterations = iterations


def dominant_eigenvalue(matrix, tol: float = 1e-10, max_iter: int = 100_000, start=None):
    """Perron eigenvalue of a nonnegative matrix by power iteration on A + I.

    The unit shift removes periodicity; the iterate is renormalized every
    step.  Returns (eigenvalue, eigenvector, iterations).
    """
    a = sp.csr_matrix(matrix, dtype=float)
    n = a.shape[0]
    v = np.ones(n) if start is None else np.asarray(start, dtype=float).copy()
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        w = a @ v + v
        new = float(np.linalg.norm(w))
        w /= new
        if abs(new - est) <= tol * new and np.max(np.abs(w - v)) <= max(tol, 1e-14) * 10:
            return new - 1.0, w, it
        v, est = w, new
    raise IterationLimit(est - 1.0, max_iter)


# two-seam cylinder

@dataclass(frozen=True)
class SeamState:
    """Two rows of a pair of width-(p+2) strips that agree on their two outer columns.

    a_top, b_top, a_bot, b_bot are (p+2)-bit row masks, bit k = column k.
    """

    a_top: int
    b_top: int
    a_bot: int
    b_bot: int
    p: int

    def as_array(self) -> np.ndarray:
        """2 x 2p cylinder layout: all columns of A, then B's inner columns right to left."""
        n = self.p + 2

        def row(a, b):
            return [(a >> k) & 1 for k in range(n)] + [(b >> k) & 1 for k in range(n - 3, 1, -1)]

        return np.array([row(self.a_top, self.b_top), row(self.a_bot, self.b_bot)], dtype=np.uint8)


@dataclass
class SeamMatrix:
    states: list
    matrix: sp.csr_matrix
    p: int

    @property
    def dimension(self) -> int:
        return len(self.states)


def seam_rows(p: int) -> list[tuple[int, int]]:
    """Row pairs (a, b) of two strips, each independent, equal on the two outer columns."""
    n = p + 2
    outer = 0b11 | (0b11 << (n - 2))
    rows = [r for r in range(1 << n) if r & (r >> 1) == 0]
    return [(a, b) for a in rows for b in rows if a & outer == b & outer]


def build_two_seam(p: int) -> SeamMatrix:
    """Transfer matrix over two-row slabs of the two-seam cylinder of circumference 2p.

    Each strip has width p+2 and obeys: no adjacent 1s, and every 0 away
    from the strip's edge rows and edge columns touches a 1.  A slab of two
    rows has no such interior, so only independence constrains the states.
    """
    if p < 2:
        raise ValueError("p must be at least 2")
    if p > MAX_P:
        raise ValueError(f"p must be at most {MAX_P}")
    n = p + 2
    full = _full(n)
    inner = full & ~1 & ~(1 << (n - 1))
    rows = seam_rows(p)
    ra = np.array([r[0] for r in rows], dtype=np.int64)
    rb = np.array([r[1] for r in rows], dtype=np.int64)
    # states: vertically compatible pairs of rows (top, bottom)
    compat = [np.nonzero(((ra & a) == 0) & ((rb & b) == 0))[0] for a, b in rows]
    top = np.concatenate([np.full(len(c), k) for k, c in enumerate(compat)])
    bot = np.concatenate(compat)
    offset = np.concatenate([[0], np.cumsum([len(c) for c in compat])])
    nstates = len(top)
    # a transition (t, u) -> (u, w) needs every inner 0 of row u covered in both strips
    ri, ci = [], []
    for k in range(nstates):
        t, u = top[k], bot[k]
        a, b = rows[u]
        need_a = inner & ~(ra[t] | a | ((a << 1) | (a >> 1)))
        need_b = inner & ~(rb[t] | b | ((b << 1) | (b >> 1)))
        nxt = compat[u]
        ok = nxt[((ra[nxt] & need_a) == need_a) & ((rb[nxt] & need_b) == need_b)]
        ri.append(np.full(len(ok), k))
        ci.append(offset[u] + np.searchsorted(compat[u], ok))
    ri = np.concatenate(ri)
    ci = np.concatenate(ci)
    mat = sp.csr_matrix((np.ones(len(ri)), (ri, ci)), shape=(nstates, nstates))
    states = [SeamState(rows[t][0], rows[t][1], rows[u][0], rows[u][1], p)
              for t, u in zip(top.tolist(), bot.tolist())]
    return SeamMatrix(states, mat, p)


def h0_upper(p: int, tol: float = 1e-10, max_iter: int = 100_000) -> dict:
    """log2 of the two-seam Perron eigenvalue divided by 2p.

    Returns a dict with the bound, the raw eigenvalue and iteration data.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sm = build_two_seam(p)
    lam, _, its = dominant_eigenvalue(sm.matrix, tol=tol, max_iter=max_iter)
    return {"value": math.log2(lam) / (2 * p), "eigenvalue": lam, "p": p,
            "states": sm.dimension, "nnz": int(sm.matrix.nnz), "iterations": its}


def cylinder_density(m: int, lam: float, h: float = 1e-4, tol: float = 1e-13) -> float:
    """Occupied fraction of a width-m zero-boundary strip at activity lam.

    lam d/dlam ln Lambda(lam) / m by a central difference in ln lam, where
    Lambda is the Perron eigenvalue of the weighted transfer matrix.
    """
    if lam <= 0:
        raise ValueError("activity must be positive")
    if not 0 < h <= 1e-2:
        raise ValueError("relative step must lie in (0, 1e-2]")
    up = dominant_eigenvalue(build_transfer(m, lam * math.exp(h)).matrix, tol=tol)[0]
    dn = dominant_eigenvalue(build_transfer(m, lam * math.exp(-h)).matrix, tol=tol)[0]
    return (math.log(up) - math.log(dn)) / (2 * h) / m
