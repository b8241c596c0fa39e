import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import brute_mis_count
from recoverable.lattice import Configuration, Region, is_maximal
from recoverable.transfer import (IterationLimit, build_states, build_transfer, build_two_seam, count_mis,
                                  crt, cylinder_density, dominant_eigenvalue, h0_lower, h0_upper,
                                  popcount, seam_rows)

# the m = 2 transfer matrix as printed in the source, states ordered s0..s6
TWO_ROW_MATRIX = np.array([
    [0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 1, 1],
    [0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 1],
    [0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0],
])


def test_two_row_matrix_matches_printed_example():
    tm = build_transfer(2)
    assert tm.dimension == 7
    assert np.array_equal(tm.dense().astype(int), TWO_ROW_MATRIX)
    left = [k for k, s in enumerate(tm.states) if s.is_left_state]
    right = [k for k, s in enumerate(tm.states) if s.is_right_state]
    assert left == [3, 4, 5, 6] and right == [1, 2, 4, 6]


def test_two_row_example_chain():
    tm = build_transfer(2)
    chain = [6, 3, 2, 6, 4, 6]
    assert all(TWO_ROW_MATRIX[a, b] for a, b in zip(chain, chain[1:]))
    cols = [tm.states[chain[0]].columns()[:, 0]] + [tm.states[k].columns()[:, 1] for k in chain]
    grid = np.stack(cols, axis=1)
    expected = np.array([[1, 0, 0, 1, 0, 1, 0],
                         [0, 1, 0, 0, 1, 0, 1]])
    assert np.array_equal(grid, expected)
    # rows of the picture run top to bottom; check it is an MIS with zero boundary
    bits = grid[::-1].T
    assert is_maximal(Configuration(Region.window(0, 0, 6, 1), bits))


def test_state_count_is_square_of_fibonacci_like_count():
    # pairs of independent columns with no horizontal 11
    for m in range(1, 7):
        states = build_states(m)
        cols = [c for c in range(1 << m) if c & (c >> 1) == 0]
        assert len(states) == sum(1 for a in cols for b in cols if a & b == 0)
        keys = [(s.left, s.right) for s in states]
        assert keys == sorted(keys)


@pytest.mark.parametrize("m,n", [(m, n) for m in range(1, 5) for n in range(1, 5)])
def test_count_matches_brute_force(m, n):
    assert count_mis(m, n) == brute_mis_count(m, n)


def test_count_symmetric_and_small_values():
    for m, n in [(2, 5), (3, 6), (5, 4)]:
        assert count_mis(m, n) == count_mis(n, m)
    assert count_mis(1, 1) == 1 and count_mis(2, 2) == 2


def test_count_exact_beyond_int64():
    # the multi-modular path must agree with a plain big-integer evaluation
    m, n = 6, 40
    tm = build_transfer(m)
    left = [int(s.is_left_state) for s in tm.states]
    right = [int(s.is_right_state) for s in tm.states]
    rows = [list(np.nonzero(tm.dense()[i])[0]) for i in range(tm.dimension)]
    v = left
    for _ in range(n - 2):
        w = [0] * tm.dimension
        for i, x in enumerate(v):
            if x:
                for j in rows[i]:
                    w[j] += x
        v = w
    exact = sum(a * b for a, b in zip(v, right))
    assert exact > 2 ** 63
    assert count_mis(m, n) == exact


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 30))
def test_crt_roundtrip(x):
    mods = [2147483647, 2147483629, 2147483587, 2147483579]
    assert crt([x % q for q in mods], mods) == x % math.prod(mods)


def test_h0_lower_small():
    assert h0_lower(2, 2) == pytest.approx(math.log2(2) / 9)
    with pytest.raises(ValueError):
        count_mis(0, 3)


def test_popcount():
    assert popcount(np.array([0, 1, 3, 255, 2 ** 40 - 1])).tolist() == [0, 1, 2, 8, 40]


def test_dominant_eigenvalue_matches_dense_solver(rng):
    for n in (3, 10, 40):
        a = (rng.random((n, n)) < 0.3) * rng.random((n, n)) + np.eye(n, k=1) + np.eye(n, k=1 - n)
        lam, vec, _ = dominant_eigenvalue(a, tol=1e-13)
        ref = max(abs(np.linalg.eigvals(a)))
        assert lam == pytest.approx(ref, rel=1e-9)
        assert np.allclose(a @ vec, lam * vec, atol=1e-8)


def test_power_iteration_handles_periodic_matrix_and_reports_limit():
    perm = np.roll(np.eye(5), 1, axis=1)
    lam, _, _ = dominant_eigenvalue(perm, tol=1e-12)
    assert lam == pytest.approx(1.0)
    with pytest.raises(IterationLimit) as err:
        dominant_eigenvalue(np.array([[1.0, 1.0], [1.0, 0.0]]), tol=1e-15, max_iter=2,
                            start=np.array([1.0, 0.0]))
    assert err.value.estimate > 0


def _strip_ok(a: np.ndarray) -> bool:
    """No adjacent 1s; every zero away from the edges touches a 1."""
    h, w = a.shape
    if np.any(a[1:] & a[:-1]) or np.any(a[:, 1:] & a[:, :-1]):
        return False
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            if a[i, j] == 0 and not (a[i - 1, j] or a[i + 1, j] or a[i, j - 1] or a[i, j + 1]):
                return False
    return True


def _brute_two_seam(p: int, height: int) -> int:
    w = p + 2
    rows = [r for r in range(1 << w) if r & (r >> 1) == 0]
    strips = []
    for combo in itertools.product(rows, repeat=height):
        a = np.array([[(r >> k) & 1 for k in range(w)] for r in combo], dtype=np.uint8)
        if _strip_ok(a):
            strips.append(a)
    by_edge = {}
    for a in strips:
        key = np.concatenate([a[:, :2], a[:, -2:]], axis=1).tobytes()
        by_edge[key] = by_edge.get(key, 0) + 1
    return sum(c * c for c in by_edge.values())


@pytest.mark.parametrize("p,height", [(2, 3), (2, 4), (2, 5), (3, 4)])
def test_two_seam_matrix_counts_pairs(p, height):
    sm = build_two_seam(p)
    t = sm.matrix.toarray().astype(np.int64)
    ones = np.ones(sm.dimension, dtype=np.int64)
    counted = ones @ np.linalg.matrix_power(t, height - 2) @ ones
    assert counted == _brute_two_seam(p, height)


def test_two_seam_rows_and_guards():
    rows = seam_rows(3)
    assert all((a & 0b11) == (b & 0b11) and (a >> 3) == (b >> 3) for a, b in rows)
    with pytest.raises(ValueError):
        build_two_seam(1)
    with pytest.raises(ValueError):
        build_two_seam(9)


def test_h0_upper_reports_raw_eigenvalue():
    r = h0_upper(3)
    assert r["value"] == pytest.approx(math.log2(r["eigenvalue"]) / 6)
    dense = build_two_seam(3).matrix.toarray()
    assert r["eigenvalue"] == pytest.approx(max(abs(np.linalg.eigvals(dense))), rel=1e-9)


def _density_from_eigenvectors(m, lam):
    """Occupied fraction from left/right Perron vectors of the weighted matrix."""
    tm = build_transfer(m, lam)
    t = tm.dense()
    w, vr = np.linalg.eig(t)
    k = np.argmax(w.real)
    r = np.abs(vr[:, k].real)
    wl, vl = np.linalg.eig(t.T)
    l = np.abs(vl[:, np.argmax(wl.real)].real)
    ones_right = np.array([bin(s.right).count("1") for s in tm.states])
    # stationary pair law: l_i T_ij r_j / (lambda l.r); the appended column is state j's right column
    pair = (l[:, None] * t * r[None, :]) / (w[k].real * (l @ r))
    return float((pair.sum(axis=0) * ones_right).sum() / m)


@pytest.mark.parametrize("m,lam", [(3, 1.0), (4, 0.5), (4, 3.0)])
def test_cylinder_density_matches_eigenvector_formula(m, lam):
    assert cylinder_density(m, lam) == pytest.approx(_density_from_eigenvectors(m, lam), abs=1e-7)


def test_cylinder_density_monotone_and_bounded():
    d = [cylinder_density(6, lam) for lam in np.geomspace(0.05, 8, 8)]
    assert all(x <= y + 1e-9 for x, y in zip(d, d[1:]))
    assert all(0 < x < 0.5 for x in d)
    with pytest.raises(ValueError):
        cylinder_density(6, 0.0)
