"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import functools
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import brute_mis_count, brute_torus_mis_codes, code_to_bits  # noqa: E402
from recoverable.contours import preimage_multiplicity, random_odd_instance, verify_instance  # noqa: E402
from recoverable.dobrushin import alpha, find_beta0  # noqa: E402
from recoverable.dynamics import (c_beta, coalescence_experiment, entropy_crossover,  # noqa: E402
                                  entropy_lower_bound, error_prob_bounds, exact_gibbs, mixing_bound,
                                  one_step_contraction)
from recoverable.geometry import (dense_ground_states, enumerate_ground_states,  # noqa: E402
                                  feasible_triangle_table, max_defective_area, peierls_campaign)
from recoverable.hardcore import is_m_odd, parity_probability  # noqa: E402
from recoverable.lattice import BoundaryRule, Configuration, Region, is_maximal  # noqa: E402
from recoverable.transfer import build_transfer, count_mis, cylinder_density, h0_lower, h0_upper  # noqa: E402

# published two-row transfer matrix
TWO_ROW_MATRIX = np.array([
    [0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 0, 1, 1],
    [0, 0, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 1],
    [0, 1, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 1, 0, 0],
])
H0_LOWER_TARGET = 0.3012
H0_UPPER_TARGET = 0.34085026

# published (third vertex) -> (area, circumradius ratio squared) for the pair (1, 3)
TRIANGLE_CELLS_13 = {
    (0, 1): (Fraction(1, 2), Fraction(5)),
    (0, 2): (Fraction(1), Fraction(2)),
    (0, 3): (Fraction(3, 2), Fraction(1)),
    (1, 0): (Fraction(3, 2), Fraction(1)),
    (2, 0): (Fraction(3), Fraction(10, 9)),
    (3, 0): (Fraction(9, 2), Fraction(13, 9)),
    (1, 1): (Fraction(1), Fraction(2)),
    (2, 1): (Fraction(5, 2), Fraction(1)),
    (3, 1): (Fraction(4), Fraction(5, 4)),
    (1, 2): (Fraction(1), Fraction(5)),
    (2, 2): (Fraction(2), Fraction(1)),
}

RESULTS: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def _count_12_130():
    t = time.perf_counter()
    c = count_mis(12, 130)
    return c, time.perf_counter() - t


def transfer_golden():
    tm = build_transfer(2)
    same = np.array_equal(tm.dense().astype(int), TWO_ROW_MATRIX)
    count, secs = _count_12_130()
    h = h0_lower(12, 130, count)
    ok = same and round(h, 4) >= H0_LOWER_TARGET and secs < 300
    return ok, f"matrix_equal={same} count={count:.6e} h0_lower={h:.7f} (4dp {round(h, 4)}) time={secs:.1f}s"


def two_seam_upper():
    t = time.perf_counter()
    out = h0_upper(7, 1e-10)
    secs = time.perf_counter() - t
    ok = abs(out["value"] - H0_UPPER_TARGET) <= 1e-4 and secs < 600
    note = "" if ok else " (target missed: seam-state notation is ambiguous, raw eigenvalue reported)"
    return ok, (f"h0_upper={out['value']:.10f} eigenvalue={out['eigenvalue']:.10f} "
                f"states={out['states']} time={secs:.1f}s{note}")


def count_oracle():
    bad = [(m, n) for m in range(1, 5) for n in range(1, 5) if count_mis(m, n) != brute_mis_count(m, n)]
    return not bad, f"16 sizes checked, mismatches={bad}"


def dobrushin_constant():
    t = time.perf_counter()
    a = alpha(0.049)
    a_ok = abs(a - 0.68) <= 0.01
    try:
        b = find_beta0()
        b_ok, b_txt = 0.049 < b < 0.05, f"beta0={b:.7f}"
    except ValueError as exc:
        root = find_beta0(0.04, 0.1, tol=1e-8)
        b_ok, b_txt = False, f"default bracket failed ({exc}); alpha=1 at beta={root:.7f}"
    secs = time.perf_counter() - t
    return a_ok and b_ok and secs < 60, f"alpha(0.049)={a:.4f} {b_txt} time={secs:.1f}s"


def mixing():
    bound = mixing_bound(64, 0.01, 0.05)
    out = coalescence_experiment(8, 8, 0.01, range(100))
    con = one_step_contraction(Region.window(0, 0, 7, 7), 0.01, 100_000, seed=0)
    limit = -c_beta(0.01) / 64 + 3 * con["sigma"]
    ok = out["timeouts"] == 0 and out["median"] <= bound and con["mean"] <= limit
    return ok, (f"median={out['median']:.0f} bound={bound} timeouts={out['timeouts']} "
                f"contraction mean={con['mean']:.5f} limit={limit:.5f}")


def error_sandwich():
    r = Region.window(0, 0, 3, 3)
    parts, ok = [], True
    for beta in (0.5, 1.0, 2.0):
        g = exact_gibbs(r, beta, BoundaryRule("even"))
        probs = []
        for site in ((1, 1), (1, 2), (2, 1), (2, 2)):
            try:
                exact, upper, lower = error_prob_bounds(r, beta, site, gibbs=g)
            except AssertionError:
                ok = False
                exact = g.site_error_probability(site)
            probs.append(exact)
        lower, upper = 1 / (1 + math.exp(10 * beta)), 16 * math.exp(-2 * beta)
        parts.append(f"beta={beta}: {lower:.3g} <= [{min(probs):.4g}, {max(probs):.4g}] <= {upper:.3g}")
    return ok, "; ".join(parts)


def entropy_curve():
    h0 = h0_lower(12, 130, _count_12_130()[0])
    log2e = math.log2(math.e)
    worst = 0.0
    for b in np.linspace(0, 5, 501):
        a = 2 * b * log2e / (1 + math.exp(10 * b))
        worst = max(worst, abs(entropy_lower_bound(b, h0)[0] - max(a + h0, 1 + a - 2 * b * log2e)))
    root, closed = entropy_crossover(h0)
    v0 = entropy_lower_bound(0.0, h0)[0]
    v5 = entropy_lower_bound(5.0, h0)[0]
    ok = worst < 1e-12 and abs(root - closed) <= 1e-6 and v0 == 1.0 and abs(v5 - h0) <= 1e-3
    return ok, f"formula_err={worst:.1e} crossover={root:.8f} closed={closed:.8f} f(0)={v0} f(5)-H0={v5 - h0:.1e}"


def contour_suite():
    rng = np.random.default_rng(2025)
    fails, instances = 0, 0
    for k in range(120):
        m = 2 + k % 2
        n = m + int(rng.integers(2, 5))
        eta = random_odd_instance(n, m, rng)
        if not (is_maximal(eta) and is_m_odd(eta, m)):
            fails += 1
            continue
        r = verify_instance(eta, m, n)
        instances += 1
        fails += not (r["all_shifts_valid"] and r["all_increase_quarter"] and r["length_mod4"]
                      and r["length_lower"] and r["chosen_even"])
    pm = preimage_multiplicity(3, 1)
    ok = fails == 0 and instances >= 100 and pm["max_per_contour"] <= 4
    return ok, (f"instances={instances} failures={fails} preimages per contour={pm['max_per_contour']} "
                f"over {pm['odd_configurations']} odd configurations")


def ground_states():
    codes = brute_torus_mis_codes(5, 5)
    small = [c for c in codes if bin(int(c)).count("1") == 5]
    t5 = Region.torus(5, 5)
    brute = {code_to_bits(c, 5, 5).tobytes() for c in small}
    listed = {s.on(t5).bits.tobytes() for s in enumerate_ground_states()["sparse"]}
    t4 = Region.torus(4, 4)
    dense = set()
    for code in range(16):
        tile = np.array([(code >> k) & 1 for k in range(4)], dtype=np.uint8).reshape(2, 2)
        cfg = Configuration(t4, np.tile(tile, (2, 2)))
        if is_maximal(cfg) and cfg.bits.sum() == 8:
            dense.add(cfg.key())
    dense_ok = dense == {s.on(t4).key() for s in dense_ground_states()}
    ok = len(small) == 10 and brute == listed and len(dense) == 2 and dense_ok
    return ok, f"size-5 MIS on 5x5 torus={len(small)} match={brute == listed} period-2 dense={len(dense)}"


def triangle_table():
    rows = {r.third: r for r in feasible_triangle_table() if r.pair == (1, 3)}
    wrong = [f"{uv}: area {rows[uv].area} vs {a}, ratio^2 {rows[uv].ratio_sq} vs {q}"
             for uv, (a, q) in TRIANGLE_CELLS_13.items()
             if uv not in rows or rows[uv].area != a or rows[uv].ratio_sq != q]
    area = max_defective_area()
    ok = not wrong and area <= 2
    return ok, f"cell mismatches={wrong or 'none'}; max defective area={area}"


def peierls():
    out = peierls_campaign(200, seed=0)
    margin = min(r["min_margin"] for r in out["results"] if r["min_margin"] is not None)
    return out["passed"] == 200, f"passed={out['passed']}/200 with_contour={out['with_contour']} min_margin={margin}"


def density_sweep():
    grid = np.geomspace(0.125, 8, 7)
    vals = [cylinder_density(12, float(lam), 1e-4) for lam in grid]
    at_one = vals[3]
    mono = all(x <= y for x, y in zip(vals, vals[1:]))
    ok = 0.31 <= at_one <= 0.35 and mono
    return ok, f"density(lambda=1)={at_one:.6f} monotone={mono} sweep={[round(v, 4) for v in vals]}"


def parity_ordering():
    pe = parity_probability(4, 2, 8, "even")
    po = parity_probability(4, 2, 8, "odd")
    ok = pe["method"] == po["method"] == "exact" and pe["value"] < po["value"]
    return ok, f"p_odd even boundary={pe['value']:.3e} odd boundary={po['value']:.8f}"


CRITERIA = {
    1: ("transfer matrix golden values", transfer_golden),
    2: ("two-seam upper bound", two_seam_upper),
    3: ("count vs brute force", count_oracle),
    4: ("dobrushin constant and beta0", dobrushin_constant),
    5: ("coupling and contraction", mixing),
    6: ("error probability sandwich", error_sandwich),
    7: ("entropy bound curve", entropy_curve),
    8: ("contour and shift properties", contour_suite),
    9: ("ground states", ground_states),
    10: ("triangle table", triangle_table),
    11: ("peierls campaign", peierls),
    12: ("density at unit activity", density_sweep),
    13: ("parity ordering", parity_ordering),
}


def evaluate(number: int) -> tuple[bool, str]:
    name, fn = CRITERIA[number]
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash counts as a failure, not an error
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    RESULTS[number] = (bool(ok), detail)
    return bool(ok), detail


def line(number: int) -> str:
    ok, detail = RESULTS[number]
    return f"{'PASS' if ok else 'FAIL'} {number:2d} {CRITERIA[number][0]}: {detail}"


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[CRITERIA[k][0].replace(" ", "-") for k in sorted(CRITERIA)])
def test_acceptance(number):
    ok, detail = evaluate(number)
    print(line(number))
    assert ok, detail


if __name__ == "__main__":
    wanted = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    for k in wanted:
        evaluate(k)
        print(line(k), flush=True)
