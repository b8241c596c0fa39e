from fractions import Fraction
import itertools

import numpy as np
import pytest

from recoverable.geometry import sparse_ground_states
from recoverable.hardcore import (check_support, embed, is_m_even, is_m_odd, mhc_conditional,
                                  parity_mcmc, parity_probability, parity_rectangles, parity_weights)
from recoverable.lattice import BoundaryRule, Configuration, Region, error_set


def _brute_conditional(region, outside, lam):
    """All fillings of region that leave no recovery error on region enlarged by 1."""
    ring = Region.window(region.x0 - 1, region.y0 - 1, region.x1 + 1, region.y1 + 1)
    out = {}
    for bits in itertools.product((0, 1), repeat=len(region)):
        arr = np.array(bits, dtype=np.uint8).reshape(region.shape)
        cfg = embed(outside, region, arr)
        if error_set(cfg, ring).count == 0:
            out[arr.tobytes()] = Fraction(lam) ** int(arr.sum())
    z = sum(out.values())
    return {k: v / z for k, v in out.items()}


def _outsides():
    big = Region.window(-4, -4, 7, 7)
    yield Configuration.from_rule(big, BoundaryRule("even"))
    yield Configuration.from_rule(big, BoundaryRule("odd"))
    yield sparse_ground_states()[0].on(big)


@pytest.mark.parametrize("shape", [(3, 3), (3, 4), (4, 4)])
def test_conditional_matches_brute_force(shape):
    region = Region.window(0, 0, shape[0] - 1, shape[1] - 1)
    for outside in _outsides():
        cond = mhc_conditional(region, outside, Fraction(3))
        got = {p.tobytes(): q for p, q in zip(cond.patterns, cond.probabilities)}
        assert got == _brute_conditional(region, outside, 3)
        assert check_support(cond, outside)


def test_conditional_rejects_bad_input():
    region = Region.window(0, 0, 2, 2)
    outside = Configuration.from_rule(Region.window(-3, -3, 5, 5), BoundaryRule("even"))
    with pytest.raises(ValueError):
        mhc_conditional(region, outside, 0)
    with pytest.raises(ValueError):
        mhc_conditional(Region.window(0, 0, 11, 11), outside, 1)


def test_parity_rectangles_shape():
    r = parity_rectangles(2)
    assert r["E"] == (-2, -2, 3, 2) and r["W"] == (-3, -2, 2, 2)
    assert r["N"] == (-2, -2, 2, 3) and r["S"] == (-2, -3, 2, 2)


def test_parity_events_on_checkerboards():
    box = Region.box(4)
    odd = Configuration.from_rule(box, BoundaryRule("odd"))
    even = Configuration.from_rule(box, BoundaryRule("even"))
    assert is_m_odd(odd, 2) and not is_m_even(odd, 2)
    assert is_m_even(even, 2) and not is_m_odd(even, 2)


@pytest.mark.parametrize("boundary", ["even", "odd"])
def test_parity_dp_matches_pattern_enumeration(boundary):
    n, m, lam = 3, 1, 2
    box = Region.box(n)
    outside = Configuration.from_rule(box, BoundaryRule(boundary))
    cond = mhc_conditional(box, outside, lam)
    odd = even = total = 0
    for p, w in zip(cond.patterns, cond.weights):
        cfg = embed(outside, box, p)
        total += w
        odd += w * is_m_odd(cfg, m)
        even += w * is_m_even(cfg, m)
    assert parity_weights(n, m, lam, boundary) == {"total": total, "odd": odd, "even": even}


def test_parity_translation_swaps_boundaries():
    for lam in (2, 8):
        shifted = parity_probability(3, 1, lam, "even", center=(1, 0))["exact"]
        odd = parity_probability(3, 1, lam, "odd")["exact"]
        assert shifted == 1 - odd


def test_parity_ordering_at_high_activity():
    pe = parity_probability(4, 2, 8, "even")
    po = parity_probability(4, 2, 8, "odd")
    assert pe["method"] == "exact" and isinstance(pe["exact"], Fraction)
    assert pe["value"] < po["value"]
    with pytest.raises(ValueError):
        parity_probability(2, 2, 1, "even")


def test_block_heat_bath_agrees_with_exact():
    exact = parity_probability(3, 1, 2, "even")["value"]
    est = parity_mcmc(3, 1, 2.0, "even", sweeps=1500, burn=150, seed=4)
    assert est["method"] == "empirical"
    assert est["value"] == pytest.approx(exact, abs=0.08)
