import itertools
import math

import numpy as np
import pytest

from recoverable.dynamics import (UpdateToken, c_beta, coalescence_experiment, coalescence_time, entropy_crossover,
                                  entropy_exact, entropy_lower_bound, error_prob_bounds, exact_gibbs,
                                  extreme_starts, glauber_operator, glauber_step, mixing_bound,
                                  one_step_contraction, token_stream)
from recoverable.lattice import BoundaryRule, Configuration, Region, hamiltonian, one_vertex_prob


def test_token_stream_reproducible():
    r = Region.window(0, 0, 3, 3)
    a = list(itertools.islice(token_stream(r, 7), 50))
    b = list(itertools.islice(token_stream(r, 7), 50))
    c = list(itertools.islice(token_stream(r, 8), 50))
    assert a == b and a != c
    assert all(r.contains(t.w) and 0 <= t.u < 1 for t in a)


@pytest.mark.parametrize("torus", [False, True])
def test_glauber_step_uses_local_conditional(rng, torus):
    r = Region.torus(6, 6) if torus else Region.window(0, 0, 5, 5)
    beta = 0.4
    for _ in range(30):
        cfg = Configuration(r, rng.integers(0, 2, size=r.shape), BoundaryRule("odd"))
        w = r.sites()[rng.integers(len(r))]
        p0, _ = one_vertex_prob(cfg, w, beta)
        assert glauber_step(cfg, UpdateToken(w, p0 - 1e-9), beta).query(w) == 0
        assert glauber_step(cfg, UpdateToken(w, p0 + 1e-9), beta).query(w) == 1


def test_mixing_bound_formula_and_guards():
    c = c_beta(0.01)
    assert c == pytest.approx(13 - 24 / (1 + math.exp(-0.1)))
    assert mixing_bound(64, 0.01, 0.05) == math.ceil(64 / c * (math.log(64) + math.log(20)))
    with pytest.raises(ValueError):
        mixing_bound(64, 0.1, 0.05)
    with pytest.raises(ValueError):
        mixing_bound(64, 0.01, 1.5)


def test_coalescence_is_absorbing():
    r = Region.window(0, 0, 4, 4)
    x, y = extreme_starts(r, BoundaryRule("even"))
    assert coalescence_time(x, x, 0.01, 0) == 0
    t = coalescence_time(x, y, 0.01, 3, tail=2000)
    assert t is not None and t > 0
    out = coalescence_experiment(4, 4, 0.01, range(5))
    assert out["timeouts"] == 0 and len(out["times"]) == 5


def test_one_step_contraction_small_sample():
    r = Region.window(0, 0, 7, 7)
    out = one_step_contraction(r, 0.01, 20000, seed=1)
    assert out["bound"] == pytest.approx(-c_beta(0.01) / 64)
    assert out["mean"] <= out["bound"] + 3 * out["sigma"]


@pytest.mark.parametrize("boundary", ["even", "odd", "zero"])
def test_exact_gibbs_matches_hamiltonian(boundary):
    r = Region.window(0, 0, 1, 2)
    beta = 0.6
    g = exact_gibbs(r, beta, BoundaryRule(boundary))
    w = np.array([math.exp(-hamiltonian(g.configuration(c), r, beta)) for c in range(1 << len(r))])
    assert np.allclose(g.probs, w / w.sum(), atol=1e-14)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.5])
def test_exact_gibbs_is_glauber_stationary(beta):
    g = exact_gibbs(Region.window(0, 0, 2, 2), beta)
    assert np.max(np.abs(glauber_operator(g) - g.probs)) < 1e-12
    gt = exact_gibbs(Region.torus(3, 3), beta)
    assert np.max(np.abs(glauber_operator(gt) - gt.probs)) < 1e-12


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_error_probability_sandwich(beta):
    exact, upper, lower = error_prob_bounds(Region.window(0, 0, 3, 3), beta, (1, 1))
    assert lower <= exact <= upper


def test_entropy_bound_branches():
    h0 = 0.3012
    assert entropy_lower_bound(0.0, h0) == (1.0, "flat")
    assert entropy_lower_bound(5.0, h0)[0] == pytest.approx(h0, abs=1e-3)
    root, closed = entropy_crossover(h0)
    assert root == pytest.approx(closed, abs=1e-6)
    assert entropy_lower_bound(root - 1e-3, h0)[1] == "flat"
    assert entropy_lower_bound(root + 1e-3, h0)[1] == "ground"
    with pytest.raises(ValueError):
        entropy_lower_bound(-0.1, h0)


def test_exact_entropy_at_zero_coupling_is_one_bit():
    assert entropy_exact(Region.window(0, 0, 2, 2), 0.0) == pytest.approx(1.0)
    assert entropy_exact(Region.window(0, 0, 2, 2), 3.0) < 0.5
