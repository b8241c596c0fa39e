"""Brute-force oracles shared by the tests."""
import itertools
import sys

import numpy as np
import pytest

from recoverable.lattice import Configuration, Region, is_maximal


def all_patterns(w: int, h: int) -> np.ndarray:
    """Every 0/1 array of shape (w, h), stacked along axis 0."""
    n = w * h
    codes = np.arange(1 << n)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8).reshape(-1, w, h)


def brute_mis_count(m: int, n: int) -> int:
    """MIS of the m x n grid graph, by checking all 2^(mn) subsets."""
    arr = all_patterns(n, m).astype(bool)
    pad = np.zeros((arr.shape[0], n + 2, m + 2), dtype=bool)
    pad[:, 1:-1, 1:-1] = arr
    nb = pad[:, 2:, 1:-1] | pad[:, :-2, 1:-1] | pad[:, 1:-1, 2:] | pad[:, 1:-1, :-2]
    independent = ~np.any(arr & nb, axis=(1, 2))
    dominated = np.all(arr | nb, axis=(1, 2))
    return int(np.sum(independent & dominated))


def brute_torus_mis_codes(w: int, h: int, chunk: int = 1 << 22) -> np.ndarray:
    """Codes (bit y*w + x) of every MIS on the w x h torus, checking all 2^(wh) subsets."""
    n = w * h
    full = np.int64((1 << n) - 1)
    first = np.int64(sum(1 << (y * w) for y in range(h)))
    last = np.int64(sum(1 << (y * w + w - 1) for y in range(h)))
    out = []
    for lo in range(0, 1 << n, chunk):
        c = np.arange(lo, min(lo + chunk, 1 << n), dtype=np.int64)
        east = ((c & ~last) << 1) | ((c & last) >> (w - 1))
        west = ((c & ~first) >> 1) | ((c & first) << (w - 1))
        north = ((c << w) | (c >> (w * (h - 1)))) & full
        south = ((c >> w) | (c << (w * (h - 1)))) & full
        nb = east | west | north | south
        ok = ((c & nb) == 0) & ((c | nb) == full)
        out.append(c[ok])
    return np.concatenate(out)


def code_to_bits(code: int, w: int, h: int) -> np.ndarray:
    return np.array([[(int(code) >> (y * w + x)) & 1 for y in range(h)] for x in range(w)], dtype=np.uint8)


def brute_mis(region: Region, boundary=None) -> list:
    """Every in-window pattern that is an MIS of the window (slow, tiny regions only)."""
    out = []
    for bits in itertools.product((0, 1), repeat=len(region)):
        cfg = Configuration(region, np.array(bits, dtype=np.uint8).reshape(region.shape), boundary)
        if is_maximal(cfg):
            out.append(cfg)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.line(k))
