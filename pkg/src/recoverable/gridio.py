"""Plain-text configuration files.

Header line:  ``window x0 y0 x1 y1 boundary=<even|odd|zero|periodic:FILE>``
or            ``torus W H``
followed by one line of 0/1 characters per row, top row (largest y) first.
A periodic boundary file holds just the rows of its tile in the same layout.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .lattice import BoundaryRule, Configuration, Region


def _rows_to_bits(rows: list[str], width: int, height: int) -> np.ndarray:
    rows = [r.strip() for r in rows if r.strip()]
    if len(rows) != height or any(len(r) != width for r in rows):
        raise ValueError(f"expected {height} rows of {width} characters")
    if any(c not in "01" for r in rows for c in r):
        raise ValueError("rows may only contain 0 and 1")
    # rows run top to bottom; bits are indexed [x, y] with y upward
    return np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)[::-1].T.copy()


def _bits_to_rows(bits: np.ndarray) -> list[str]:
    return ["".join(str(int(v)) for v in row) for row in bits.T[::-1]]


def read_tile(path) -> np.ndarray:
    rows = [r for r in Path(path).read_text().splitlines() if r.strip()]
    return _rows_to_bits(rows, len(rows[0].strip()), len(rows))


def parse_grid(text: str, base: Path | None = None) -> Configuration:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError("empty grid")
    head = lines[0].split()
    if head[0] == "torus":
        w, h = int(head[1]), int(head[2])
        region = Region.torus(w, h)
        return Configuration(region, _rows_to_bits(lines[1:], w, h), BoundaryRule("zero"))
    if head[0] != "window" or len(head) < 5:
        raise ValueError("header must start with 'window x0 y0 x1 y1' or 'torus W H'")
    x0, y0, x1, y1 = map(int, head[1:5])
    boundary = BoundaryRule("zero")
    for tok in head[5:]:
        key, _, val = tok.partition("=")
        if key != "boundary":
            raise ValueError(f"unknown header field {key!r}")
        if val.startswith("periodic:"):
            tile = Path(val.split(":", 1)[1])
            if base is not None and not tile.is_absolute():
                tile = base / tile
            boundary = BoundaryRule.periodic(read_tile(tile))
        else:
            boundary = BoundaryRule(val)
    region = Region.window(x0, y0, x1, y1)
    return Configuration(region, _rows_to_bits(lines[1:], region.width, region.height), boundary)


def read_grid(path) -> Configuration:
    path = Path(path)
    return parse_grid(path.read_text(), path.parent)


def format_grid(cfg: Configuration, tile_name: str = "tile.txt") -> str:
    r = cfg.region
    if r.is_torus:
        head = f"torus {r.width} {r.height}"
    else:
        kind = cfg.boundary.kind
        b = f"periodic:{tile_name}" if kind == "periodic" else kind
        head = f"window {r.x0} {r.y0} {r.x1} {r.y1} boundary={b}"
    return "\n".join([head] + _bits_to_rows(cfg.bits)) + "\n"


def write_grid(cfg: Configuration, path) -> None:
    """Write a grid file; a periodic boundary tile goes next to it as <stem>.tile."""
    path = Path(path)
    tile = path.with_suffix(".tile")
    path.write_text(format_grid(cfg, tile.name))
    if cfg.boundary.kind == "periodic":
        tile.write_text("\n".join(_bits_to_rows(np.asarray(cfg.boundary.pattern))) + "\n")
