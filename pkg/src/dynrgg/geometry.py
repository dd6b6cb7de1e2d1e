"""Unit-torus coordinates, distances and the cell-grid neighbour index."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

# Below this many cells per axis the 3x3 stencil overlaps itself.
MIN_CELLS_PER_AXIS = 3


def cells_per_axis(r: float) -> int:
    """floor(1/r), nudged down if rounding would make cells narrower than r."""
    if r > 1.0:
        return 0
    m = int(math.floor(1.0 / r))
    while m > 0 and 1.0 / m < r:
        m -= 1
    return m


def grid_cells(r: float, n: int) -> int:
    """Cells per axis for the compiled pair search.

    Any count up to ``cells_per_axis(r)`` keeps cells at least ``r`` wide, so
    the count is capped near ``2*sqrt(n)`` to keep memory linear in ``n``
    when ``r`` is tiny.
    """
    return min(cells_per_axis(r), max(MIN_CELLS_PER_AXIS, 2 * math.isqrt(n) + 1))


def wrap(v):
    """Canonical representative of ``v`` modulo 1, in ``[0, 1)``.

    Works on scalars and arrays. Non-finite input raises ``ValueError``.
    """
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap() needs finite coordinates")
    out = arr - np.floor(arr)
    # v - floor(v) rounds to 1.0 for tiny negative v
    out = np.where(out >= 1.0, 0.0, out) + 0.0
    if np.ndim(v) == 0:
        return float(out)
    return out


def torus_distance(a, b) -> float:
    """Euclidean distance on the unit torus between points ``a`` and ``b``."""
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    dx = min(dx, 1.0 - dx)
    dy = min(dy, 1.0 - dy)
    return math.sqrt(dx * dx + dy * dy)


def torus_distances(points, p) -> np.ndarray:
    """Vectorised distances from every row of ``points`` to the point ``p``."""
    pts = np.asarray(points, dtype=float)
    d = np.abs(pts - np.asarray(p, dtype=float))
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1])


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.size and (pts.min() < 0.0 or pts.max() >= 1.0):
        raise ValueError("points must be canonical torus coordinates in [0, 1)")
    return pts


@dataclass
class CellGrid:
    """Buckets of point indices on a ``cells_per_axis`` square grid.

    When ``brute_force`` is set the grid is too coarse for a 3x3 stencil and
    queries fall back to scanning every point.
    """

    cell_side: float
    cells_per_axis: int
    n_points: int
    brute_force: bool = False
    buckets: dict[tuple[int, int], list[int]] = field(default_factory=dict)

    @property
    def actual_cell_side(self) -> float:
        return 1.0 / self.cells_per_axis if self.cells_per_axis else 1.0

    def cell_of(self, p) -> tuple[int, int]:
        m = self.cells_per_axis
        return (min(int(p[0] * m), m - 1), min(int(p[1] * m), m - 1))


def build_cell_grid(points, r: float) -> CellGrid:
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    pts = as_points(points)
    m = cells_per_axis(r)
    grid = CellGrid(cell_side=r, cells_per_axis=m, n_points=len(pts),
                    brute_force=m < MIN_CELLS_PER_AXIS)
    if grid.brute_force:
        return grid
    for i, p in enumerate(pts):
        grid.buckets.setdefault(grid.cell_of(p), []).append(i)
    return grid


def neighbors_within(grid: CellGrid, points, i: int, r: float) -> list[int]:
    """Sorted indices ``j != i`` with torus distance at most ``r`` from point ``i``."""
    pts = as_points(points)
    if not 0 <= i < len(pts):
        raise IndexError(f"point index {i} out of range for {len(pts)} points")
    if grid.brute_force:
        candidates = range(len(pts))
    else:
        if r > grid.actual_cell_side:
            raise ValueError("grid cells are narrower than the query radius")
        m = grid.cells_per_axis
        cx, cy = grid.cell_of(pts[i])
        candidates = []
        for ox in (-1, 0, 1):
            for oy in (-1, 0, 1):
                candidates.extend(grid.buckets.get(((cx + ox) % m, (cy + oy) % m), ()))
    return sorted(j for j in candidates
                  if j != i and torus_distance(pts[i], pts[j]) <= r)


def pairs_within(points, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Every pair ``i < j`` at torus distance at most ``r``, sorted lexicographically.

    This is the bulk path used by graph construction; it uses the same cell
    grid layout as :func:`build_cell_grid`, compiled.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    pts = as_points(points)
    xs = np.ascontiguousarray(pts[:, 0])
    ys = np.ascontiguousarray(pts[:, 1])
    m = grid_cells(r, len(pts))
    if m < MIN_CELLS_PER_AXIS:
        ei, ej = _kernels.brute_pairs(xs, ys, float(r))
    else:
        ei, ej = _kernels.grid_pairs(xs, ys, float(r), m)
    order = np.argsort(ei * max(len(pts), 1) + ej)
    return ei[order], ej[order]
