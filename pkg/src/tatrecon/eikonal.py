"""Fast sweeping for ``c |grad T| = 1`` with ``T = 0`` on a boundary subset.

Travel times are computed inside the discrete Omega only (paths do not leave
it); nodes outside Omega are reported as 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .grid import Grid2D, Region, ScalarField

SIDES = ("S", "E", "N", "W")


@numba.njit(cache=True)
def _sweep(T, slowness, fixed, h, order):
    ny, nx = T.shape
    big = np.inf
    change = 0.0
    if order == 0:
        j0, j1, dj, i0, i1, di = 0, ny, 1, 0, nx, 1
    elif order == 1:
        j0, j1, dj, i0, i1, di = 0, ny, 1, nx - 1, -1, -1
    elif order == 2:
        j0, j1, dj, i0, i1, di = ny - 1, -1, -1, nx - 1, -1, -1
    else:
        j0, j1, dj, i0, i1, di = ny - 1, -1, -1, 0, nx, 1
    for j in range(j0, j1, dj):
        for i in range(i0, i1, di):
            if fixed[j, i]:
                continue
            a = big
            if i > 0:
                a = T[j, i - 1]
            if i < nx - 1 and T[j, i + 1] < a:
                a = T[j, i + 1]
            b = big
            if j > 0:
                b = T[j - 1, i]
            if j < ny - 1 and T[j + 1, i] < b:
                b = T[j + 1, i]
            fh = slowness[j, i] * h
            if a == big and b == big:
                continue
            if abs(a - b) >= fh:
                new = min(a, b) + fh
            else:
                new = 0.5 * (a + b + np.sqrt(2.0 * fh * fh - (a - b) ** 2))
            if new < T[j, i]:
                d = T[j, i] - new if T[j, i] < big else big
                if d > change:
                    change = d
                T[j, i] = new
    return change


@dataclass
class SweepInfo:
    sweeps: int = 0          # full passes over the four orderings
    last_change: float = 0.0


def boundary_mask(grid: Grid2D, sides="all") -> np.ndarray:
    """Boolean mask over Omega's boundary nodes (``grid.boundary_indices`` order)
    selecting the given sides, a string or iterable drawn from N, S, E, W."""
    if sides == "all":
        sides = SIDES
    sides = {s.upper() for s in sides}
    unknown = sides - set(SIDES)
    if unknown:
        raise ValueError(f"unknown sides {sorted(unknown)}")
    rows, cols = grid.boundary_indices()
    i0, i1, j0, j1 = grid.omega_slice_bounds
    sel = np.zeros(rows.size, dtype=bool)
    if "S" in sides:
        sel |= rows == j0
    if "N" in sides:
        sel |= rows == j1
    if "W" in sides:
        sel |= cols == i0
    if "E" in sides:
        sel |= cols == i1
    return sel


def fast_sweep(c: ScalarField, gamma, tol: float = 1e-10, max_sweeps: int = 200,
               info: SweepInfo | None = None) -> ScalarField:
    """Travel time to ``gamma`` (boolean mask over boundary nodes, or sides)."""
    grid = c.grid
    if isinstance(gamma, str) or (len(gamma) and isinstance(next(iter(gamma)), str)):
        gamma = boundary_mask(grid, gamma)
    gamma = np.asarray(gamma, dtype=bool)
    rows, cols = grid.boundary_indices()
    if gamma.shape != rows.shape:
        raise ValueError("gamma must have one entry per boundary node")
    if not gamma.any():
        raise ValueError("gamma is empty")
    if np.any(c.data <= 0):
        raise ValueError("speed must be positive")
    js, is_ = grid.omega_slices
    slowness = 1.0 / c.data[js, is_]
    T = np.full(slowness.shape, np.inf)
    fixed = np.zeros(slowness.shape, dtype=bool)
    r, q = rows[gamma] - js.start, cols[gamma] - is_.start
    T[r, q] = 0.0
    fixed[r, q] = True
    info = info if info is not None else SweepInfo()
    while True:
        change = 0.0
        for order in range(4):
            change = max(change, _sweep(T, slowness, fixed, grid.h, order))
        info.sweeps += 1
        info.last_change = change
        if change < tol:
            break
        if info.sweeps >= max_sweeps:
            raise RuntimeError(f"fast sweeping did not converge, last change {change:.3e}")
    out = np.zeros(grid.shape)
    out[js, is_] = T
    return ScalarField(grid, out)


def critical_time(traveltime: ScalarField, region: Region | None = None) -> float:
    """Largest travel time over the region (Omega by default)."""
    if region is None:
        region = Region.omega(traveltime.grid)
    return float(traveltime.data[region.mask].max())
