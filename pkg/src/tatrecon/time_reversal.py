"""Modified back projection A and the error operator K = Id - A chi Lambda.

A solves the wave equation backwards on Omega alone: terminal pressure is the
harmonic extension of the data at t = T, terminal velocity is zero, and the
data are imposed as Dirichlet values on the boundary nodes at every step.
The backward problem is run forward in the reversed time s = T - t.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .elliptic import solve_dirichlet
from .grid import ScalarField
from .wave import (DEFAULT_CFL, BoundaryTrace, LeapfrogKernel, PMLProfile, WaveState,
                   forward_measure)


def _boundary_series(trace: BoundaryTrace, T: float, dt: float) -> tuple:
    """Masked data at reversed times s_k = k*dt, k = 0..n (row k is h(T - s_k))."""
    data = trace.masked_values()
    if dt is None or np.isclose(dt, trace.dt, rtol=1e-12):
        n = int(round(T / trace.dt))
        if not np.isclose(n * trace.dt, T, rtol=1e-9, atol=1e-12):
            raise ValueError("T must be a whole number of trace steps")
        return data[n::-1], trace.dt
    n = int(np.ceil(T / dt - 1e-9))
    dt = T / n
    t = T - dt * np.arange(n + 1)
    pos = t / trace.dt
    k = np.clip(np.floor(pos).astype(int), 0, trace.n_t - 1)
    w = (pos - k)[:, None]
    return (1 - w) * data[k] + w * data[k + 1], dt


def time_reverse(trace: BoundaryTrace, c: ScalarField, T: Optional[float] = None,
                 dt: Optional[float] = None) -> ScalarField:
    """Apply A to (the masked) ``trace``; returns v(0) on Omega, zero outside."""
    grid = c.grid
    rows, cols = grid.boundary_indices()
    if trace.values.shape[1] != rows.size:
        raise ValueError("trace does not match the grid boundary")
    if T is None:
        T = trace.T
    if T <= 0 or T > trace.T * (1 + 1e-9):
        raise ValueError(f"T = {T} outside the trace duration {trace.T}")
    series, dt = _boundary_series(trace, T, dt)
    js, is_ = grid.omega_slices
    r, q = rows - js.start, cols - is_.start

    ring = np.zeros((js.stop - js.start, is_.stop - is_.start))
    ring[r, q] = series[0]
    u = solve_dirichlet(ring, grid.h)
    kernel = LeapfrogKernel(c.data[js, is_], grid.h, dt)
    my, mx = u.shape
    s = WaveState(u, np.zeros_like(u), np.zeros((my, mx - 1)), np.zeros((my - 1, mx)))
    g = kernel.gradients(s)
    for k in range(1, series.shape[0]):
        kernel.kick(s, *g)
        kernel.drift(s)
        s.u_x[r, q] = series[k]
        g = kernel.gradients(s)
        kernel.kick(s, *g)
    out = np.zeros(grid.shape)
    out[js, is_] = s.u_x
    return ScalarField(grid, out)


def apply_error_operator(f: ScalarField, c: ScalarField, T: float,
                         pml: Optional[PMLProfile] = None, mask=None,
                         cfl: float = DEFAULT_CFL) -> ScalarField:
    """K f = f - A(chi * Lambda f)."""
    trace = forward_measure(f, c, T, pml, cfl=cfl, mask=mask)
    return f - time_reverse(trace, c, T)
