"""Staggered-grid acoustic solver with a split-field perfectly matched layer.

First-order system, per direction eta in {x, y}::

    dv_eta/dt + w_eta v_eta       = -du/d eta
    du^(eta)/dt + w_eta u^(eta)   = -c^2 dv_eta/d eta,    u = u^(x) + u^(y)

Pressure lives on nodes, ``v_x`` on x-edges (i+1/2, j), ``v_y`` on y-edges
(i, j+1/2).  Time stepping is kick-drift-kick leapfrog, so a state carries the
velocity at the same instant as the pressure; the damping terms are treated
half-implicitly.  The outermost node ring is never updated by the kernel: it
is pinned to zero on the box and to the boundary data in the time-reversal
solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grid import Grid2D, Region, ScalarField

CFL_LIMIT = 1.0 / math.sqrt(2.0)
DEFAULT_CFL = 0.5


def pml_loss(s, sigma: float, b: float):
    """Loss profile on the rescaled coordinate ``s`` in [0, 1]."""
    if not 0.0 < sigma < 0.5:
        raise ValueError("sigma must lie in (0, 1/2)")
    if b <= 0:
        raise ValueError("b must be positive")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < -1e-12) or np.any(s_arr > 1 + 1e-12):
        raise ValueError("s must lie in [0, 1]")
    left = (b / sigma) * ((s_arr - sigma) / sigma) ** 2
    right = (b / sigma) * ((s_arr - 1.0 + sigma) / sigma) ** 2
    out = np.where(s_arr <= sigma, left, np.where(s_arr >= 1.0 - sigma, right, 0.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class PMLProfile:
    sigma: float
    b: float
    omega_x: np.ndarray        # at node columns, length nx
    omega_y: np.ndarray        # at node rows, length ny
    omega_x_half: np.ndarray   # at x-edges, length nx - 1
    omega_y_half: np.ndarray   # at y-edges, length ny - 1

    @classmethod
    def for_grid(cls, grid: Grid2D, sigma: Optional[float] = None, b: float = 100.0) -> "PMLProfile":
        """Profile whose absorbing collar starts at the edge of Omega.

        With the default box and Omega this gives sigma = 0.22/3 = 0.0733."""
        if sigma is None:
            sigma = (grid.omega[0] - grid.x_min) / (grid.x_max - grid.x_min)
        Lx, Ly = grid.x_max - grid.x_min, grid.y_max - grid.y_min
        sx = (grid.x - grid.x_min) / Lx
        sy = (grid.y - grid.y_min) / Ly
        sxh = (sx[:-1] + sx[1:]) / 2
        syh = (sy[:-1] + sy[1:]) / 2
        # ω has units 1/time on the unit interval; rescale to the physical length
        return cls(sigma, b,
                   pml_loss(sx, sigma, b) / Lx, pml_loss(sy, sigma, b) / Ly,
                   pml_loss(sxh, sigma, b) / Lx, pml_loss(syh, sigma, b) / Ly)

    @classmethod
    def none(cls, grid: Grid2D) -> "PMLProfile":
        return cls(0.0, 0.0, np.zeros(grid.nx), np.zeros(grid.ny),
                   np.zeros(grid.nx - 1), np.zeros(grid.ny - 1))

    @property
    def active(self) -> bool:
        return bool(self.omega_x.any() or self.omega_y.any())


@dataclass(frozen=True, eq=False)
class WaveState:
    u_x: np.ndarray
    u_y: np.ndarray
    v_x: np.ndarray
    v_y: np.ndarray
    t: float = 0.0

    @property
    def u(self) -> np.ndarray:
        return self.u_x + self.u_y

    @classmethod
    def at_rest(cls, f: np.ndarray) -> "WaveState":
        ny, nx = f.shape
        return cls(f / 2.0, f / 2.0, np.zeros((ny, nx - 1)), np.zeros((ny - 1, nx)))

    def copy(self) -> "WaveState":
        return WaveState(self.u_x.copy(), self.u_y.copy(), self.v_x.copy(), self.v_y.copy(), self.t)


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    """Pressure on the boundary nodes of Omega, ``values[k, p] = h(k*dt, p)``."""

    dt: float
    values: np.ndarray              # (n_t + 1, n_boundary)
    points: np.ndarray              # (n_boundary, 2)
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.points):
            raise ValueError("trace values must be (n_t + 1, n_boundary)")
        mask = np.ones(values.shape[1]) if self.mask is None else np.asarray(self.mask, dtype=float)
        if mask.shape != (values.shape[1],) or np.any(mask < 0) or np.any(mask > 1):
            raise ValueError("mask must hold one value in [0, 1] per boundary node")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @property
    def n_t(self) -> int:
        return self.values.shape[0] - 1

    @property
    def T(self) -> float:
        return self.n_t * self.dt

    @property
    def partial(self) -> bool:
        return bool(np.any(self.mask < 1.0))

    def masked_values(self) -> np.ndarray:
        return self.values * self.mask

    def with_values(self, values) -> "BoundaryTrace":
        return BoundaryTrace(self.dt, values, self.points, self.mask)

    def with_mask(self, mask) -> "BoundaryTrace":
        return BoundaryTrace(self.dt, self.values, self.points, mask)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __mul__(self, alpha):
        return self.with_values(self.values * alpha)

    __rmul__ = __mul__


def stable_dt(h: float, c_max: float, cfl: float = DEFAULT_CFL) -> float:
    return cfl * h / c_max


def time_grid(T: float, h: float, c_max: float, cfl: float = DEFAULT_CFL) -> tuple:
    """Step count and step size with ``n_t * dt == T`` and ``dt <= cfl*h/c_max``."""
    if T <= 0:
        raise ValueError("T must be positive")
    n_t = int(math.ceil(T / stable_dt(h, c_max, cfl) - 1e-9))
    return n_t, T / n_t


class LeapfrogKernel:
    """In-place kick-drift-kick updates on raw arrays.

    Only the interior nodes ``[1:-1, 1:-1]`` of the pressure are advanced.
    """

    def __init__(self, c: np.ndarray, h: float, dt: float, pml: Optional[PMLProfile] = None):
        c = np.asarray(c, dtype=float)
        if c.max() * dt / h >= CFL_LIMIT:
            raise ValueError(f"CFL violated: c_max*dt/h = {c.max() * dt / h:.3f} >= {CFL_LIMIT:.3f}")
        self.h, self.dt = h, dt
        self.c2 = (c * c)[1:-1, 1:-1]
        self.split = pml is not None and pml.active
        kick = 0.5 * dt
        if self.split:
            wxh = pml.omega_x_half[None, :]
            wyh = pml.omega_y_half[:, None]
            self.ax = (1 - wxh * kick / 2) / (1 + wxh * kick / 2)
            self.bx = (kick / h) / (1 + wxh * kick / 2)
            self.ay = (1 - wyh * kick / 2) / (1 + wyh * kick / 2)
            self.by = (kick / h) / (1 + wyh * kick / 2)
            wx = pml.omega_x[None, 1:-1]
            wy = pml.omega_y[1:-1, None]
            self.aux = (1 - wx * dt / 2) / (1 + wx * dt / 2)
            self.bux = (dt / h) * self.c2 / (1 + wx * dt / 2)
            self.auy = (1 - wy * dt / 2) / (1 + wy * dt / 2)
            self.buy = (dt / h) * self.c2 / (1 + wy * dt / 2)
        else:
            self.bx = self.by = kick / h
            self.bu = (dt / h) * self.c2

    def kick(self, s: WaveState, gx: np.ndarray, gy: np.ndarray) -> None:
        """Half-step velocity update from pressure differences ``gx``, ``gy``."""
        if self.split:
            s.v_x[...] = self.ax * s.v_x - self.bx * gx
            s.v_y[...] = self.ay * s.v_y - self.by * gy
        else:
            s.v_x[...] -= self.bx * gx
            s.v_y[...] -= self.by * gy

    def drift(self, s: WaveState) -> None:
        dvx = s.v_x[1:-1, 1:] - s.v_x[1:-1, :-1]
        dvy = s.v_y[1:, 1:-1] - s.v_y[:-1, 1:-1]
        if self.split:
            ux = s.u_x[1:-1, 1:-1]
            uy = s.u_y[1:-1, 1:-1]
            ux[...] = self.aux * ux - self.bux * dvx
            uy[...] = self.auy * uy - self.buy * dvy
        else:
            s.u_x[1:-1, 1:-1] -= self.bu * (dvx + dvy)

    @staticmethod
    def gradients(s: WaveState) -> tuple:
        u = s.u_x + s.u_y
        return np.diff(u, axis=1), np.diff(u, axis=0)


def step(state: WaveState, c: ScalarField, pml: PMLProfile, dt: float) -> WaveState:
    """One leapfrog step; returns a new state (the input is not modified)."""
    kernel = LeapfrogKernel(c.data, c.grid.h, dt, pml)
    s = state.copy()
    kernel.kick(s, *kernel.gradients(s))
    kernel.drift(s)
    kernel.kick(s, *kernel.gradients(s))
    return replace(s, t=state.t + dt)


def run(state: WaveState, c: ScalarField, pml: PMLProfile, dt: float, n_steps: int) -> WaveState:
    """Advance ``n_steps`` steps, reusing the pressure differences between steps."""
    kernel = LeapfrogKernel(c.data, c.grid.h, dt, pml)
    s = state.copy()
    g = kernel.gradients(s)
    for _ in range(n_steps):
        kernel.kick(s, *g)
        kernel.drift(s)
        g = kernel.gradients(s)
        kernel.kick(s, *g)
    return replace(s, t=state.t + n_steps * dt)


def check_support(f: ScalarField, tol: float = 0.0) -> None:
    outside = ~Region.omega(f.grid).mask
    if np.any(np.abs(f.data[outside]) > tol):
        raise ValueError("source must vanish outside Omega")


def forward_measure(f: ScalarField, c: ScalarField, T: float, pml: Optional[PMLProfile] = None,
                    cfl: float = DEFAULT_CFL, mask=None) -> BoundaryTrace:
    """Boundary trace of the solution with initial pressure ``f`` and zero velocity."""
    if T <= 0:
        raise ValueError("T must be positive")
    grid = f.grid
    if c.grid != grid:
        raise ValueError("speed and source grids differ")
    check_support(f)
    if pml is None:
        pml = PMLProfile.for_grid(grid)
    n_t, dt = time_grid(T, grid.h, float(c.data.max()), cfl)
    rows, cols = grid.boundary_indices()
    kernel = LeapfrogKernel(c.data, grid.h, dt, pml)
    s = WaveState.at_rest(f.data.copy())
    if not kernel.split:
        s = WaveState(f.data.copy(), np.zeros(grid.shape), s.v_x, s.v_y)
    values = np.empty((n_t + 1, len(rows)))
    values[0] = f.data[rows, cols]
    g = kernel.gradients(s)
    for k in range(1, n_t + 1):
        kernel.kick(s, *g)
        kernel.drift(s)
        g = kernel.gradients(s)
        kernel.kick(s, *g)
        values[k] = s.u_x[rows, cols] + s.u_y[rows, cols]
    return BoundaryTrace(dt, values, grid.boundary_points(), mask)


def energy(state: WaveState, c: ScalarField, region: Region) -> float:
    """Discrete energy ``sum(|grad u|^2 + c^-2 |u_t|^2) h^2`` over ``region``.

    ``u_t = -c^2 div v`` on nodes the scheme advances; pinned edge nodes have
    ``u_t = 0``.  The gradient term is the edge form used by ``hd_norm``.
    """
    from .grid import _dirichlet_sum

    u = state.u
    if u.shape != c.data.shape:
        raise ValueError("state and speed grids differ")
    h = c.grid.h
    ut = np.zeros_like(u)
    div = ((state.v_x[1:-1, 1:] - state.v_x[1:-1, :-1])
           + (state.v_y[1:, 1:-1] - state.v_y[:-1, 1:-1])) / h
    ut[1:-1, 1:-1] = -c.data[1:-1, 1:-1] ** 2 * div
    kinetic = np.sum((ut[region.mask] / c.data[region.mask]) ** 2) * h * h
    return _dirichlet_sum(u, region.mask) + float(kinetic)
