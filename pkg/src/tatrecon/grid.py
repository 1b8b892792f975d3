"""Uniform node grids, scalar fields, sound speeds and the discrete norms.

Arrays are stored with shape ``(ny, nx)``: row ``j`` is the line ``y = y_min + j*h``,
column ``i`` is ``x = x_min + i*h``.  Flattening in C order gives the row-major
layout used by the binary field format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

OMEGA_HALF_WIDTH = 1.28
BOX_HALF_WIDTH = 1.5

SPEED_KINDS = ("c1", "c2", "c3", "c4", "c5", "constant", "custom")
SMOOTH_KINDS = ("c1", "c2", "c3", "constant", "custom")


@dataclass(frozen=True)
class Grid2D:
    nx: int
    ny: int
    x_min: float = -BOX_HALF_WIDTH
    x_max: float = BOX_HALF_WIDTH
    y_min: float = -BOX_HALF_WIDTH
    y_max: float = BOX_HALF_WIDTH
    # Omega as (x_lo, x_hi, y_lo, y_hi); snapped inward to the nearest nodes.
    omega: tuple = (-OMEGA_HALF_WIDTH, OMEGA_HALF_WIDTH, -OMEGA_HALF_WIDTH, OMEGA_HALF_WIDTH)

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per direction")
        hx = (self.x_max - self.x_min) / (self.nx - 1)
        hy = (self.y_max - self.y_min) / (self.ny - 1)
        if not math.isclose(hx, hy, rel_tol=1e-9):
            raise ValueError(f"cells must be square (hx={hx}, hy={hy})")
        ox0, ox1, oy0, oy1 = self.omega
        if not (self.x_min < ox0 < ox1 < self.x_max and self.y_min < oy0 < oy1 < self.y_max):
            raise ValueError("Omega must lie strictly inside the computational box")
        i0, i1, j0, j1 = self.omega_slice_bounds
        if i1 - i0 < 2 or j1 - j0 < 2:
            raise ValueError("Omega is not resolved by the grid")

    @classmethod
    def square(cls, n: int, half_width: float = BOX_HALF_WIDTH,
               omega_half_width: float = OMEGA_HALF_WIDTH) -> "Grid2D":
        a = omega_half_width
        return cls(n, n, -half_width, half_width, -half_width, half_width, (-a, a, -a, a))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y_min + self.h * np.arange(self.ny)

    def mesh(self) -> tuple:
        return np.meshgrid(self.x, self.y)

    @property
    def omega_slice_bounds(self) -> tuple:
        """Inclusive node index bounds ``(i0, i1, j0, j1)`` of the discrete Omega."""
        h = (self.x_max - self.x_min) / (self.nx - 1)
        ox0, ox1, oy0, oy1 = self.omega
        eps = 1e-9
        i0 = math.ceil((ox0 - self.x_min) / h - eps)
        i1 = math.floor((ox1 - self.x_min) / h + eps)
        j0 = math.ceil((oy0 - self.y_min) / h - eps)
        j1 = math.floor((oy1 - self.y_min) / h + eps)
        return i0, i1, j0, j1

    @property
    def omega_slices(self) -> tuple:
        i0, i1, j0, j1 = self.omega_slice_bounds
        return slice(j0, j1 + 1), slice(i0, i1 + 1)

    @property
    def omega_extent(self) -> tuple:
        """Physical bounds of the discrete Omega (node positions)."""
        i0, i1, j0, j1 = self.omega_slice_bounds
        h = self.h
        return (self.x_min + i0 * h, self.x_min + i1 * h,
                self.y_min + j0 * h, self.y_min + j1 * h)

    def boundary_indices(self) -> tuple:
        """Row/column indices of the boundary ring of Omega, counter-clockwise
        starting at the lower-left corner.  Each corner appears once."""
        i0, i1, j0, j1 = self.omega_slice_bounds
        rows, cols = [], []
        for i in range(i0, i1):              # south, west to east
            rows.append(j0), cols.append(i)
        for j in range(j0, j1):              # east, south to north
            rows.append(j), cols.append(i1)
        for i in range(i1, i0, -1):          # north, east to west
            rows.append(j1), cols.append(i)
        for j in range(j1, j0, -1):          # west, north to south
            rows.append(j), cols.append(i0)
        return np.array(rows), np.array(cols)

    def boundary_points(self) -> np.ndarray:
        rows, cols = self.boundary_indices()
        return np.column_stack([self.x_min + cols * self.h, self.y_min + rows * self.h])

    def sidecar(self) -> dict:
        return {"nx": self.nx, "ny": self.ny,
                "bounds": [self.x_min, self.x_max, self.y_min, self.y_max],
                "omega": list(self.omega)}

    @classmethod
    def from_sidecar(cls, meta: dict) -> "Grid2D":
        x0, x1, y0, y1 = meta["bounds"]
        omega = tuple(meta.get("omega", cls.__dataclass_fields__["omega"].default))
        return cls(int(meta["nx"]), int(meta["ny"]), x0, x1, y0, y1, omega)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != self.grid.shape:
            if data.size != self.grid.nx * self.grid.ny:
                raise ValueError(f"expected {self.grid.shape} values, got {data.shape}")
            data = data.reshape(self.grid.shape)
        if not np.all(np.isfinite(data)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def with_data(self, data) -> "ScalarField":
        return ScalarField(self.grid, data)

    def __add__(self, other):
        return self.with_data(self.data + _values(other))

    def __sub__(self, other):
        return self.with_data(self.data - _values(other))

    def __mul__(self, alpha):
        return self.with_data(self.data * _values(alpha))

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_data(-self.data)


def _values(obj):
    return obj.data if isinstance(obj, ScalarField) else obj


@dataclass(frozen=True, eq=False)
class Region:
    """A set of grid nodes.  ``Region.omega`` is the discrete Omega (closed)."""

    grid: Grid2D
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ValueError("region mask does not match the grid")
        object.__setattr__(self, "mask", mask)

    @classmethod
    def box(cls, grid: Grid2D) -> "Region":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def omega(cls, grid: Grid2D) -> "Region":
        mask = np.zeros(grid.shape, dtype=bool)
        mask[grid.omega_slices] = True
        return cls(grid, mask)

    @classmethod
    def square(cls, grid: Grid2D, x0: float, x1: float, y0: float, y1: float) -> "Region":
        X, Y = grid.mesh()
        eps = 1e-9
        return cls(grid, (X >= x0 - eps) & (X <= x1 + eps) & (Y >= y0 - eps) & (Y <= y1 + eps))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def boundary(self) -> "Region":
        """Nodes of the region with a 4-neighbour outside it (or on the grid edge)."""
        m = self.mask
        padded = np.pad(m, 1, constant_values=False)
        inner = (padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
        return Region(self.grid, m & ~inner)

    def interior(self) -> "Region":
        return Region(self.grid, self.mask & ~self.boundary().mask)

    def pml(self) -> "Region":
        return Region(self.grid, ~Region.omega(self.grid).mask)


# ---------------------------------------------------------------- speeds

def smoothstep(t):
    """Quintic smoothstep, C2, clipped to [0, 1]."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def smoothstep_deriv(t):
    inside = (t > 0.0) & (t < 1.0)
    t = np.clip(t, 0.0, 1.0)
    return np.where(inside, 30.0 * t * t * (t - 1.0) ** 2, 0.0)


def _ramp(x, y, outer, width):
    """Product ramp equal to 1 for max(|x|,|y|) <= outer - width and 0 outside
    the square of half-width ``outer``; returns value and gradient."""
    sx = (outer - np.abs(x)) / width
    sy = (outer - np.abs(y)) / width
    fx, fy = smoothstep(sx), smoothstep(sy)
    dfx = -np.sign(x) * smoothstep_deriv(sx) / width
    dfy = -np.sign(y) * smoothstep_deriv(sy) / width
    return fx * fy, dfx * fy, fx * dfy


def _c1(x, y):
    c = 1.0 + 0.2 * np.sin(2 * np.pi * x) + 0.1 * np.cos(2 * np.pi * y)
    cx = 0.4 * np.pi * np.cos(2 * np.pi * x)
    cy = -0.2 * np.pi * np.sin(2 * np.pi * y)
    return c, cx, cy


def _c2(x, y):
    r2 = x * x + y * y
    r = np.sqrt(r2)
    q = 9.0 * r2
    g = np.exp(-90.0 * r2)
    arg = 3.0 * r - 2.0
    k = np.exp(-10.0 * arg ** 2)
    c = q / (1.0 + q) + g - 0.4 * k
    # d/dr of each term, then chain rule; the k-term derivative is 0 at r=0 in the limit
    dq = 18.0 / (1.0 + q) ** 2                     # d(q/(1+q))/d(r2) * 2
    dg = -180.0 * g                                # d g / d(r2) * 2
    with np.errstate(invalid="ignore", divide="ignore"):
        dk_dr = -0.4 * k * (-20.0 * arg * 3.0)
        dk = np.where(r > 0, dk_dr / np.where(r > 0, r, 1.0), 0.0)
    coef = dq + dg + dk
    return c, coef * x, coef * y


def _c3(x, y):
    s, co = np.sin(2 * np.pi * x), np.cos(2 * np.pi * y)
    c = 1.25 + s * co
    cx = 2 * np.pi * np.cos(2 * np.pi * x) * co
    cy = -2 * np.pi * s * np.sin(2 * np.pi * y)
    return c, cx, cy


_FORMULAS = {"c1": _c1, "c2": _c2, "c3": _c3}


@dataclass(frozen=True)
class SpeedModel:
    """Sound speed c(x).

    ``params`` by kind: ``constant`` -> [value]; ``c4`` -> [inner, band, band_half_width];
    ``c5`` -> [band, band_half_width] (inside the interface square the speed is c1).
    ``custom`` uses ``func(x, y)`` and is blended to 1 like c1-c3.
    """

    kind: str = "c1"
    params: tuple = ()
    cutoff_width: float = 0.2
    omega_half_width: float = OMEGA_HALF_WIDTH
    interface_half_width: float = 1.0
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SPEED_KINDS:
            raise ValueError(f"unknown speed kind {self.kind!r}")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom speed needs func")
        if self.kind == "constant" and (len(self.params) != 1 or self.params[0] <= 0):
            raise ValueError("constant speed needs one positive value")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    @property
    def c4_params(self) -> tuple:
        if self.kind == "c4":
            defaults = (0.8, 1.6, 1.15)
        else:
            defaults = (2.0, 1.15)
        p = self.params + defaults[len(self.params):]
        return p

    def _raw(self, x, y):
        if self.kind in _FORMULAS:
            return _FORMULAS[self.kind](x, y)
        c = np.asarray(self.func(x, y), dtype=float)
        eps = 1e-6
        cx = (self.func(x + eps, y) - self.func(x - eps, y)) / (2 * eps)
        cy = (self.func(x, y + eps) - self.func(x, y - eps)) / (2 * eps)
        return c, cx, cy

    def inside_interface(self, x, y):
        a = self.interface_half_width
        return (np.abs(x) <= a) & (np.abs(y) <= a)

    def piece(self, x, y, inner: bool):
        """Value and gradient of the smooth piece on one side of the interface
        (c4/c5 only), extended smoothly across it."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if inner:
            if self.kind == "c4":
                v = self.c4_params[0]
                return np.full_like(x + y, v), np.zeros_like(x + y), np.zeros_like(x + y)
            return _c1(x, y)
        band, band_half = self.c4_params[-2:]
        psi, px, py = _ramp(x, y, self.omega_half_width, self.omega_half_width - band_half)
        return 1.0 + (band - 1.0) * psi, (band - 1.0) * px, (band - 1.0) * py

    def value_and_grad(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "constant":
            z = np.zeros(np.broadcast(x, y).shape)
            return z + self.params[0], z, z
        if self.kind in ("c4", "c5"):
            inside = self.inside_interface(x, y)
            ci, cxi, cyi = self.piece(x, y, True)
            co, cxo, cyo = self.piece(x, y, False)
            return (np.where(inside, ci, co), np.where(inside, cxi, cxo),
                    np.where(inside, cyi, cyo))
        c0, c0x, c0y = self._raw(x, y)
        psi, px, py = _ramp(x, y, self.omega_half_width, self.cutoff_width)
        c = 1.0 + (c0 - 1.0) * psi
        return c, c0x * psi + (c0 - 1.0) * px, c0y * psi + (c0 - 1.0) * py

    def __call__(self, x, y):
        return self.value_and_grad(x, y)[0]


def eval_speed(model: SpeedModel, grid: Grid2D) -> ScalarField:
    X, Y = grid.mesh()
    c = model(X, Y)
    if np.any(c <= 0):
        raise ValueError(f"speed {model.kind} is not positive on the grid (min {c.min():.3g})")
    return ScalarField(grid, c)


# ---------------------------------------------------------------- norms

def _region_edges(mask: np.ndarray):
    ex = mask[:, 1:] & mask[:, :-1]
    ey = mask[1:, :] & mask[:-1, :]
    return ex, ey


def hd_norm(f: ScalarField, region: Region) -> float:
    """Discrete Dirichlet norm ``(sum |grad f|^2 h^2)^(1/2)``.

    The gradient lives on grid edges (the staggered velocity locations), and only
    edges with both end nodes in the region contribute.  This is the quadratic
    form of the 5-point Laplacian, so harmonic extension is an exact orthogonal
    projection in it.
    """
    if region.size == 0:
        raise ValueError("empty region")
    return math.sqrt(_dirichlet_sum(f.data, region.mask))


def _dirichlet_sum(u: np.ndarray, mask: np.ndarray) -> float:
    ex, ey = _region_edges(mask)
    dx = np.diff(u, axis=1)
    dy = np.diff(u, axis=0)
    return float(np.sum(dx[ex] ** 2) + np.sum(dy[ey] ** 2))


def l2_norm(f: ScalarField, region: Region) -> float:
    return float(np.sqrt(np.sum(f.data[region.mask] ** 2) * f.grid.h ** 2))


def l2_rel_error(f: ScalarField, g: ScalarField, region: Region) -> float:
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    den = np.sqrt(np.sum(g.data[region.mask] ** 2))
    if den == 0:
        raise ValueError("reference field vanishes on the region")
    return float(np.sqrt(np.sum((f.data - g.data)[region.mask] ** 2)) / den)
