"""Harmonic extension by geometric multigrid, and the projection onto H_D(K).

The Laplacian is the 5-point stencil; the wave speed plays no role here since
``c^2 Δφ = 0`` and ``Δφ = 0`` have the same solutions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid2D, Region, ScalarField

DEFAULT_TOL = 1e-8
COARSEST = 5


class ConvergenceError(RuntimeError):
    pass


@dataclass
class MultigridInfo:
    cycles: int = 0
    residuals: list = field(default_factory=list)   # max-norm of 4u - sum(neighbours), per cycle

    @property
    def contraction(self) -> np.ndarray:
        r = np.asarray(self.residuals)
        return r[1:] / r[:-1]


def _interp_matrix(n_fine: int, n_coarse: int) -> np.ndarray:
    """Piecewise-linear interpolation from ``n_coarse`` to ``n_fine`` equispaced
    nodes on the same interval.  Exact bilinear prolongation when nested."""
    s = np.linspace(0.0, 1.0, n_fine) * (n_coarse - 1)
    k = np.minimum(np.floor(s + 1e-12).astype(int), n_coarse - 2)
    w = s - k
    P = np.zeros((n_fine, n_coarse))
    P[np.arange(n_fine), k] = 1.0 - w
    P[np.arange(n_fine), k + 1] += w
    return P


def _restrict_matrix(P: np.ndarray) -> np.ndarray:
    """Scaled transpose of P; full weighting in the nested case."""
    R = P.T.copy()
    R /= R.sum(axis=1, keepdims=True)
    return R


def _coarse_size(n: int) -> int:
    return (n - 1) // 2 + 1


@lru_cache(maxsize=32)
def _hierarchy(my: int, mx: int, Ly: float, Lx: float) -> list:
    levels = []
    while True:
        hy, hx = Ly / (my - 1), Lx / (mx - 1)
        level = {"shape": (my, mx), "hy": hy, "hx": hx}
        levels.append(level)
        if min(my, mx) <= COARSEST:
            level["direct"] = _direct_factor(my, mx, hy, hx)
            break
        cy, cx = _coarse_size(my), _coarse_size(mx)
        Py, Px = _interp_matrix(my, cy), _interp_matrix(mx, cx)
        level["Py"], level["Px"] = Py, Px
        level["Ry"], level["Rx"] = _restrict_matrix(Py), _restrict_matrix(Px)
        my, mx = cy, cx
    return levels


def _laplacian_interior(my: int, mx: int, hy: float, hx: float) -> sp.csr_matrix:
    """Negative 5-point Laplacian on interior nodes, zero Dirichlet data."""
    ny, nx = my - 2, mx - 2
    Tx = sp.diags([-np.ones(nx - 1), 2 * np.ones(nx), -np.ones(nx - 1)], [-1, 0, 1]) / hx ** 2
    Ty = sp.diags([-np.ones(ny - 1), 2 * np.ones(ny), -np.ones(ny - 1)], [-1, 0, 1]) / hy ** 2
    return (sp.kron(sp.identity(ny), Tx) + sp.kron(Ty, sp.identity(nx))).tocsc()


def _direct_factor(my, mx, hy, hx):
    if my <= 2 or mx <= 2:
        return None
    return spla.factorized(_laplacian_interior(my, mx, hy, hx))


def _apply(u, hy, hx):
    """Negative Laplacian at interior nodes."""
    c = u[1:-1, 1:-1]
    return ((2 * c - u[1:-1, :-2] - u[1:-1, 2:]) / hx ** 2
            + (2 * c - u[:-2, 1:-1] - u[2:, 1:-1]) / hy ** 2)


def _rbgs(u, f, hy, hx, sweeps, colors):
    wx, wy = 1.0 / hx ** 2, 1.0 / hy ** 2
    diag = 2 * (wx + wy)
    for _ in range(sweeps):
        for color in colors:
            new = (f + wx * (u[1:-1, :-2] + u[1:-1, 2:]) + wy * (u[:-2, 1:-1] + u[2:, 1:-1])) / diag
            inner = u[1:-1, 1:-1]
            inner[color] = new[color]


@lru_cache(maxsize=32)
def _colors(my, mx):
    jj, ii = np.meshgrid(np.arange(1, my - 1), np.arange(1, mx - 1), indexing="ij")
    red = (ii + jj) % 2 == 0
    return red, ~red


def _vcycle(levels, k, u, f, pre=2, post=2):
    lv = levels[k]
    hy, hx = lv["hy"], lv["hx"]
    if "direct" in lv:
        if lv["direct"] is not None:
            u[1:-1, 1:-1] = lv["direct"](f.ravel()).reshape(f.shape)
        return
    colors = _colors(*lv["shape"])
    _rbgs(u, f, hy, hx, pre, colors)
    r = np.zeros(lv["shape"])
    r[1:-1, 1:-1] = f - _apply(u, hy, hx)
    rc = lv["Ry"] @ r @ lv["Rx"].T
    cy, cx = rc.shape
    ec = np.zeros((cy, cx))
    _vcycle(levels, k + 1, ec, rc[1:-1, 1:-1], pre, post)
    u[1:-1, 1:-1] += (lv["Py"] @ ec @ lv["Px"].T)[1:-1, 1:-1]
    _rbgs(u, f, hy, hx, post, colors)


def solve_dirichlet(ring: np.ndarray, h: float, tol: float = DEFAULT_TOL,
                    max_cycles: int = 60, info: MultigridInfo | None = None) -> np.ndarray:
    """Discrete harmonic function on a rectangle of nodes with the outer ring of
    ``ring`` as Dirichlet data.  Stops when the scaled residual
    ``max|4u - sum(neighbours)|`` is at most ``tol * max|data|``."""
    u = np.array(ring, dtype=float)
    my, mx = u.shape
    data = np.concatenate([u[0], u[-1], u[:, 0], u[:, -1]])
    scale = float(np.max(np.abs(data)))
    u[1:-1, 1:-1] = data.mean() if my > 2 and mx > 2 else 0.0
    if scale == 0.0 or my <= 2 or mx <= 2:
        if my > 2 and mx > 2:
            u[1:-1, 1:-1] = 0.0
        return u
    levels = _hierarchy(my, mx, h * (my - 1), h * (mx - 1))
    f = np.zeros((my - 2, mx - 2))
    info = info if info is not None else MultigridInfo()

    def resid():
        return float(np.max(np.abs(_apply(u, h, h)))) * h * h

    info.residuals.append(resid())
    while info.residuals[-1] > tol * scale:
        if info.cycles >= max_cycles:
            raise ConvergenceError(
                f"multigrid stalled after {info.cycles} cycles, residual {info.residuals[-1]:.3e}")
        _vcycle(levels, 0, u, f)
        info.cycles += 1
        info.residuals.append(resid())
    return u


def _bounding_box(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return rows[0], rows[-1], cols[0], cols[-1]


def _solve_on_mask(values: np.ndarray, mask: np.ndarray, h: float, tol: float) -> np.ndarray:
    """Harmonic extension into ``mask`` of the values on its boundary nodes."""
    j0, j1, i0, i1 = _bounding_box(mask)
    if mask[j0:j1 + 1, i0:i1 + 1].all():
        out = np.zeros_like(values)
        out[j0:j1 + 1, i0:i1 + 1] = solve_dirichlet(values[j0:j1 + 1, i0:i1 + 1], h, tol)
        return out
    # general node set: sparse direct solve
    padded = np.pad(mask, 1)
    inner = mask & padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    idx = -np.ones(mask.shape, dtype=int)
    idx[inner] = np.arange(inner.sum())
    n = int(inner.sum())
    out = np.where(mask, values, 0.0)
    if n == 0:
        return out
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    for j, i in zip(*np.nonzero(inner)):
        k = idx[j, i]
        rows.append(k), cols.append(k), vals.append(4.0)
        for jj, ii in ((j - 1, i), (j + 1, i), (j, i - 1), (j, i + 1)):
            if inner[jj, ii]:
                rows.append(k), cols.append(idx[jj, ii]), vals.append(-1.0)
            else:
                rhs[k] += values[jj, ii]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    out[inner] = spla.spsolve(A.tocsc(), rhs)
    return out


def harmonic_extend(boundary_values, grid: Grid2D, tol: float = DEFAULT_TOL) -> ScalarField:
    """Harmonic extension into Omega of values given on its boundary nodes
    (ordered as ``grid.boundary_indices()``); zero outside Omega."""
    boundary_values = np.asarray(boundary_values, dtype=float)
    rows, cols = grid.boundary_indices()
    if boundary_values.shape != rows.shape:
        raise ValueError(f"expected {rows.size} boundary values, got {boundary_values.shape}")
    if not np.all(np.isfinite(boundary_values)):
        raise ValueError("boundary values must be finite")
    out = np.zeros(grid.shape)
    js, is_ = grid.omega_slices
    ring = np.zeros((js.stop - js.start, is_.stop - is_.start))
    ring[rows - js.start, cols - is_.start] = boundary_values
    out[js, is_] = solve_dirichlet(ring, grid.h, tol)
    return ScalarField(grid, out)


def project_hd(f: ScalarField, region_K: Region, tol: float = DEFAULT_TOL) -> ScalarField:
    """Orthogonal projection onto H_D(K): ``f - P_K(f|dK)`` on K, zero elsewhere."""
    grid = f.grid
    omega = Region.omega(grid)
    interior = omega.interior().mask
    if region_K.size == 0:
        raise ValueError("empty region")
    if np.any(region_K.mask & ~interior):
        raise ValueError("K must lie inside Omega, away from its boundary")
    boundary = region_K.boundary().mask
    data = np.where(boundary, f.data, 0.0)
    harm = _solve_on_mask(data, region_K.mask, grid.h, tol)
    return ScalarField(grid, np.where(region_K.mask, f.data - harm, 0.0))
