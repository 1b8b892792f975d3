"""Source phantoms and trace noise."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from scipy import ndimage

from .grid import Grid2D, Region, ScalarField
from .wave import BoundaryTrace

# (intensity, semi-axis a, semi-axis b, x0, y0, angle in degrees)
SHEPP_LOGAN = (
    (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0),
)
# contrast-enhanced intensities of the same ellipses (Toft)
MODIFIED_INTENSITIES = (1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1)

# (x, y, radius); bright disks with value 1 near the corners of Omega
DEFAULT_DISKS = ((-0.95, 0.95, 0.15), (1.0, 1.0, 0.12), (-1.0, -1.0, 0.1), (0.95, -0.95, 0.17))


def ellipse_table(modified: bool = True) -> list:
    if not modified:
        return [tuple(e) for e in SHEPP_LOGAN]
    return [(v,) + tuple(e[1:]) for v, e in zip(MODIFIED_INTENSITIES, SHEPP_LOGAN)]


def shepp_logan_value(x, y, modified: bool = True, scale: float = 1.0):
    """Phantom intensity at points (x, y), summing the ellipse table directly."""
    x = np.asarray(x, dtype=float) / scale
    y = np.asarray(y, dtype=float) / scale
    out = np.zeros(np.broadcast(x, y).shape)
    for A, a, b, x0, y0, phi in ellipse_table(modified):
        t = math.radians(phi)
        xr = (x - x0) * math.cos(t) + (y - y0) * math.sin(t)
        yr = -(x - x0) * math.sin(t) + (y - y0) * math.cos(t)
        out += np.where((xr / a) ** 2 + (yr / b) ** 2 <= 1.0, A, 0.0)
    # table sums such as 1 - 0.8 - 0.2 leave rounding dust around exact zeros
    out[np.abs(out) < 1e-12] = 0.0
    return out


def _shepp_logan_points(X, Y, disks, modified, scale, disk_value):
    f = shepp_logan_value(X, Y, modified, scale)
    for cx, cy, r in disks:
        f = np.where((X - cx) ** 2 + (Y - cy) ** 2 <= r * r, disk_value, f)
    return f


def shepp_logan(grid: Grid2D, extra_disks=DEFAULT_DISKS, modified: bool = True,
                scale: float = 1.0, disk_value: float = 1.0, supersample: int = 4) -> ScalarField:
    """Shepp-Logan head phantom plus disks set to ``disk_value``.

    Each node gets the mean over a ``supersample`` x ``supersample`` set of points
    in its cell, so jumps are resolved to one cell instead of aliasing; use
    ``supersample=1`` for pointwise sampling.
    """
    disks = tuple(extra_disks or ())
    ox0, ox1, oy0, oy1 = grid.omega_extent
    for cx, cy, r in disks:
        if not (ox0 < cx - r and cx + r < ox1 and oy0 < cy - r and cy + r < oy1):
            raise ValueError(f"disk ({cx}, {cy}, {r}) does not fit inside Omega")
    X, Y = grid.mesh()
    offsets = ((np.arange(supersample) + 0.5) / supersample - 0.5) * grid.h
    if supersample == 1:
        offsets = np.zeros(1)
    f = np.zeros(grid.shape)
    for dx in offsets:
        for dy in offsets:
            f += _shepp_logan_points(X + dx, Y + dy, disks, modified, scale, disk_value)
    f /= offsets.size ** 2
    f = np.where(Region.omega(grid).interior().mask, f, 0.0)
    return ScalarField(grid, f)


def gaussian_bump(grid: Grid2D, center=(0.0, 0.0), width: float = 0.15, amplitude: float = 1.0) -> ScalarField:
    """Smooth bump, truncated to vanish on and outside the boundary of Omega."""
    X, Y = grid.mesh()
    f = amplitude * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width ** 2))
    interior = Region.omega(grid).interior().mask
    return ScalarField(grid, np.where(interior, f, 0.0))


def resample_image(img: np.ndarray, grid: Grid2D, fit: Region) -> ScalarField:
    """Bilinear resample of ``img`` (row 0 = top) onto the bounding box of ``fit``,
    rescaled linearly to [0, 1] and zero outside ``fit``."""
    if fit.size == 0:
        raise ValueError("empty fit region")
    img = np.asarray(img, dtype=float)
    rows = np.flatnonzero(fit.mask.any(axis=1))
    cols = np.flatnonzero(fit.mask.any(axis=0))
    j0, j1, i0, i1 = rows[0], rows[-1], cols[0], cols[-1]
    H, W = img.shape
    jj, ii = np.mgrid[j0:j1 + 1, i0:i1 + 1]
    # top image row sits at the largest y
    r = (j1 - jj) / max(j1 - j0, 1) * (H - 1)
    q = (ii - i0) / max(i1 - i0, 1) * (W - 1)
    vals = ndimage.map_coordinates(img, [r, q], order=1, mode="nearest")
    lo, hi = img.min(), img.max()
    vals = (vals - lo) / (hi - lo) if hi > lo else np.full_like(vals, 1.0 if hi > 0 else 0.0)
    out = np.zeros(grid.shape)
    out[j0:j1 + 1, i0:i1 + 1] = vals
    return ScalarField(grid, np.where(fit.mask, np.clip(out, 0.0, 1.0), 0.0))


def load_image_phantom(path, grid: Grid2D, fit: Region) -> ScalarField:
    from .io import read_pgm

    try:
        img = read_pgm(path)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    return resample_image(img, grid, fit)


def zebra_image(size: int = 256, seed: int = 3) -> np.ndarray:
    """Procedural stand-in for a striped animal photograph: wavy stripes of
    varying orientation inside two overlapping blobs, 8-bit grayscale."""
    rng = np.random.default_rng(seed)
    s = np.linspace(-1, 1, size)
    X, Y = np.meshgrid(s, -s)
    phase = 6.0 * (X + Y) + 0.8 * np.sin(3.0 * Y) + 0.6 * np.sin(2.5 * X + 1.0)
    stripes = (np.sin(np.pi * phase) > 0).astype(float)
    body = ((X + 0.25) / 0.55) ** 2 + ((Y + 0.1) / 0.45) ** 2 <= 1
    head = ((X - 0.45) / 0.3) ** 2 + ((Y - 0.35) / 0.35) ** 2 <= 1
    img = np.where(body | head, 0.15 + 0.85 * stripes, 0.35)
    img += 0.02 * rng.standard_normal(img.shape)
    return np.clip(np.rint(255 * img), 0, 255).astype(np.uint8)


def zebra_phantom(grid: Grid2D, fit: Region | None = None, size: int = 256) -> ScalarField:
    if fit is None:
        fit = Region.square(grid, -1.1, 1.1, -1.1, 1.1)
    return resample_image(zebra_image(size), grid, fit)


def add_noise(trace: BoundaryTrace, level: float, seed: int = 0) -> BoundaryTrace:
    """Additive Gaussian noise with ``||noise|| = level * ||trace||`` (discrete L2)."""
    if level < 0:
        raise ValueError("noise level must be non-negative")
    if level == 0:
        return trace.with_values(trace.values.copy())
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(trace.values.shape)
    noise *= level * np.linalg.norm(trace.values) / np.linalg.norm(noise)
    return trace.with_values(trace.values + noise)
