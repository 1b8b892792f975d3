"""Observation cutoff chi on the boundary of the square Omega."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import OMEGA_HALF_WIDTH

SIDE_ORDER = ("S", "E", "N", "W")   # counter-clockwise from the lower-left corner


def _normalize_sides(sides) -> frozenset:
    if sides == "all":
        return frozenset(SIDE_ORDER)
    out = frozenset(s.upper() for s in sides)
    if not out <= set(SIDE_ORDER):
        raise ValueError(f"sides must be drawn from {SIDE_ORDER}")
    return out


@dataclass(frozen=True)
class Cutoff:
    """chi(p) for points p on the boundary of [-a, a]^2.

    chi is 1 on the observed sides, 0 on the others, with a cosine ramp of
    arclength ``ramp`` inside the observed part next to each unobserved side.
    """

    sides: frozenset = frozenset(SIDE_ORDER)
    ramp: float = 0.2
    half_width: float = OMEGA_HALF_WIDTH

    @classmethod
    def of(cls, sides="all", ramp: float = 0.2, half_width: float = OMEGA_HALF_WIDTH) -> "Cutoff":
        return cls(_normalize_sides(sides), float(ramp), float(half_width))

    @property
    def full(self) -> bool:
        return len(self.sides) == 4

    def arclength(self, points) -> np.ndarray:
        """Perimeter coordinate, 0 at (-a, -a), increasing counter-clockwise."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.half_width
        L = 2 * a
        x, y = p[:, 0], p[:, 1]
        # assign each point to the side it is closest to
        dist = np.column_stack([np.abs(y + a), np.abs(x - a), np.abs(y - a), np.abs(x + a)])
        side = np.argmin(dist, axis=1)
        s = np.select([side == 0, side == 1, side == 2, side == 3],
                      [x + a, L + (y + a), 2 * L + (a - x), 3 * L + (a - y)])
        return np.mod(s, 4 * L)

    def __call__(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.full:
            return np.ones(len(p))
        if not self.sides:
            return np.zeros(len(p))
        L = 2 * self.half_width
        P = 4 * L
        s = self.arclength(p)
        d = np.full(len(p), np.inf)
        for k, name in enumerate(SIDE_ORDER):
            if name in self.sides:
                continue
            lo, hi = k * L, (k + 1) * L
            inside = (s >= lo - 1e-12) & (s <= hi + 1e-12)
            dd = np.minimum(np.mod(lo - s, P), np.mod(s - hi, P))
            d = np.minimum(d, np.where(inside, 0.0, dd))
        if self.ramp <= 0:
            return (d > 0).astype(float)
        t = np.clip(d / self.ramp, 0.0, 1.0)
        return 0.5 * (1.0 - np.cos(np.pi * t))

    def on_grid(self, grid) -> np.ndarray:
        return self(grid.boundary_points())
