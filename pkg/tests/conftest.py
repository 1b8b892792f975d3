import numpy as np
import pytest
from hypothesis import settings

from tatrecon.grid import Grid2D, Region, ScalarField

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid101():
    return Grid2D.square(101)


@pytest.fixture(scope="session")
def grid201():
    return Grid2D.square(201)


def bump(grid, center=(0.0, 0.0), width=0.15, amplitude=1.0):
    X, Y = grid.mesh()
    f = amplitude * np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / (2 * width ** 2))
    return ScalarField(grid, np.where(Region.omega(grid).interior().mask, f, 0.0))


def smooth_random(grid, rng, n_modes=4, margin=0.1):
    """Random smooth field vanishing near the boundary of Omega."""
    X, Y = grid.mesh()
    a = grid.omega[1] - margin
    f = np.zeros(grid.shape)
    for _ in range(n_modes):
        cx, cy = rng.uniform(-0.7 * a, 0.7 * a, 2)
        w = rng.uniform(0.1, 0.3)
        f += rng.normal() * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w * w))
    window = np.clip((a - np.maximum(np.abs(X), np.abs(Y))) / 0.15, 0, 1) ** 3
    return ScalarField(grid, f * window)
