import numpy as np
import pytest

from tatrecon.eikonal import critical_time, fast_sweep
from tatrecon.grid import Region, ScalarField, SpeedModel, eval_speed, hd_norm, l2_rel_error
from tatrecon.time_reversal import apply_error_operator, time_reverse
from tatrecon.wave import BoundaryTrace, forward_measure

from conftest import bump, smooth_random


def ones(grid):
    return ScalarField(grid, np.ones(grid.shape))


def blank_trace(grid, n_t=50, dt=0.01, value=0.0, mask=None):
    pts = grid.boundary_points()
    return BoundaryTrace(dt, np.full((n_t + 1, len(pts)), value), pts, mask)


def test_zero_trace_gives_zero(grid101):
    out = time_reverse(blank_trace(grid101), eval_speed(SpeedModel("c1"), grid101))
    assert not out.data.any()


def test_constant_trace_gives_constant(grid101):
    out = time_reverse(blank_trace(grid101, value=1.7), eval_speed(SpeedModel("c1"), grid101))
    omega = Region.omega(grid101).mask
    assert np.allclose(out.data[omega], 1.7, atol=1e-8)
    assert not out.data[~omega].any()


def test_fully_masked_trace_gives_zero(grid101):
    rows, _ = grid101.boundary_indices()
    tr = blank_trace(grid101, value=1.0, mask=np.zeros(rows.size))
    assert not time_reverse(tr, ones(grid101)).data.any()


def test_round_trip_constant_speed(grid101):
    c = ones(grid101)
    T = 4 * critical_time(fast_sweep(c, "all"))
    f = bump(grid101, (0.2, -0.1), 0.15)
    g = time_reverse(forward_measure(f, c, T), c, T)
    assert l2_rel_error(g, f, Region.omega(grid101)) < 0.15


def test_time_reverse_is_linear(grid101):
    rng = np.random.default_rng(0)
    c = eval_speed(SpeedModel("c1"), grid101)
    pts = grid101.boundary_points()
    a = BoundaryTrace(0.01, rng.normal(size=(81, len(pts))), pts)
    b = BoundaryTrace(0.01, rng.normal(size=(81, len(pts))), pts)
    lhs = time_reverse(a * 2.0 + b * -3.0, c).data
    rhs = 2.0 * time_reverse(a, c).data - 3.0 * time_reverse(b, c).data
    assert np.abs(lhs - rhs).max() < 1e-9 * np.abs(rhs).max()


def test_terminal_data_matches_trace(grid101):
    """With T equal to one step the output is one step away from the
    harmonic extension of the final trace row, which it matches on the boundary."""
    rng = np.random.default_rng(1)
    pts = grid101.boundary_points()
    tr = BoundaryTrace(0.005, rng.normal(size=(2, len(pts))), pts)
    out = time_reverse(tr, ones(grid101))
    rows, cols = grid101.boundary_indices()
    assert np.array_equal(out.data[rows, cols], tr.values[0])


def test_time_reverse_checks_inputs(grid101):
    c = ones(grid101)
    with pytest.raises(ValueError):
        time_reverse(blank_trace(grid101), c, T=10.0)
    pts = grid101.boundary_points()[:-3]
    with pytest.raises(ValueError):
        time_reverse(BoundaryTrace(0.01, np.zeros((5, len(pts))), pts), c)


def test_interpolated_time_step_agrees(grid101):
    c = ones(grid101)
    f = bump(grid101, width=0.2)
    tr = forward_measure(f, c, 3.0)
    a = time_reverse(tr, c)
    b = time_reverse(tr, c, dt=0.8 * tr.dt)
    assert l2_rel_error(b, a, Region.omega(grid101)) < 0.01


# ---------------------------------------------------------------- K


def test_error_operator_of_zero(grid101):
    out = apply_error_operator(ScalarField.zeros(grid101), ones(grid101), 2.0)
    assert not out.data.any()


def test_error_operator_contracts_for_c1(grid101):
    c = eval_speed(SpeedModel("c1"), grid101)
    T = 4 * critical_time(fast_sweep(c, "all"))
    f = bump(grid101, (0.1, 0.2), 0.15)
    omega = Region.omega(grid101)
    assert hd_norm(apply_error_operator(f, c, T), omega) < hd_norm(f, omega)


def test_error_operator_strong_contraction_constant_speed(grid101):
    c = ones(grid101)
    T = 1.05 * 2.56 * np.sqrt(2)     # beyond the diameter of Omega
    omega = Region.omega(grid101)
    for center in ((0.0, 0.0), (0.5, -0.4), (-0.7, 0.6)):
        f = bump(grid101, center, 0.15)
        assert hd_norm(apply_error_operator(f, c, T), omega) < 0.5 * hd_norm(f, omega)


def test_error_operator_nonexpansive_trapping(grid101):
    c = eval_speed(SpeedModel("c3"), grid101)
    T = 2 * critical_time(fast_sweep(c, "all"))
    omega = Region.omega(grid101)
    rng = np.random.default_rng(7)
    for _ in range(3):
        f = smooth_random(grid101, rng)
        assert hd_norm(apply_error_operator(f, c, T), omega) <= 1.02 * hd_norm(f, omega)


def test_error_operator_is_linear(grid101):
    c = eval_speed(SpeedModel("c1"), grid101)
    rng = np.random.default_rng(8)
    f, g = smooth_random(grid101, rng), smooth_random(grid101, rng)
    lhs = apply_error_operator(f * 0.5 + g, c, 1.5).data
    rhs = 0.5 * apply_error_operator(f, c, 1.5).data + apply_error_operator(g, c, 1.5).data
    assert np.abs(lhs - rhs).max() < 1e-9 * np.abs(rhs).max()
