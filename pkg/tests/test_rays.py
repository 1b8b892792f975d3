import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tatrecon.grid import SpeedModel
from tatrecon.observation import Cutoff
from tatrecon.rays import (critical_angle, estimate_T1, integrate, interface_normal, snell_split,
                           symbol_of_K, trace_broken_ray, trace_geodesic, visibility_classify)

ONE = SpeedModel("constant", (1.0,))
TWO = SpeedModel("constant", (2.0,))


# ---------------------------------------------------------------- smooth geodesics


def test_straight_ray_exit_time():
    r = trace_geodesic((0.0, 0.0), 0.0, ONE, 5.0)
    assert r.kind == "exit_boundary"
    assert r.exit_time == pytest.approx(1.28, abs=1e-3)
    assert np.allclose(r.path[:, 1], 0.0)
    r2 = trace_geodesic((0.0, 0.0), 0.0, TWO, 5.0)
    assert r2.exit_time == pytest.approx(r.exit_time / 2, abs=1e-6)
    assert np.allclose(r2.exit_point, r.exit_point)


def test_trapped_c3_geodesic_is_long():
    r = trace_geodesic((-0.25, 0.25), 0.0, SpeedModel("c3"), 20.0)
    assert r.kind == "trapped_cap"
    assert np.abs(r.path[:, :2]).max() < 1.28


def test_unit_speed_is_conserved():
    m = SpeedModel("c1")
    x0, theta, dur = np.array([0.1, -0.3]), 0.7, 1.0
    r = trace_geodesic(x0, theta, m, dur)
    c0 = m(*x0)
    p0 = np.array([math.cos(theta), math.sin(theta)]) / c0
    s = integrate(m, x0, p0, dur)
    drift = abs(m(*s.x) * np.hypot(*s.p) - 1.0)
    assert drift < 1e-6 * dur
    assert r.path.shape[1] >= 2


@pytest.mark.parametrize("kind", ["c1", "c2"])
def test_time_reversal_symmetry(kind):
    m = SpeedModel(kind)
    x0 = np.array([0.45, 0.05])
    r = trace_geodesic(x0, 2.0, m, 10.0)
    assert r.kind == "exit_boundary"
    back = integrate(m, r.exit_point, -r.exit_momentum, r.exit_time)
    assert np.hypot(*(back.x - x0)) < 1e-4
    d = -back.p / np.hypot(*back.p)
    assert np.allclose(d, [math.cos(2.0), math.sin(2.0)], atol=1e-4)


def test_geodesic_rejects_discontinuous_speed():
    with pytest.raises(ValueError):
        trace_geodesic((0.0, 0.0), 0.0, SpeedModel("c4"), 1.0)
    with pytest.raises(ValueError):
        trace_geodesic((2.0, 0.0), 0.0, ONE, 1.0)


# ---------------------------------------------------------------- interfaces


def test_normal_incidence_goes_straight():
    refl, trans, a_in, a_out = snell_split(np.array([1 / 0.8, 0.0]), np.array([1.0, 0.0]), 0.8, 1.6)
    assert a_in == 0.0 and a_out == 0.0
    assert trans[1] == 0.0 and trans[0] > 0
    assert 1.6 * np.hypot(*trans) == pytest.approx(1.0)


def test_critical_angle_c4():
    assert critical_angle(0.8, 1.6) == pytest.approx(30.0, abs=1e-8)
    with pytest.raises(ValueError):
        critical_angle(1.6, 0.8)


def test_45_degree_ray_is_trapped_in_c4():
    res = trace_broken_ray((0.0, 0.0), math.pi / 4, SpeedModel("c4"), 12.0)
    kinds = res.kinds()
    assert kinds.count("total_internal_reflection") >= 3
    assert "transmit" not in kinds and "exit_boundary" not in kinds
    for e in res.events:
        if e.kind == "total_internal_reflection":
            assert e.alpha_in == pytest.approx(45.0, abs=1e-6)
            assert e.alpha_out is None


@given(st.floats(-0.95, 0.95), st.floats(0.0, 2 * math.pi))
def test_snell_consistency(y0, theta):
    res = trace_broken_ray((0.0, y0), theta, SpeedModel("c4"), 4.0, branch_policy="all")
    for e in res.events:
        if e.kind == "transmit":
            s_in, s_out = math.sin(math.radians(e.alpha_in)), math.sin(math.radians(e.alpha_out))
            assert abs(e.c_plus * s_in - e.c_minus * s_out) < 1e-8
        if e.kind == "total_internal_reflection":
            assert e.alpha_in >= critical_angle(e.c_minus, e.c_plus) - 1e-9


def test_interface_normal():
    assert np.array_equal(interface_normal((1.0, 0.3)), [1.0, 0.0])
    assert np.array_equal(interface_normal((0.2, -1.0)), [0.0, -1.0])
    assert interface_normal((1.0, 1.0)) is None


def test_broken_ray_requires_interface():
    with pytest.raises(ValueError):
        trace_broken_ray((0.0, 0.0), 0.0, SpeedModel("c1"), 1.0)


def test_outgoing_ray_transmits_and_exits():
    res = trace_broken_ray((0.0, 0.0), 0.0, SpeedModel("c4"), 6.0, branch_policy="transmit")
    kinds = res.kinds()
    assert "transmit" in kinds and "exit_boundary" in kinds
    assert kinds.index("transmit") < kinds.index("exit_boundary")


# ---------------------------------------------------------------- visibility and T1


def test_everything_visible_for_long_time():
    pts = np.array([[0.0, 0.0], [0.9, -0.4], [-1.1, 1.1]])
    v = visibility_classify(pts, ONE, T=4.0, n_dirs=16)
    assert np.all(v.fraction == 1.0)


def test_c2_stable_trapped_circles():
    m = SpeedModel("c2")
    trapped = visibility_classify(np.array([[0.23, 0.0], [0.0, 0.67]]), m, T=3.0, n_dirs=32)
    free = visibility_classify(np.array([[0.45, 0.0], [0.0, 0.9]]), m, T=3.0, n_dirs=32)
    assert np.all(trapped.fraction < 1.0)
    assert np.all(free.fraction == 1.0)


def test_c1_short_time_leaves_invisible_directions():
    v = visibility_classify(np.array([[0.0, 0.0], [0.5, 0.3]]), SpeedModel("c1"), T=1.0, n_dirs=32)
    assert v.fraction.min() < 1.0
    assert len(v.invisible) > 0


def test_visibility_needs_directions():
    with pytest.raises(ValueError):
        visibility_classify(np.zeros((1, 2)), ONE, 1.0, n_dirs=4)


def test_T1_constant_speed_is_diagonal():
    est = estimate_T1(ONE, samples=9, n_dirs=64)
    assert est.value == pytest.approx(2.56 * math.sqrt(2), rel=0.02)
    assert not est.exceeds_cap


def test_T1_c1_between_3_and_4():
    est = estimate_T1(SpeedModel("c1"), samples=7, n_dirs=32, h=0.02)
    assert 3.0 < est.value < 4.0


@pytest.mark.slow
def test_T1_c3_exceeds_cap():
    est = estimate_T1(SpeedModel("c3"), samples=5, cap=20.0, n_dirs=32, h=0.02)
    assert est.exceeds_cap
    assert "exceeds" in str(est)


def test_T1_cap_must_be_finite():
    with pytest.raises(ValueError):
        estimate_T1(ONE, cap=math.inf)


# ---------------------------------------------------------------- symbol of K


def test_symbol_values():
    full = Cutoff.of("all")
    none = lambda p: np.zeros(len(np.atleast_2d(p)))
    x, xi = (0.1, 0.2), (1.0, 0.0)
    assert symbol_of_K(x, xi, full, ONE) == 0.0
    assert symbol_of_K(x, xi, none, ONE) == 1.0
    # horizontal chord: exits on E (observed) and W (not observed, away from the ramp)
    assert symbol_of_K((0.0, 0.0), (1.0, 0.0), Cutoff.of("E"), ONE) == 0.5


def test_symbol_undefined_when_trapped():
    with pytest.raises(ValueError):
        symbol_of_K((-0.25, 0.25), (1.0, 0.0), Cutoff.of("all"), SpeedModel("c3"), cap=5.0)


@given(st.floats(-1.2, 1.2), st.floats(-1.2, 1.2), st.floats(0, 2 * math.pi),
       st.sets(st.sampled_from("NSEW")))
def test_symbol_range(x, y, theta, sides):
    chi = Cutoff.of("".join(sorted(sides))) if sides else (lambda p: np.zeros(len(np.atleast_2d(p))))
    s = symbol_of_K((x, y), (math.cos(theta), math.sin(theta)), chi, SpeedModel("c1"))
    assert 0.0 <= s <= 1.0
    from tatrecon.rays import exit_times
    _, _, xp, xm = exit_times(SpeedModel("c1"), [(x, y)], [(math.cos(theta), math.sin(theta))], 50.0)
    if sides and (chi(xp)[0] == 1.0 or chi(xm)[0] == 1.0):
        assert s <= 0.5
