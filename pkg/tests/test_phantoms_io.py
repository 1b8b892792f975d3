import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tatrecon import io
from tatrecon.grid import Grid2D, Region, ScalarField, l2_norm
from tatrecon.phantoms import (DEFAULT_DISKS, SHEPP_LOGAN, add_noise, load_image_phantom,
                               resample_image, shepp_logan, shepp_logan_value, zebra_phantom)
from tatrecon.wave import BoundaryTrace


def ellipse_oracle(x, y, table):
    """Point-in-ellipse sum written out from the canonical parameter table."""
    total = 0.0
    for A, a, b, x0, y0, phi in table:
        t = math.radians(phi)
        u = (x - x0) * math.cos(t) + (y - y0) * math.sin(t)
        v = -(x - x0) * math.sin(t) + (y - y0) * math.cos(t)
        if (u / a) ** 2 + (v / b) ** 2 <= 1:
            total += A
    return total


def test_classical_background_value():
    # inside the skull ellipse only: its lower edge is -0.92, the next one ends at -0.892
    x, y = 0.0, -0.91
    assert shepp_logan_value(x, y, modified=False) == pytest.approx(2.0)
    x, y = 0.0, -0.85    # inside the two outer ellipses only: brain background
    assert shepp_logan_value(x, y, modified=False) == pytest.approx(1.02)
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(-1, 1, (200, 2)):
        assert shepp_logan_value(x, y, modified=False) == pytest.approx(ellipse_oracle(x, y, SHEPP_LOGAN))


def test_disk_is_one_and_outside_is_zero(grid201):
    f = shepp_logan(grid201, extra_disks=[(0.0, 0.0, 0.1)], supersample=1)
    X, Y = grid201.mesh()
    assert np.all(f.data[np.hypot(X, Y) <= 0.1] == 1.0)
    far = (np.abs(X) > 1.0) | (np.abs(Y) > 1.0)
    assert not f.data[far].any()


def test_default_disks_fit_and_phantom_bounded(grid201):
    f = shepp_logan(grid201)
    assert np.isfinite(f.data).all()
    assert f.data.min() >= 0.0 and f.data.max() <= 1.0 + 1e-12
    X, Y = grid201.mesh()
    for cx, cy, r in DEFAULT_DISKS:
        inside = np.hypot(X - cx, Y - cy) < r - 2 * grid201.h
        assert np.allclose(f.data[inside], 1.0)
    rows, cols = grid201.boundary_indices()
    assert not f.data[rows, cols].any()


def test_disk_outside_omega_rejected(grid101):
    with pytest.raises(ValueError):
        shepp_logan(grid101, extra_disks=[(1.2, 0.0, 0.2)])


def test_supersampling_averages_pointwise(grid101):
    a = shepp_logan(grid101, supersample=1)
    b = shepp_logan(grid101, supersample=4)
    inner = Region.omega(grid101).interior().mask
    assert np.abs(a.data - b.data)[inner].mean() < 0.05
    assert b.data.min() >= 0.0


# ---------------------------------------------------------------- images


def test_uniform_images(tmp_path, grid101):
    fit = Region.square(grid101, -1.0, 1.0, -1.0, 1.0)
    for value, expect in ((255, 1.0), (0, 0.0)):
        p = io.write_pgm(tmp_path / f"u{value}.pgm", np.full((8, 8), float(value)), lo=0, hi=255)
        f = load_image_phantom(p, grid101, fit)
        assert np.all(f.data[fit.mask] == expect)
        assert not f.data[~fit.mask].any()


def test_checkerboard_bilinear_midpoints():
    g = Grid2D(9, 9, -1.5, 1.5, -1.5, 1.5, (-1.2, 1.2, -1.2, 1.2))
    fit = Region.square(g, -0.375, 0.75, -0.375, 0.75)   # 4 x 4 nodes
    assert fit.size == 16
    board = np.array([[0.0, 1.0], [1.0, 0.0]])
    f = resample_image(board, g, fit)
    block = f.data[fit.mask].reshape(4, 4)
    # the 4x4 samples sit at image coordinates 0, 1/3, 2/3, 1; hand bilinear values
    w = np.array([0, 1 / 3, 2 / 3, 1])
    rows = w[::-1][:, None]
    cols = w[None, :]
    expect = (1 - rows) * cols + rows * (1 - cols)
    assert np.allclose(block, expect)
    # the exact centre of the board is 0.5
    assert resample_image(board, g, Region.square(g, -0.375, 0.375, -0.375, 0.375)).data[4, 4] == 0.5


def test_image_phantom_errors(tmp_path, grid101):
    fit = Region.square(grid101, -1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        load_image_phantom(tmp_path / "missing.pgm", grid101, fit)
    (tmp_path / "junk.pgm").write_bytes(b"not an image")
    with pytest.raises(ValueError):
        load_image_phantom(tmp_path / "junk.pgm", grid101, fit)
    empty = Region(grid101, np.zeros(grid101.shape, bool))
    with pytest.raises(ValueError):
        resample_image(np.ones((4, 4)), grid101, empty)


def test_zebra_in_unit_range(grid101):
    f = zebra_phantom(grid101)
    assert f.data.min() == 0.0 and f.data.max() <= 1.0
    assert f.data.max() > 0.9


def test_pgm_round_trip_and_ascii(tmp_path):
    img = np.arange(12, dtype=float).reshape(3, 4) * 20
    p = io.write_pgm(tmp_path / "a.pgm", img[::-1], lo=0, hi=255)
    assert np.array_equal(io.read_pgm(p), np.rint(img))
    (tmp_path / "b.pgm").write_text("P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n")
    assert np.array_equal(io.read_pgm(tmp_path / "b.pgm"), [[0, 10, 20], [30, 40, 255]])


# ---------------------------------------------------------------- noise


def make_trace(grid, seed=0):
    pts = grid.boundary_points()
    rng = np.random.default_rng(seed)
    return BoundaryTrace(0.01, rng.normal(size=(40, len(pts))), pts)


def test_noise_level_zero_identity(grid101):
    tr = make_trace(grid101)
    assert np.array_equal(add_noise(tr, 0.0).values, tr.values)


@given(st.floats(0.001, 1.0), st.integers(0, 2 ** 31))
def test_noise_exactly_normalized(level, seed):
    tr = make_trace(Grid2D.square(31))
    noisy = add_noise(tr, level, seed)
    ratio = np.linalg.norm(noisy.values - tr.values) / np.linalg.norm(tr.values)
    assert ratio == pytest.approx(level, abs=1e-10)


def test_noise_deterministic(grid101):
    tr = make_trace(grid101)
    a, b = add_noise(tr, 0.1, seed=4), add_noise(tr, 0.1, seed=4)
    assert a.values.tobytes() == b.values.tobytes()
    assert add_noise(tr, 0.1, seed=5).values.tobytes() != a.values.tobytes()
    with pytest.raises(ValueError):
        add_noise(tr, -0.1)


# ---------------------------------------------------------------- files


def test_field_round_trip(tmp_path, grid101):
    f = ScalarField(grid101, np.random.default_rng(1).normal(size=grid101.shape))
    paths = io.write_field(tmp_path / "f", f)
    meta = json.loads(paths[1].read_text())
    assert meta["nx"] == 101 and meta["bounds"] == [-1.5, 1.5, -1.5, 1.5]
    assert paths[0].stat().st_size == 8 * 101 * 101
    g = io.read_field(tmp_path / "f")
    assert g.grid == grid101 and np.array_equal(g.data, f.data)


def test_trace_round_trip(tmp_path, grid101):
    tr = make_trace(grid101).with_mask(np.linspace(0, 1, len(grid101.boundary_points())))
    io.write_trace(tmp_path / "t.bin", tr)
    back = io.read_trace(tmp_path / "t.bin")
    assert back.dt == tr.dt and np.array_equal(back.values, tr.values)
    assert np.array_equal(back.mask, tr.mask) and np.array_equal(back.points, tr.points)
    header = (tmp_path / "t.bin").read_bytes().split(b"\n", 1)[0]
    assert json.loads(header)["n_t"] == tr.n_t


def test_slices_and_manifest(tmp_path, grid101):
    f = ScalarField(grid101, np.random.default_rng(2).normal(size=grid101.shape))
    p = io.write_slices(tmp_path / "s.csv", {"a": f, "b": f * 2}, "x", 0.0)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,a,b" and len(lines) == 102
    io.write_rays(tmp_path / "r.csv", {0: np.zeros((3, 2)), 1: np.ones((2, 2))})
    m = io.write_manifest(tmp_path)
    entries = {e["path"]: e for e in json.loads(m.read_text())["files"]}
    assert set(entries) == {"s.csv", "r.csv"}
    assert entries["s.csv"]["sha256"] == io.sha256(p)
