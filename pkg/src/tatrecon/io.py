"""File formats: raw fields with JSON sidecars, PGM images, traces, CSVs, manifests."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .grid import Grid2D, ScalarField
from .wave import BoundaryTrace


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def write_field(path, f: ScalarField) -> list:
    """``<path>.bin`` (little-endian float64, row-major (ny, nx)) plus ``<path>.json``."""
    path = Path(path).with_suffix("")
    path.parent.mkdir(parents=True, exist_ok=True)
    binp, meta = path.with_suffix(".bin"), path.with_suffix(".json")
    binp.write_bytes(np.ascontiguousarray(f.data, dtype="<f8").tobytes())
    meta.write_text(_dump(f.grid.sidecar()) + "\n")
    return [binp, meta]


def read_field(path) -> ScalarField:
    path = Path(path).with_suffix("")
    grid = Grid2D.from_sidecar(json.loads(path.with_suffix(".json").read_text()))
    data = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if data.size != grid.nx * grid.ny:
        raise ValueError(f"{path}.bin holds {data.size} values, sidecar expects {grid.nx * grid.ny}")
    return ScalarField(grid, data.reshape(grid.shape).astype(float))


def write_pgm(path, data, lo=None, hi=None) -> Path:
    """8-bit binary PGM, min-max scaled; row 0 of the image is the largest y."""
    a = np.asarray(data, dtype=float)
    lo = a.min() if lo is None else lo
    hi = a.max() if hi is None else hi
    scaled = np.zeros_like(a) if hi <= lo else (a - lo) / (hi - lo)
    img = np.clip(np.rint(255 * scaled), 0, 255).astype(np.uint8)[::-1]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode() + img.tobytes())
    return path


def _pgm_tokens(buf: bytes, count: int, pos: int):
    out = []
    while len(out) < count:
        while pos < len(buf) and chr(buf[pos]).isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not chr(buf[pos]).isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        out.append(buf[start:pos])
    return out, pos


def read_pgm(path) -> np.ndarray:
    """Grayscale PGM (P5 binary or P2 ASCII) as a float array, row 0 = top."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic not in (b"P5", b"P2"):
        raise ValueError("not a PGM file")
    (w, h, maxval), pos = _pgm_tokens(buf, 3, 2)
    w, h, maxval = int(w), int(h), int(maxval)
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise ValueError("bad PGM header")
    if magic == b"P2":
        vals, _ = _pgm_tokens(buf, w * h, pos)
        return np.array([int(v) for v in vals], dtype=float).reshape(h, w)
    dtype = np.uint8 if maxval < 256 else ">u2"
    n = w * h * (1 if maxval < 256 else 2)
    payload = buf[pos + 1:pos + 1 + n]
    if len(payload) != n:
        raise ValueError("truncated PGM payload")
    return np.frombuffer(payload, dtype=dtype).reshape(h, w).astype(float)


def write_trace(path, trace: BoundaryTrace) -> Path:
    """One JSON header line, then the (n_t + 1, n_boundary) values as little-endian float64."""
    header = {"n_t": trace.n_t, "dt": trace.dt, "n_boundary": trace.values.shape[1],
              "points": trace.points.tolist(), "mask": trace.mask.tolist()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(json.dumps(header, sort_keys=True).encode() + b"\n"
                     + np.ascontiguousarray(trace.values, dtype="<f8").tobytes())
    return path


def read_trace(path) -> BoundaryTrace:
    buf = Path(path).read_bytes()
    nl = buf.index(b"\n")
    header = json.loads(buf[:nl])
    values = np.frombuffer(buf[nl + 1:], dtype="<f8")
    shape = (header["n_t"] + 1, len(header["points"]))
    if values.size != shape[0] * shape[1]:
        raise ValueError("trace payload does not match header")
    return BoundaryTrace(header["dt"], values.reshape(shape).astype(float),
                         np.array(header["points"]), np.array(header["mask"]))


def write_slices(path, fields: dict, axis: str = "x", at: float = 0.0) -> Path:
    """Values along the line y = at (``axis="x"``) or x = at, one column per field."""
    grid = next(iter(fields.values())).grid
    if axis == "x":
        k = int(np.argmin(np.abs(grid.y - at)))
        coord, cols = grid.x, {n: f.data[k, :] for n, f in fields.items()}
    elif axis == "y":
        k = int(np.argmin(np.abs(grid.x - at)))
        coord, cols = grid.y, {n: f.data[:, k] for n, f in fields.items()}
    else:
        raise ValueError("axis must be 'x' or 'y'")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([axis] + list(cols))
        for r in range(coord.size):
            w.writerow([f"{coord[r]:.6f}"] + [f"{cols[n][r]:.10g}" for n in cols])
    return path


def write_rays(path, paths: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ray_id", "x", "y"])
        for rid in sorted(paths):
            for x, y in np.asarray(paths[rid])[:, :2]:
                w.writerow([rid, f"{x:.8f}", f"{y:.8f}"])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(obj) + "\n")
    return path


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir) -> Path:
    """``manifest.json`` listing every other file under ``out_dir`` with its sha256."""
    out_dir = Path(out_dir)
    files = sorted(p for p in out_dir.rglob("*") if p.is_file() and p.name != "manifest.json")
    entries = [{"path": p.relative_to(out_dir).as_posix(), "bytes": p.stat().st_size,
                "sha256": sha256(p)} for p in files]
    return write_json(out_dir / "manifest.json", {"files": entries})
