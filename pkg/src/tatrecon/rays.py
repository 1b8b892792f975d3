"""Unit-speed geodesics of the metric c^-2 dx^2, broken rays at a speed jump,
visibility of singularities, T1 estimates and the principal symbol of K.

Rays integrate the Hamiltonian flow of ``H = c^2 |p|^2 / 2``::

    dx/dt = c^2 p,     dp/dt = -|p|^2 c grad c,

with ``c(x)|p| = 1``, so ``|dx/dt| = c`` and t is travel time.  Many rays are
advanced together with RK4.  For the discontinuous speeds c4/c5 every ray
carries the side of the interface square it lives on and uses the smooth
piece of that side; crossings are located by bisection and split according
to Snell's law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import Grid2D, Region, SpeedModel
from .observation import Cutoff

TANGENT_TOL_DEG = 0.5
DEPTH_CAP = 12
DEFAULT_H = 0.01
EVENT_KINDS = ("exit_boundary", "reflect", "transmit", "total_internal_reflection",
               "trapped_cap", "tangent_rejected")


@dataclass
class RayState:
    x: np.ndarray
    p: np.ndarray
    t: float = 0.0


@dataclass
class RayEvent:
    kind: str
    location: tuple
    time: float
    ray_id: int = 0
    parent: int = -1
    depth: int = 0
    alpha_in: Optional[float] = None     # degrees from the interface normal
    alpha_out: Optional[float] = None
    c_minus: Optional[float] = None      # speed on the incoming side
    c_plus: Optional[float] = None
    note: str = ""


def max_speed(model: SpeedModel, n: int = 241) -> float:
    s = np.linspace(-model.omega_half_width, model.omega_half_width, n)
    X, Y = np.meshgrid(s, s)
    return float(model(X, Y).max())


def default_dt(model: SpeedModel, h: float = DEFAULT_H) -> float:
    return h / (2.0 * max_speed(model))


def _speed(model: SpeedModel, X, inner):
    if model.smooth:
        return model.value_and_grad(X[:, 0], X[:, 1])
    c = np.empty(len(X))
    cx = np.empty(len(X))
    cy = np.empty(len(X))
    for side in (True, False):
        sel = inner == side
        if sel.any():
            c[sel], cx[sel], cy[sel] = model.piece(X[sel, 0], X[sel, 1], side)
    return c, cx, cy


def _rhs(model, X, P, inner):
    c, cx, cy = _speed(model, X, inner)
    p2 = np.einsum("ij,ij->i", P, P)
    dX = (c * c)[:, None] * P
    dP = -(p2 * c)[:, None] * np.column_stack([cx, cy])
    return dX, dP


def _rk4(model, X, P, inner, h):
    h = np.asarray(h, dtype=float).reshape(-1, 1)
    k1x, k1p = _rhs(model, X, P, inner)
    k2x, k2p = _rhs(model, X + 0.5 * h * k1x, P + 0.5 * h * k1p, inner)
    k3x, k3p = _rhs(model, X + 0.5 * h * k2x, P + 0.5 * h * k2p, inner)
    k4x, k4p = _rhs(model, X + h * k3x, P + h * k3p, inner)
    return (X + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            P + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def _sup(X):
    return np.maximum(np.abs(X[:, 0]), np.abs(X[:, 1]))


def _bisect(model, X, P, inner, h, event, iters=48):
    """Largest no-event fraction and smallest event fraction of the step."""
    lo = np.zeros(len(X))
    hi = np.ones(len(X))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        Xm, _ = _rk4(model, X, P, inner, mid * h)
        hit = event(Xm)
        hi = np.where(hit, mid, hi)
        lo = np.where(hit, lo, mid)
    return lo, hi


@dataclass
class PropagationResult:
    events: list = field(default_factory=list)
    exits: list = field(default_factory=list)   # (root, ray_id, time, point, momentum)
    paths: dict = field(default_factory=dict)
    capped_roots: set = field(default_factory=set)


def propagate(model: SpeedModel, X0, P0, t_max: float, dt: Optional[float] = None,
              policy: str = "all", depth_cap: int = DEPTH_CAP, record_paths: bool = False,
              inner0=None) -> PropagationResult:
    """Advance rays from positions ``X0`` with momenta ``P0`` until they leave
    Omega or reach ``t_max``.  ``policy`` selects branches at an interface:
    ``all`` keeps both, ``transmit`` prefers the transmitted one, ``reflect``
    always follows the reflection."""
    if policy not in ("all", "transmit", "reflect"):
        raise ValueError(f"unknown branch policy {policy!r}")
    if dt is None:
        dt = default_dt(model)
    a = model.omega_half_width
    s_half = model.interface_half_width
    broken = not model.smooth
    X = np.atleast_2d(np.asarray(X0, dtype=float)).copy()
    P = np.atleast_2d(np.asarray(P0, dtype=float)).copy()
    n = len(X)
    t = np.zeros(n)
    if inner0 is None:
        inner = _sup(X) <= s_half if broken else np.zeros(n, dtype=bool)
    else:
        inner = np.asarray(inner0, dtype=bool).copy()
    depth = np.zeros(n, dtype=int)
    root = np.arange(n)
    rid = np.arange(n)
    next_id = n
    res = PropagationResult()
    if record_paths:
        for k in range(n):
            res.paths[k] = [X[k].copy()]

    while len(X):
        h = np.minimum(dt, t_max - t)
        Xn, Pn = _rk4(model, X, P, inner, h)
        done = np.zeros(len(X), dtype=bool)
        children = []

        out_mask = (~inner) & (_sup(Xn) > a)
        if out_mask.any():
            idx = np.flatnonzero(out_mask)
            lo, hi = _bisect(model, X[idx], P[idx], inner[idx], h[idx], lambda Z: _sup(Z) > a)
            Xe, Pe = _rk4(model, X[idx], P[idx], inner[idx], hi * h[idx])
            for m, k in enumerate(idx):
                te = t[k] + hi[m] * h[k]
                res.exits.append((int(root[k]), int(rid[k]), te, Xe[m].copy(), Pe[m].copy()))
                res.events.append(RayEvent("exit_boundary", tuple(Xe[m]), te, int(rid[k]), depth=int(depth[k])))
                if record_paths:
                    res.paths[int(rid[k])].append(Xe[m].copy())
            done[idx] = True

        if broken:
            sup_n = _sup(Xn)
            cross = ~done & (np.where(inner, sup_n > s_half, sup_n <= s_half))
            if cross.any():
                idx = np.flatnonzero(cross)
                inn = inner[idx]
                lo, hi = _bisect(model, X[idx], P[idx], inn, h[idx],
                                 lambda Z, inn=inn: np.where(inn, _sup(Z) > s_half, _sup(Z) <= s_half))
                Xlo, Plo = _rk4(model, X[idx], P[idx], inn, lo * h[idx])
                Xhi, Phi = _rk4(model, X[idx], P[idx], inn, hi * h[idx])
                for m, k in enumerate(idx):
                    tc = t[k] + hi[m] * h[k]
                    if record_paths:
                        res.paths[int(rid[k])].append(Xhi[m].copy())
                    new, next_id = _interface(model, Xlo[m], Xhi[m], Plo[m], Phi[m], bool(inner[k]), tc,
                                              int(rid[k]), int(depth[k]), int(root[k]), policy,
                                              depth_cap, next_id, res)
                    children.extend(new)
                done[idx] = True

        keep = ~done
        X = np.where(keep[:, None], Xn, X)
        P = np.where(keep[:, None], Pn, P)
        t = np.where(keep, t + h, t)
        if record_paths:
            for k in np.flatnonzero(keep):
                res.paths[int(rid[k])].append(X[k].copy())
        capped = keep & (t >= t_max - 1e-12)
        for k in np.flatnonzero(capped):
            res.events.append(RayEvent("trapped_cap", tuple(X[k]), float(t[k]), int(rid[k]), depth=int(depth[k])))
            res.capped_roots.add(int(root[k]))
        keep &= ~capped

        X, P, t, inner, depth, root, rid = (arr[keep] for arr in (X, P, t, inner, depth, root, rid))
        if children:
            cX, cP, ct, cin, cd, cr, cid = zip(*children)
            X = np.vstack([X, np.array(cX)])
            P = np.vstack([P, np.array(cP)])
            t = np.concatenate([t, ct])
            inner = np.concatenate([inner, np.array(cin, dtype=bool)])
            depth = np.concatenate([depth, np.array(cd, dtype=int)])
            root = np.concatenate([root, np.array(cr, dtype=int)])
            rid = np.concatenate([rid, np.array(cid, dtype=int)])
            if record_paths:
                for x_, i_ in zip(cX, cid):
                    res.paths[i_] = [np.array(x_)]
    return res


def interface_normal(x, tol: float = 1e-7):
    """Outward unit normal of the interface square at ``x``; None at a corner."""
    ax, ay = abs(x[0]), abs(x[1])
    if abs(ax - ay) < tol:
        return None
    if ax > ay:
        return np.array([math.copysign(1.0, x[0]), 0.0])
    return np.array([0.0, math.copysign(1.0, x[1])])


def snell_split(p, normal, c_minus: float, c_plus: float):
    """Reflected momentum, transmitted momentum (None under total internal
    reflection), and the incidence/refraction angles in degrees."""
    p = np.asarray(p, dtype=float)
    pn = float(p @ normal)
    pt = p - pn * normal
    p_norm = math.hypot(*p)
    sin_in = min(1.0, math.hypot(*pt) / p_norm)
    alpha_in = math.degrees(math.asin(sin_in))
    reflected = p - 2 * pn * normal
    sin_out = sin_in * c_plus / c_minus
    if sin_out > 1.0:
        return reflected, None, alpha_in, None
    pn_new = math.copysign(math.sqrt(max(1.0 / c_plus ** 2 - float(pt @ pt), 0.0)), pn)
    return reflected, pt + pn_new * normal, alpha_in, math.degrees(math.asin(sin_out))


def critical_angle(c_minus: float, c_plus: float) -> float:
    """Critical incidence angle in degrees (only defined when c_minus < c_plus)."""
    if c_minus >= c_plus:
        raise ValueError("no critical angle when the speed does not increase")
    return math.degrees(math.asin(c_minus / c_plus))


def _interface(model, Xlo, Xhi, Plo, Phi, from_inner, tc, ray_id, depth, root, policy,
               depth_cap, next_id, res):
    loc = tuple(Xhi)
    c_in = float(model.piece(Xhi[0], Xhi[1], True)[0])
    c_out = float(model.piece(Xhi[0], Xhi[1], False)[0])
    c_minus, c_plus = (c_in, c_out) if from_inner else (c_out, c_in)
    normal = interface_normal(Xhi)
    if normal is None:
        # corner: a double reflection if both faces reflect totally, else ambiguous
        p = Plo
        a_first = None
        for nrm in (np.array([math.copysign(1.0, Xhi[0]), 0.0]),
                    np.array([0.0, math.copysign(1.0, Xhi[1])])):
            reflected, transmitted, a_in, _ = snell_split(p, nrm, c_minus, c_plus)
            if transmitted is not None or abs(a_in - 90.0) < TANGENT_TOL_DEG:
                res.events.append(RayEvent("tangent_rejected", loc, tc, ray_id, depth=depth,
                                           alpha_in=a_in, note="corner"))
                return [], next_id
            a_first = a_in if a_first is None else a_first
            p = reflected
        res.events.append(RayEvent("total_internal_reflection", loc, tc, ray_id, depth=depth,
                                   alpha_in=a_first, c_minus=c_minus, c_plus=c_plus,
                                   note="corner"))
        return [(Xlo, p, tc, from_inner, depth, root, next_id)], next_id + 1
    reflected, transmitted, a_in, a_out = snell_split(Plo, normal, c_minus, c_plus)
    if abs(a_in - 90.0) < TANGENT_TOL_DEG or (a_out is not None and abs(a_out - 90.0) < TANGENT_TOL_DEG):
        res.events.append(RayEvent("tangent_rejected", loc, tc, ray_id, depth=depth,
                                   alpha_in=a_in, alpha_out=a_out, c_minus=c_minus, c_plus=c_plus))
        return [], next_id
    children = []
    if transmitted is None:
        res.events.append(RayEvent("total_internal_reflection", loc, tc, ray_id, depth=depth,
                                   alpha_in=a_in, c_minus=c_minus, c_plus=c_plus))
        children.append((Xlo, reflected, tc, from_inner, depth, root, next_id))
        return children, next_id + 1
    if depth + 1 > depth_cap:
        res.events.append(RayEvent("trapped_cap", loc, tc, ray_id, depth=depth, note="depth cap"))
        res.capped_roots.add(root)
        return [], next_id
    follow_r = policy in ("all", "reflect")
    follow_t = policy in ("all", "transmit")
    res.events.append(RayEvent("reflect", loc, tc, ray_id, depth=depth + 1, alpha_in=a_in,
                               c_minus=c_minus, c_plus=c_plus,
                               note="followed" if follow_r else "dropped"))
    res.events.append(RayEvent("transmit", loc, tc, ray_id, depth=depth + 1, alpha_in=a_in,
                               alpha_out=a_out, c_minus=c_minus, c_plus=c_plus,
                               note="followed" if follow_t else "dropped"))
    if follow_r:
        children.append((Xlo, reflected, tc, from_inner, depth + 1, root, next_id))
        next_id += 1
    if follow_t:
        children.append((Xhi, transmitted, tc, not from_inner, depth + 1, root, next_id))
        next_id += 1
    return children, next_id


def _initial_momentum(model, x0, theta):
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    d = np.atleast_2d(np.asarray(theta, dtype=float))
    if d.shape[1] == 1:
        d = np.column_stack([np.cos(d[:, 0]), np.sin(d[:, 0])])
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    inner = _sup(x0) <= model.interface_half_width if not model.smooth else np.zeros(len(x0), bool)
    c = _speed(model, x0, inner)[0]
    return x0, d / c[:, None]


def _direction(theta):
    if np.ndim(theta) == 0:
        return np.array([math.cos(theta), math.sin(theta)])
    return np.asarray(theta, dtype=float)


@dataclass
class GeodesicResult:
    path: np.ndarray
    exit_time: Optional[float]
    exit_point: Optional[np.ndarray]
    exit_momentum: Optional[np.ndarray]
    final: RayState
    kind: str


def trace_geodesic(x0, theta, model: SpeedModel, t_max: float, dt: Optional[float] = None,
                   h: float = DEFAULT_H) -> GeodesicResult:
    """Geodesic from ``x0`` in direction ``theta`` (angle or vector) until it
    leaves Omega or ``t_max`` elapses."""
    if not model.smooth:
        raise ValueError("speed is discontinuous; use trace_broken_ray")
    if _sup(np.atleast_2d(x0))[0] > model.omega_half_width:
        raise ValueError("x0 must lie in Omega")
    if dt is None:
        dt = default_dt(model, h)
    X, P = _initial_momentum(model, x0, _direction(theta))
    res = propagate(model, X, P, t_max, dt, record_paths=True)
    path = np.array(res.paths[0])
    if res.exits:
        _, _, te, xe, pe = res.exits[0]
        return GeodesicResult(path, te, xe, pe, RayState(xe, pe, te), "exit_boundary")
    ev = res.events[-1]
    return GeodesicResult(path, None, None, None, RayState(np.array(ev.location), None, ev.time),
                          "trapped_cap")


def integrate(model: SpeedModel, x, p, duration: float, dt: Optional[float] = None) -> RayState:
    """Integrate a smooth-speed ray for a fixed duration (no boundary check)."""
    if dt is None:
        dt = default_dt(model)
    X = np.atleast_2d(np.asarray(x, dtype=float))
    P = np.atleast_2d(np.asarray(p, dtype=float))
    inner = np.zeros(1, dtype=bool)
    n = int(duration // dt)
    for _ in range(n):
        X, P = _rk4(model, X, P, inner, dt)
    rest = duration - n * dt
    if rest > 0:
        X, P = _rk4(model, X, P, inner, rest)
    return RayState(X[0], P[0], duration)


@dataclass
class BrokenRayResult:
    events: list
    paths: dict
    exits: list

    def kinds(self) -> list:
        return [e.kind for e in self.events]


def trace_broken_ray(x0, theta, model: SpeedModel, t_max: float, branch_policy: str = "all",
                     dt: Optional[float] = None, h: float = DEFAULT_H,
                     depth_cap: int = DEPTH_CAP) -> BrokenRayResult:
    """Ray through a speed jump across the square interface of c4/c5."""
    if model.smooth:
        raise ValueError("speed has no interface; use trace_geodesic")
    if dt is None:
        dt = default_dt(model, h)
    X, P = _initial_momentum(model, x0, _direction(theta))
    res = propagate(model, X, P, t_max, dt, policy=branch_policy, depth_cap=depth_cap,
                    record_paths=True)
    return BrokenRayResult(res.events, {k: np.array(v) for k, v in res.paths.items()}, res.exits)


def _directions(n_dirs: int) -> np.ndarray:
    ang = 2 * np.pi * np.arange(n_dirs) / n_dirs
    return np.column_stack([np.cos(ang), np.sin(ang)])


@dataclass
class VisibilityMap:
    points: np.ndarray       # (m, 2) sampled base points
    fraction: np.ndarray     # (m,) fraction of visible directions
    n_dirs: int
    T: float
    invisible: list = field(default_factory=list)   # (point, direction) pairs

    def to_field(self, grid: Grid2D, fill: float = 1.0) -> np.ndarray:
        out = np.full(grid.shape, fill)
        i = np.rint((self.points[:, 0] - grid.x_min) / grid.h).astype(int)
        j = np.rint((self.points[:, 1] - grid.y_min) / grid.h).astype(int)
        out[j, i] = self.fraction
        return out


def _observed(cutoff, points):
    if cutoff is None:
        return np.ones(len(points), dtype=bool)
    return np.asarray(cutoff(points)) > 0


def sample_points(region: Region, stride: int = 1) -> np.ndarray:
    grid = region.grid
    mask = np.zeros_like(region.mask)
    mask[::stride, ::stride] = region.mask[::stride, ::stride]
    X, Y = grid.mesh()
    return np.column_stack([X[mask], Y[mask]])


def visibility_classify(K_region, model: SpeedModel, T: float, n_dirs: int = 32,
                        cutoff: Optional[Cutoff] = None, stride: int = 1,
                        dt: Optional[float] = None, h: float = DEFAULT_H) -> VisibilityMap:
    """Fraction of directions theta at each sampled x for which the ray through
    (x, theta) reaches the observed boundary within |t| < T.

    ``K_region`` is a Region (sampled every ``stride`` nodes) or an (m, 2) array.
    """
    if n_dirs < 8:
        raise ValueError("use at least 8 directions")
    pts = sample_points(K_region, stride) if isinstance(K_region, Region) else np.atleast_2d(K_region)
    dirs = _directions(n_dirs)
    m = len(pts)
    Xs = np.repeat(pts, 2 * n_dirs, axis=0)
    D = np.tile(np.vstack([dirs, -dirs]), (m, 1))
    X, P = _initial_momentum(model, Xs, D)
    if dt is None:
        dt = default_dt(model, h)
    res = propagate(model, X, P, T, dt, policy="all")
    hit = np.zeros(len(X), dtype=bool)
    if res.exits:
        roots = np.array([e[0] for e in res.exits])
        times = np.array([e[2] for e in res.exits])
        ok = _observed(cutoff, np.array([e[3] for e in res.exits])) & (times < T)
        hit[roots[ok]] = True
    hit = hit.reshape(m, 2, n_dirs)
    visible = hit[:, 0, :] | hit[:, 1, :]
    invisible = [(pts[k], dirs[d]) for k, d in zip(*np.nonzero(~visible))]
    return VisibilityMap(pts, visible.mean(axis=1), n_dirs, T, invisible)


@dataclass
class T1Estimate:
    value: float
    exceeds_cap: bool
    cap: float
    argmax: tuple = ()

    def __str__(self):
        if self.exceeds_cap:
            return f"T1 > {self.cap:g} (exceeds cap)"
        return f"T1 ~ {self.value:.4f}"


def exit_times(model: SpeedModel, points, dirs, cap: float, dt: Optional[float] = None) -> tuple:
    """Exit time along +theta and -theta for each (point, direction) pair
    (inf when the cap is reached first) and the exit points."""
    points = np.atleast_2d(points)
    dirs = np.atleast_2d(dirs)
    n = len(points)
    X, P = _initial_momentum(model, np.vstack([points, points]), np.vstack([dirs, -dirs]))
    res = propagate(model, X, P, cap, dt, policy="transmit")
    tau = np.full(2 * n, np.inf)
    where = np.full((2 * n, 2), np.nan)
    for r, _, te, xe, _ in res.exits:
        if te < tau[r]:
            tau[r] = te
            where[r] = xe
    return tau[:n], tau[n:], where[:n], where[n:]


def estimate_T1(model: SpeedModel, region=None, samples: int = 9, cap: float = 20.0,
                n_dirs: int = 64, dt: Optional[float] = None, h: float = DEFAULT_H) -> T1Estimate:
    """Longest sampled maximal geodesic, |tau+| + |tau-|, over a stratified grid of
    ``samples``^2 base points inside the region times ``n_dirs`` directions."""
    if not math.isfinite(cap) or cap <= 0:
        raise ValueError("cap must be finite and positive")
    if region is None:
        a = model.omega_half_width
        lo_x, hi_x, lo_y, hi_y = -a, a, -a, a
    elif isinstance(region, Region):
        X, Y = region.grid.mesh()
        lo_x, hi_x = X[region.mask].min(), X[region.mask].max()
        lo_y, hi_y = Y[region.mask].min(), Y[region.mask].max()
    else:
        lo_x, hi_x, lo_y, hi_y = region
    xs = np.linspace(lo_x, hi_x, samples + 2)[1:-1]
    ys = np.linspace(lo_y, hi_y, samples + 2)[1:-1]
    PX, PY = np.meshgrid(xs, ys)
    pts = np.repeat(np.column_stack([PX.ravel(), PY.ravel()]), n_dirs, axis=0)
    dirs = np.tile(_directions(n_dirs), (PX.size, 1))
    if dt is None:
        dt = default_dt(model, h)
    tp, tm, _, _ = exit_times(model, pts, dirs, cap, dt)
    total = tp + tm
    k = int(np.argmax(total))
    if not np.all(np.isfinite(total)) or total[k] > cap:
        return T1Estimate(math.inf, True, cap)
    return T1Estimate(float(total[k]), False, cap, (tuple(pts[k]), tuple(dirs[k])))


def symbol_of_K(x, xi, chi: Callable, model: SpeedModel, cap: float = 50.0,
                dt: Optional[float] = None) -> float:
    """1 - chi(exit at tau+)/2 - chi(exit at tau-)/2 for the geodesic through (x, xi)."""
    if not model.smooth:
        raise ValueError("symbol is defined for smooth speeds")
    tp, tm, xp, xm = exit_times(model, np.atleast_2d(x), np.atleast_2d(xi), cap, dt)
    if not (np.isfinite(tp[0]) and np.isfinite(tm[0])):
        raise ValueError("geodesic is trapped within the cap; symbol undefined")
    chi_p = float(np.asarray(chi(xp))[0])
    chi_m = float(np.asarray(chi(xm))[0])
    return 1.0 - 0.5 * chi_p - 0.5 * chi_m
