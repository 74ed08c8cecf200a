"""Boundary-to-boundary geodesics in T by shooting, and Gauss-Bonnet diagnostics.

A shot starts at collar height eps above the target end q with chart momentum
split into a tangential part p_par and an upward normal part.  The forward
run falls somewhere on the boundary; the backward run falls back near q, and
the launch point is shifted along the collar until that backward fall lands
exactly on q.  The landing map p_par -> landing point is then root-found
against p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize, root

from . import collinear as col
from . import geodesic as geo
from . import verify
from .errors import ConvergenceError, EscapeError, NoBracketError, QuadratureError

SCAN_SAMPLES = 33
MAX_ITER = 60
CORNER_WARN = 1e-3
T_MAX = 400.0


@dataclass(frozen=True)
class BoundaryPoint:
    arc: "col.Arc"
    s: float

    def __post_init__(self):
        object.__setattr__(self, "arc", col.Arc(self.arc))
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"arc parameter {self.s} must lie in the open interval (0, 1)")

    @property
    def perimeter(self):
        return col.perimeter(self.arc, self.s)

    def uv(self):
        p = col.boundary_param(self.arc, self.s)
        return p.u, p.v

    def distance_to_triple(self):
        """Arc-parameter distance to the nearest triple-collision corner."""
        if self.arc is col.Arc.Q2Q3:
            return min(self.s, 1.0 - self.s)
        return 1.0 - self.s


@dataclass(frozen=True)
class Shot:
    p_par: float
    launch_s: float  # along-arc parameter of the launch point, after correction
    landing: tuple  # (arc, s)
    back_landing: tuple
    forward: geo.Trajectory
    backward: geo.Trajectory


@dataclass(frozen=True)
class ShootingResult:
    p: BoundaryPoint
    q: BoundaryPoint
    eps: float
    launch_parameter: float
    residual: float
    iterations: int
    geodesic: geo.Trajectory  # uv-chart samples from q (t < 0) to p (t > 0)
    shot: Shot
    end_angles: tuple  # approach angles at the q and p ends
    scan: tuple = ()


def _rel(sigma, sigma0):
    return (sigma - sigma0) % 3.0


def speed_bound(q_arc, s, eps, atlas):
    """Chart momentum norm sqrt(2 g) at the launch point; |p_par| must stay below it."""
    p = col.boundary_param(q_arc, s, eps)
    return math.sqrt(2.0 * atlas["uv"].g(p.u, p.v))


def _launch(q_arc, s, eps, p_par, atlas):
    """Chart state at height eps above (q_arc, s) with tangential momentum p_par."""
    p = col.boundary_param(q_arc, s, eps)
    _, _, n, t = col.collar_frame(q_arc, p.u, p.v)
    m = math.sqrt(2.0 * atlas["uv"].g(p.u, p.v))
    if abs(p_par) >= m:
        raise ValueError(f"|p_par| = {abs(p_par)!r} exceeds the speed bound {m!r}")
    pt = p_par
    pn = math.sqrt(max(m * m - pt * pt, 0.0))
    px = pt * t[0] + pn * n[0]
    py = pt * t[1] + pn * n[1]
    name = atlas.choose(p.u, p.v)
    y = np.array([p.u, p.v, px, py])
    return name, geo.from_uv_state(name, y)


def _fall(name, y, atlas, tol, sign=1.0):
    s0 = geo.PhaseState(y[0], y[1], sign * y[2], sign * y[3], 0.0, name)
    tr = geo.integrate(s0, atlas, T_MAX, tol=tol, stop=("boundary:",))
    if not tr.termination.startswith("boundary:"):
        raise EscapeError(f"shot did not fall onto the boundary (termination {tr.termination!r})")
    arc = col.Arc(tr.termination.split(":", 1)[1])
    return tr, geo.landing_point(tr.charts[-1], tr.states[-1], arc)


def shoot(q: BoundaryPoint, eps: float, p_par: float, atlas=None, tol=1e-10, correct=True, max_corr=8,
          s_start=None) -> Shot:
    """One shot from height eps above q with tangential chart momentum ``p_par``.

    With ``correct`` the launch point is moved along the collar (starting from
    ``s_start``) until the backward fall lands on q.
    """
    atlas = atlas or geo.collinear_atlas()
    s = q.s if s_start is None else s_start
    back = None
    for _ in range(max_corr if correct else 1):
        name, y = _launch(q.arc, s, eps, p_par, atlas)
        bt, bl = _fall(name, y, atlas, tol, sign=-1.0)
        back = (bt, bl)
        if not correct:
            break
        err = col.perimeter(*bl) - q.perimeter
        err = (err + 1.5) % 3.0 - 1.5
        if abs(err) < 1e-13:
            break
        # perimeter runs opposite to s on Q3Q4
        ds = -err if q.arc is not col.Arc.Q3Q4 else err
        s_new = s + ds
        if not 0.0 < s_new < 1.0:
            break
        s = s_new
    name, y = _launch(q.arc, s, eps, p_par, atlas)
    ft, fl = _fall(name, y, atlas, tol)
    return Shot(p_par, s, fl, back[1], ft, back[0])


def landing_map(q: BoundaryPoint, eps: float, p_par: float, atlas=None, tol=1e-10):
    """Landing (arc, s) of the forward fall launched eps above q with tangential momentum p_par."""
    atlas = atlas or geo.collinear_atlas()
    name, y = _launch(q.arc, q.s, eps, p_par, atlas)
    _, fl = _fall(name, y, atlas, tol)
    return fl


def scan_parameters(bound, n=SCAN_SAMPLES, delta=1e-6, stretch=10.0):
    """Tangential momenta in [-(1 - delta) bound, (1 - delta) bound], clustered at 0.

    Only |p_par| = O(1) launches leave the collar, while the bound grows like
    1/eps, hence the sinh spacing.
    """
    x = np.linspace(-1.0, 1.0, n)
    return bound * (1.0 - delta) * np.sinh(stretch * x) / np.sinh(stretch)


def _safe(F, pp, tol):
    try:
        return F(pp, tol)
    except EscapeError:
        return math.nan


def _circ(a, b):
    d = abs(a - b) % 3.0
    return min(d, 3.0 - d)


def _refine_scan(pars, values, F, gap=0.2, depth=8):
    """Insert midpoints until consecutive landings are within ``gap`` along the perimeter."""
    for _ in range(depth):
        new_p, new_v = [pars[0]], [values[0]]
        changed = False
        for k in range(len(pars) - 1):
            a, b = values[k], values[k + 1]
            if math.isfinite(a) and math.isfinite(b) and _circ(a, b) > gap:
                m = 0.5 * (pars[k] + pars[k + 1])
                new_p.append(m)
                new_v.append(F(m))
                changed = True
            new_p.append(pars[k + 1])
            new_v.append(values[k + 1])
        pars, values = new_p, new_v
        if not changed:
            break
    return pars, values


def connect(p: BoundaryPoint, q: BoundaryPoint, eps: float = 1e-3, tol: float = 1e-6,
            scan=None, atlas=None, int_tol: float = 1e-10, scan_tol: float = 1e-8,
            max_iter: int = MAX_ITER) -> ShootingResult:
    """Geodesic of T with alpha-limit q and omega-limit p.

    ``scan`` overrides the launch fractions used to bracket the root; the
    residual is measured in the arc parameter of p.
    """
    if p.arc is q.arc and abs(p.s - q.s) < 1e-12:
        raise ValueError("p and q must be distinct boundary points")
    for b in (p, q):
        if b.distance_to_triple() < CORNER_WARN:
            warnings.warn(f"{b} lies within {CORNER_WARN} of a triple-collision corner", stacklevel=2)
    atlas = atlas or geo.collinear_atlas()
    bound = speed_bound(q.arc, q.s, eps, atlas)
    pars = scan_parameters(bound) if scan is None else np.asarray(scan, dtype=float)
    target = _rel(p.perimeter, q.perimeter)

    def F(pp, tol_):
        shot = shoot(q, eps, pp, atlas, tol_, correct=False)
        return _rel(col.perimeter(*shot.landing), q.perimeter) - target

    values = [_safe(F, pp, scan_tol) for pp in pars]
    pars, values = _refine_scan(list(pars), values, lambda pp: _safe(F, pp, scan_tol))
    pars = np.array(pars)
    values = np.array(values)
    bracket = None
    for k in range(len(pars) - 1):
        a, b = values[k], values[k + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        # after refinement a large jump can only be the wrap through q itself
        if abs(a - b) > 1.5:
            continue
        if a == 0.0 or a * b < 0:
            bracket = (pars[k], pars[k + 1])
            break
    landed = values[np.isfinite(values)] + target
    if bracket is None:
        rng = (float(np.min(landed)), float(np.max(landed))) if landed.size else (math.nan, math.nan)
        raise NoBracketError("landing map never brackets p", rng)

    count = [0]
    cache = {}
    last = [None]

    def G(pp):
        count[0] += 1
        shot = shoot(q, eps, pp, atlas, int_tol, correct=True, s_start=last[0])
        cache[pp] = shot
        last[0] = shot.launch_s
        d = _rel(col.perimeter(*shot.landing), q.perimeter) - target
        return (d + 1.5) % 3.0 - 1.5

    lo, hi = bracket
    glo, ghi = G(lo), G(hi)
    if glo * ghi > 0:
        # the launch-point correction moved the landing; widen to neighbours
        k = int(np.searchsorted(pars, lo))
        for j in range(max(0, k - 2), min(len(pars) - 1, k + 3)):
            a, b = G(pars[j]), G(pars[j + 1])
            if a * b <= 0:
                lo, hi, glo, ghi = pars[j], pars[j + 1], a, b
                break
        else:
            raise NoBracketError("corrected landing map lost the bracket", (glo + target, ghi + target))
    try:
        par_star, info = brentq(G, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=max_iter, full_output=True,
                                disp=False)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
    if not info.converged:
        raise ConvergenceError(f"shooting did not converge in {max_iter} iterations")
    shot = cache.get(par_star) or shoot(q, eps, par_star, atlas, int_tol)
    arc_l, s_l = shot.landing
    if arc_l is p.arc:
        residual = abs(s_l - p.s)
    else:
        residual = abs((col.perimeter(arc_l, s_l) - p.perimeter + 1.5) % 3.0 - 1.5)
    if residual > tol:
        raise ConvergenceError(f"residual {residual:.3e} exceeds tolerance {tol:.3e}")
    geod = _join(shot)
    angles = (geo.boundary_fall(shot.backward, eps), geo.boundary_fall(shot.forward, eps))
    return ShootingResult(p, q, eps, shot.p_par, residual, count[0], geod, shot,
                          tuple(float(a.angles[-1]) if a.angles.size else math.nan for a in angles),
                          tuple(zip(pars.tolist(), (values + target).tolist())))


def _join(shot: Shot) -> geo.Trajectory:
    """Single uv-chart sample set: backward fall (negative times) then forward fall."""
    def uv_rows(tr, sign):
        rows = []
        for t, c, y in zip(tr.t, tr.charts, tr.states):
            yy = geo.to_uv_state(c, y)
            rows.append((sign * t, np.array([yy[0], yy[1], sign * yy[2], sign * yy[3]])))
        return rows

    back = uv_rows(shot.backward, -1.0)[::-1]
    fwd = uv_rows(shot.forward, 1.0)[1:]
    rows = back + fwd
    t = np.array([r[0] for r in rows])
    states = np.array([r[1] for r in rows])
    drift = np.concatenate([shot.backward.drift[::-1], shot.forward.drift[1:]])
    events = tuple(shot.backward.events) + tuple(shot.forward.events)
    return geo.Trajectory("collinear", t, tuple("uv" for _ in rows), states, events,
                          shot.forward.termination, (), drift, shot.forward.tol)


def dense_uv(shot: Shot, per_step=4):
    """Dense uv points along the whole connecting geodesic (from q to p)."""
    pts = []
    for tr in (shot.backward, shot.forward):
        _, cs, ys = tr.dense(per_step)
        p = np.array([geo.to_uv_state(c, y)[:2] for c, y in zip(cs, ys)])
        pts.append(p[::-1] if tr is shot.backward else p)
    return np.vstack(pts)


def hausdorff(A, B):
    """Symmetric Hausdorff distance between two chart polylines."""
    return verify.hausdorff(A, B)


# ------------------------------------------------------------- Gauss-Bonnet


@dataclass(frozen=True)
class Edge:
    """Oriented chart curve on [0, 1] with position, velocity and acceleration."""

    pos: callable
    vel: callable
    acc: callable
    geodesic: bool = False


def _polyline_guess(a, b, chart, n=8):
    """Shortest JM polyline from a to b (starting from the chord), for root-finder guesses."""
    base = np.linspace(a, b, n + 2)

    def length(z):
        pts = np.vstack([a, z.reshape(n, 2), b])
        if not all(chart.domain(x, y) for x, y in pts):
            return 1e6
        return geo.jm_length(pts, chart.g)

    res = minimize(length, base[1:-1].ravel(), method="Powell", options={"xtol": 1e-6, "maxfev": 40000})
    return np.vstack([a, res.x.reshape(n, 2), b])


def geodesic_between(a, b, chart: geo.ConformalChart, atlas: geo.Atlas, tol=1e-11):
    """Interior geodesic from chart point a to b by solving for launch angle and time."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    guess = _polyline_guess(a, b, chart)
    d = guess[1] - guess[0]
    L = geo.jm_length(guess, chart.g)

    def run(phi, T):
        s0 = geo.unit_state(chart, a[0], a[1], phi)
        return geo.integrate(s0, atlas, T, tol=tol, stop=("end:", "boundary:"))

    def F(z):
        tr = run(z[0], z[1])
        if tr.charts[-1] != chart.name or tr.termination != "t_end":
            return np.array([1e3, 1e3])
        return tr.states[-1][:2] - b

    sol = root(F, np.array([math.atan2(d[1], d[0]), L / geo.SPEED]), method="hybr", tol=1e-13)
    if np.max(np.abs(F(sol.x))) > 1e-9:
        raise ConvergenceError(f"no interior geodesic between {a} and {b}: {sol.message}")
    return run(*sol.x)


def edge_from_trajectory(tr: geo.Trajectory, chart: geo.ConformalChart) -> Edge:
    t0, t1 = tr.t[0], tr.t[-1]
    T = t1 - t0

    def state(tau):
        _, y = tr.state_at(t0 + tau * T)
        return y

    def pos(tau):
        return state(tau)[:2]

    def vel(tau):
        x, y, px, py = state(tau)
        g = chart.g(x, y)
        return np.array([px, py]) / g * T

    def acc(tau):
        x, y, px, py = state(tau)
        g = chart.g(x, y)
        gx, gy = chart.grad_log_g(x, y)
        H = (px * px + py * py) / (2 * g)
        v = np.array([px, py]) / g
        pdot = H * np.array([gx, gy])
        # d/dt (p / g) = pdot / g - v (grad log g . v)
        return (pdot / g - v * (gx * v[0] + gy * v[1])) * T * T

    return Edge(pos, vel, acc, geodesic=True)


def edge_from_polyline(f, df, ddf) -> Edge:
    return Edge(f, df, ddf, geodesic=False)


@dataclass(frozen=True)
class GaussBonnetRecord:
    area_integral: float
    turning_sum: float  # sum of exterior angles
    boundary_integral: float  # integral of geodesic curvature
    defect: float
    interior_angles: tuple
    quadrature_error: float


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_bonnet(edges, chart: geo.ConformalChart, Kg, n=48, collar: Optional[float] = None) -> GaussBonnetRecord:
    """Gauss-Bonnet balance of a counterclockwise chart polygon.

    ``Kg(x, y)`` is the curvature density K * g = -Laplacian(log g) / 2.
    The area integral uses a fan from the vertex centroid with Gauss-Legendre
    in both directions; its error estimate is the change from n/2 to n nodes.
    """
    verts = np.array([e.pos(0.0) for e in edges])
    c = verts.mean(axis=0)

    def area(m):
        r, wr = _gl(m)
        tot = 0.0
        for e in edges:
            tau, wt = _gl(m)
            for tk, wk in zip(tau, wt):
                P = e.pos(tk) - c
                dP = e.vel(tk)
                jac = P[0] * dP[1] - P[1] * dP[0]
                pts = c + np.outer(r, P)
                vals = np.array([Kg(x, y) for x, y in pts])
                if not np.all(np.isfinite(vals)):
                    raise QuadratureError("curvature density not finite inside the region")
                tot += wk * jac * float(np.sum(wr * r * vals))
        return tot

    A = area(n)
    A_half = area(n // 2)
    bint = 0.0
    tau, wt = _gl(n)
    for e in edges:
        for tk, wk in zip(tau, wt):
            x, y = e.pos(tk)
            v = e.vel(tk)
            a = e.acc(tk)
            sp = math.hypot(*v)
            ke = (v[0] * a[1] - v[1] * a[0]) / sp**3
            nl = np.array([-v[1], v[0]]) / sp
            gx, gy = chart.grad_log_g(x, y)
            bint += wk * (ke - 0.5 * (gx * nl[0] + gy * nl[1])) * sp
    ext = []
    for k, e in enumerate(edges):
        nxt = edges[(k + 1) % len(edges)]
        v_in = e.vel(1.0)
        v_out = nxt.vel(0.0)
        ang = math.atan2(v_in[0] * v_out[1] - v_in[1] * v_out[0], float(np.dot(v_in, v_out)))
        ext.append(ang)
    turning = float(sum(ext))
    defect = 2 * math.pi - (A + bint + turning)
    return GaussBonnetRecord(A, turning, bint, defect, tuple(math.pi - a for a in ext), abs(A - A_half))


def signed_area(edges, n=48):
    """Euclidean signed chart area enclosed by the edge loop (positive if counterclockwise)."""
    tau, w = _gl(n)
    tot = 0.0
    for e in edges:
        for tk, wk in zip(tau, w):
            x, y = e.pos(tk)
            dx, dy = e.vel(tk)
            tot += 0.5 * wk * (x * dy - y * dx)
    return tot


def geodesic_triangle(vertices, chart: geo.ConformalChart, atlas: geo.Atlas, tol=1e-11):
    """Edges of the geodesic triangle through ``vertices``, oriented counterclockwise.

    Orientation is decided on the geodesic polygon itself, since strongly
    bent edges can reverse the orientation of the straight chart triangle.
    """
    v = [np.asarray(p, dtype=float) for p in vertices]
    edges = [edge_from_trajectory(geodesic_between(v[k], v[(k + 1) % 3], chart, atlas, tol), chart)
             for k in range(3)]
    if signed_area(edges) < 0:
        v = [v[0], v[2], v[1]]
        edges = [edge_from_trajectory(geodesic_between(v[k], v[(k + 1) % 3], chart, atlas, tol), chart)
                 for k in range(3)]
    return edges


def shirt_curvature_density(x, y):
    from . import shirt

    return -0.5 * shirt.laplacian_log_lambda(x, y)


def collinear_curvature_density(u, v):
    return -0.5 * col.laplacian_log_lambda_uv(u, v)
