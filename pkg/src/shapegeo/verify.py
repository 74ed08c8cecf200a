"""Independent numerical oracles and the verification suites built on them.

Every cross-check in the package goes through this module: finite-difference
Laplacians, metric pullbacks through the Hopf/Jacobi maps, the Newton versus
Jacobi-Maupertuis comparison, and polyline distances.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import collinear as col
from . import config_space as cs
from . import geodesic as geo
from . import shirt
from .errors import StencilDomainError

SINGULAR_STEP_FRACTION = 1e-2


@dataclass(frozen=True)
class FDScheme:
    h: float
    order: str = "richardson"  # or "2nd"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step must be positive")
        if self.order not in ("2nd", "richardson"):
            raise ValueError(f"unknown order {self.order!r}")


@dataclass(frozen=True)
class FDResult:
    value: float
    error: float


def _lap_2nd(field, x, h):
    x = np.asarray(x, dtype=float)
    f0 = field(*x)
    tot = 0.0
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        tot += field(*(x + e)) + field(*(x - e)) - 2.0 * f0
    val = tot / (h * h)
    if not math.isfinite(val):
        raise StencilDomainError(f"non-finite stencil values near {x.tolist()}")
    return val


def fd_laplacian(field: Callable, point, scheme: Optional[FDScheme] = None,
                 singular_distance: Optional[float] = None) -> FDResult:
    """Central-difference Laplacian of ``field(*point)`` in any dimension.

    With Richardson extrapolation the 2nd-order values at h, h/2, h/4 are
    combined twice (eliminating h^2 then h^4); the error estimate is the size
    of the last correction.  When ``singular_distance`` is given the default
    step is a fixed fraction of it so the stencil stays clear of the pole.
    """
    point = np.asarray(point, dtype=float)
    if scheme is None:
        h = SINGULAR_STEP_FRACTION * (singular_distance if singular_distance else 1.0)
        scheme = FDScheme(h)
    h = scheme.h
    if singular_distance is not None and h >= singular_distance:
        raise StencilDomainError(f"stencil step {h} reaches the singularity at distance {singular_distance}")
    try:
        if scheme.order == "2nd":
            a = _lap_2nd(field, point, h)
            b = _lap_2nd(field, point, h / 2)
            return FDResult(b, abs(b - a) / 3.0)
        L0, L1, L2 = (_lap_2nd(field, point, h / m) for m in (1, 2, 4))
    except (ZeroDivisionError, FloatingPointError, ArithmeticError) as exc:
        raise StencilDomainError(str(exc)) from exc
    R1 = (4 * L1 - L0) / 3
    R2 = (4 * L2 - L1) / 3
    R = (16 * R2 - R1) / 15
    return FDResult(R, abs(R - R2))


# ------------------------------------------------------------------ pullbacks


def _north_shape_jacobian(x, y):
    """u(x, y) on the unit sphere and its 3x2 Jacobian for the north chart."""
    r2 = x * x + y * y
    d = 1.0 + r2
    u = np.array([2 * x / d, 2 * y / d, (r2 - 1) / d])
    J = np.array([
        [2 * (d - 2 * x * x) / d**2, -4 * x * y / d**2],
        [-4 * x * y / d**2, 2 * (d - 2 * y * y) / d**2],
        [4 * x / d**2, 4 * y / d**2],
    ])
    return u, J


def shirt_pullback(x, y):
    """2x2 metric tensor U |dz_h|^2 pulled back to the north chart at (x, y).

    The conformal factor of the shirt equals ``shirt.SUBMERSION_SCALE`` times
    the diagonal entries.
    """
    u, J = _north_shape_jacobian(x, y)
    c = cs.inverse_hopf(cs.ShapePoint(*u))
    j = cs.jacobi(c)
    U = cs.potential(c)
    cols = []
    for k in range(2):
        dz1, dz2 = cs.horizontal_velocity(j.z1, j.z2, J[:, k])
        cols.append(np.array([dz1.real, dz1.imag, dz2.real, dz2.imag]))
    V = np.array(cols).T
    return U * (V.T @ V)


def collinear_pullback(u, v):
    """2x2 metric tensor U |d xi|^2 on the unit xi-sphere pulled back to the (u, v) chart."""
    h = 1e-6

    def xi(a, b):
        return col.xi_from_uv(a, b).as_array()

    J = np.array([(xi(u + h, v) - xi(u - h, v)) / (2 * h), (xi(u, v + h) - xi(u, v - h)) / (2 * h)]).T
    U = col.potential_xi(col.xi_from_uv(u, v))
    return U * (J.T @ J)


# ------------------------------------------------------------------ polylines


def point_to_polyline(points, poly, chunk=256):
    """Distance from each point to a polyline (any dimension)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(poly, dtype=float)
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.maximum(np.einsum("ij,ij->i", d, d), 1e-300)
    out = np.empty(len(points))
    for k in range(0, len(points), chunk):
        P = points[k:k + chunk, None, :]
        w = P - a[None]
        tt = np.clip(np.einsum("kij,ij->ki", w, d) / dd, 0.0, 1.0)
        r = w - tt[..., None] * d[None]
        out[k:k + chunk] = np.sqrt(np.min(np.einsum("kij,kij->ki", r, r), axis=1))
    return out


def hausdorff(A, B):
    """Symmetric Hausdorff distance between two polylines (point-to-segment)."""
    return float(max(point_to_polyline(A, B).max(), point_to_polyline(B, A).max()))


# ------------------------------------------------------------ JM versus Newton


@dataclass(frozen=True)
class JMNewtonRecord:
    max_deviation: float
    arc_length: float
    newton_samples: int
    J_max: float
    H_max: float


def newton_initial_data(x, y, angle, rotation: float = 0.0) -> cs.Configuration:
    """H = 0 parallelogram data over north-chart point (x, y) moving in direction ``angle``.

    ``rotation`` mixes in a rigid rotation (J != 0) at that fraction of the speed.
    """
    u, Jm = _north_shape_jacobian(x, y)
    du = Jm @ np.array([math.cos(angle), math.sin(angle)])
    c = cs.inverse_hopf(cs.ShapePoint(*u))
    j = cs.jacobi(c)
    dz1, dz2 = cs.horizontal_velocity(j.z1, j.z2, du)
    nh = math.sqrt(abs(dz1) ** 2 + abs(dz2) ** 2)
    dz1, dz2 = dz1 / nh, dz2 / nh
    if rotation:
        nz = math.sqrt(abs(j.z1) ** 2 + abs(j.z2) ** 2)
        r1, r2 = 1j * j.z1 / nz, 1j * j.z2 / nz
        c0, s0 = math.sqrt(1 - rotation**2), rotation
        dz1, dz2 = c0 * dz1 + s0 * r1, c0 * dz2 + s0 * r2
    speed = math.sqrt(2.0 * cs.potential(c))
    return cs.configuration_from_jacobi(j.z1, j.z2, speed * dz1, speed * dz2)


def _geodesic_distance(points, traj: geo.Trajectory, atlas):
    """Distance from each sphere point to the geodesic, minimized over its dense output."""
    ts, cs_, ys = traj.dense(4)
    S = np.array([atlas[c].to_common(y[0], y[1]) for c, y in zip(cs_, ys)])
    out = []
    for P in points:
        k = int(np.argmin(np.linalg.norm(S - P, axis=1)))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]

        def dist(t):
            c, y = traj.state_at(t)
            return float(np.linalg.norm(np.asarray(atlas[c].to_common(y[0], y[1])) - P))

        if hi > lo:
            r = minimize_scalar(dist, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
            out.append(min(r.fun, dist(ts[k])))
        else:
            out.append(dist(ts[k]))
    return np.array(out)


def jm_vs_newton(x, y, angle, L: float = 5.0, tol: float = 1e-12, rotation: float = 0.0,
                 samples: int = 200) -> JMNewtonRecord:
    """Max sphere distance from the projected Newtonian orbit to the JM geodesic (as a set)."""
    c0 = newton_initial_data(x, y, angle, rotation)
    U0 = cs.potential(c0)
    # JM arc length along Newton: ds = sqrt(U) |qdot| dt = sqrt(2) U dt
    t_guess = 1.5 * L / (math.sqrt(2.0) * U0)
    nt = cs.newtonian_flow(c0, t_guess, tol=tol)
    Us = np.array([cs.potential(nt.configuration(k)) for k in range(len(nt.t))])
    s = np.concatenate([[0.0], np.cumsum(0.5 * (Us[1:] + Us[:-1]) * np.diff(nt.t))]) * math.sqrt(2.0)
    while s[-1] < L and nt.termination == "t_end":
        t_guess *= 2
        nt = cs.newtonian_flow(c0, t_guess, tol=tol)
        Us = np.array([cs.potential(nt.configuration(k)) for k in range(len(nt.t))])
        s = np.concatenate([[0.0], np.cumsum(0.5 * (Us[1:] + Us[:-1]) * np.diff(nt.t))]) * math.sqrt(2.0)
    t_L = float(np.interp(L, s, nt.t))
    pts, Js, Hs = [], [], []
    for t in np.linspace(0.0, t_L, samples):
        c = nt.state_at(t)
        sp = cs.shape_of(c).normalized(2.0)
        pts.append(sp.as_array())
        k = cs.conserved(c)
        Js.append(abs(k.J))
        Hs.append(abs(k.H))
    atlas = geo.shirt_atlas()
    # lambda is twice U |dz_h|^2, so Newton JM length L is reached at t = L
    g = geo.integrate(geo.shirt_state(x, y, angle), atlas, 1.05 * L, tol=min(tol, 1e-11))
    dev = _geodesic_distance(np.array(pts), g, atlas)
    return JMNewtonRecord(float(dev.max()), L, samples, max(Js), max(Hs))


def virial_residual(traj: cs.ConfigTrajectory, n: int = 200, h: float = 1e-4) -> float:
    """max |I'' - 4H| along a Newtonian run, I'' by central differences of I' = 2<q, p>."""
    t0, t1 = traj.t[0] + 2 * h, traj.t[-1] - 2 * h
    worst = 0.0
    for t in np.linspace(t0, t1, n):
        a = cs.conserved(traj.state_at(t - h)).Idot
        b = cs.conserved(traj.state_at(t + h)).Idot
        H = cs.conserved(traj.state_at(t)).H
        worst = max(worst, abs((b - a) / (2 * h) - 4 * H))
    return worst


# ------------------------------------------------------------------- suites


@dataclass
class Case:
    suite: str
    case: str
    status: str
    measured: float
    tolerance: float

    def as_dict(self):
        return {"suite": self.suite, "case": self.case, "status": self.status,
                "measured": self.measured, "tolerance": self.tolerance}


def _case(suite, name, measured, tol, ok=None):
    ok = (measured <= tol) if ok is None else ok
    return Case(suite, name, "pass" if ok else "fail", float(measured), float(tol))


def _random_shirt_points(rng, n, box=3.0, exclusion=1e-2):
    out = []
    while len(out) < n:
        x, y = rng.uniform(-box, box, 2)
        if shirt.nearest_end(x, y)[1] > exclusion:
            out.append((x, y))
    return out


def _end_distance(x, y):
    return shirt.nearest_end(x, y)[1]


def suite_shirt_laplacian(rng, n=1000, laplacian=None):
    lap = laplacian or shirt.laplacian_log_lambda
    worst = 0.0
    for x, y in _random_shirt_points(rng, n):
        d = _end_distance(x, y)
        fd = fd_laplacian(lambda a, b: math.log(shirt.conformal_lambda(a, b)), (x, y), singular_distance=d)
        exact = lap(x, y)
        worst = max(worst, abs(fd.value - exact) / max(abs(exact), 1e-300))
    return [_case("shirt_laplacian", f"closed form vs Richardson FD at {n} points", worst, 1e-6)]


def suite_shirt_curvature(n=400):
    g = shirt.curvature_grid(-3, 3, -3, 3, n, exclusion=1e-12)
    K = g["K"]
    r = np.hypot(g["x"], g["y"])
    out = [_case("shirt_curvature", "max K on grid", max(float(np.nanmax(K)), 0.0), 0.0)]
    out.append(_case("shirt_curvature", "|K(0,0)|", abs(float(shirt.curvature(0.0, 0.0))), 1e-12))
    far = K[(r > 0.01) & ~g["near_end"]]
    out.append(_case("shirt_curvature", "max K off the origin", float(np.max(far)), -1e-12,
                     ok=bool(np.max(far) < -1e-12)))
    worst = 0.0
    for e in shirt.ShirtEnd:
        cx, cy = e.location
        for rr in np.geomspace(1e-6, 1e-2, 9):
            for th in np.linspace(0, 2 * np.pi, 16, endpoint=False):
                worst = max(worst, abs(float(shirt.curvature(cx + rr * math.cos(th), cy + rr * math.sin(th)))))
    out.append(_case("shirt_curvature", "max |K| within 1e-2 of an end", worst, 1e-3))
    return out


def suite_cylinder_ends(r=1e-3):
    out = []
    for e in shirt.ShirtEnd:
        c = shirt.end_geometry(e, (r,)).measured_circumferences[0]
        target = 2 * math.pi * e.stated_radius
        out.append(_case("cylinder_ends", f"{e.label} circumference vs 2 pi x {e.stated_radius:.6g}",
                         abs(c - target) / target, 1e-2))
    return out


def _random_xi(rng):
    while True:
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        try:
            col.potential_xi(col.XiCoord(*x))
            return x
        except Exception:
            continue


def suite_collinear(rng, n_cert=10000, n_fd=500, grid=200, collar=1e-2):
    out = []
    worst_term = math.inf
    worst_lap = math.inf
    for _ in range(n_cert):
        x = col.XiCoord(*_random_xi(rng))
        cert = col.laplacian_log_U_closed(x)
        worst_lap = min(worst_lap, cert.value)
        worst_term = min(worst_term, min(cert.terms.values()))
    out.append(_case("collinear", "min Laplacian(log U) (must be > 0)", worst_lap, 0.0, ok=worst_lap > 0))
    out.append(_case("collinear", "min certificate term (must be >= 0)", worst_term, 0.0, ok=worst_term >= 0))
    worst = 0.0
    for _ in range(n_fd):
        x = _random_xi(rng)
        d = min(abs(x[i] - s * x[j]) for i in range(3) for j in range(i + 1, 3) for s in (1, -1)) / 2
        f = lambda a, b, c: math.log(col.potential_xi(col.XiCoord(a, b, c)))
        fd = fd_laplacian(f, x, singular_distance=d)
        exact = col.laplacian_log_U_closed(col.XiCoord(*x)).value
        worst = max(worst, abs(fd.value - exact) / abs(exact))
    out.append(_case("collinear", f"closed-form Laplacian(log U) vs FD at {n_fd} points", worst, 1e-6))
    g = col.curvature_grid_uv(1 - col.SQRT3, 0.0, 0.0, col.SQRT3 - 1, grid, collar=collar)
    K = g["K"][g["in_T"]]
    out.append(_case("collinear", "max K on T minus collar (must be < 0)", float(np.max(K)), 0.0,
                     ok=bool(np.max(K) < 0)))
    return out


def _random_chart_direction(rng):
    while True:
        x, y = rng.uniform(-0.8, 0.8, 2)
        if shirt.nearest_end(x, y)[1] > 0.3:
            return x, y, rng.uniform(0, 2 * np.pi)


def suite_jm_newton(rng, n=20, L=5.0):
    worst = 0.0
    for _ in range(n):
        x, y, a = _random_chart_direction(rng)
        worst = max(worst, jm_vs_newton(x, y, a, L).max_deviation)
    x, y, a = _random_chart_direction(rng)
    neg = jm_vs_newton(x, y, a, L, rotation=0.5).max_deviation
    return [_case("jm_newton", f"max deviation over {n} runs", worst, 1e-5),
            _case("jm_newton", "negative control (J != 0) deviation (must be >= 1e-2)", neg, 1e-2, ok=neg >= 1e-2)]


def falling_trajectories(rng, n, atlas=None, tol=1e-10):
    atlas = atlas or geo.collinear_atlas()
    out = []
    while len(out) < n:
        u, v = rng.uniform(-0.6, -0.05), rng.uniform(0.05, 0.6)
        if not geo._uv_domain(u, v) or min(col.heights(u, v).values()) < 0.05:
            continue
        s = geo.collinear_state(u, v, rng.uniform(0, 2 * np.pi), atlas)
        tr = geo.integrate(s, atlas, 500.0, tol=tol, stop=("boundary:",))
        if tr.termination.startswith("boundary:"):
            out.append(tr)
    return out


def fall_statistics(tr: geo.Trajectory, y_check=1e-5, y_angle=1e-4, eps_seq=geo.EPS_SEQUENCE):
    """(|y p_y| - 1 at y_check, |angle - pi/2| at y_angle, displacement ratios under eps-halving)."""
    arc = geo._fall_arc(tr)
    out = {}
    c, y = geo.height_crossing(tr, arc, y_check)
    h, _, ph, _ = geo.collar_coordinates(c, y, arc)
    out["yp"] = abs(abs(h * ph) - 1.0)
    c, y = geo.height_crossing(tr, arc, y_angle)
    _, _, ph, pa = geo.collar_coordinates(c, y, arc)
    out["angle"] = abs(math.atan2(abs(ph), abs(pa)) - math.pi / 2)
    disp = geo.fixed_angle_displacements(tr, eps_seq)
    out["ratios"] = [disp[k + 1] / disp[k] for k in range(len(disp) - 1)]
    tail = [geo.boundary_fall(tr, e).displacement for e in eps_seq]
    out["tail_ratios"] = [tail[k + 1] / tail[k] for k in range(len(tail) - 1)]
    return out


def suite_asymptotics(rng, n=20):
    trs = falling_trajectories(rng, n)
    yp = ang = 0.0
    rmin, rmax = math.inf, -math.inf
    tails = []
    for tr in trs:
        st = fall_statistics(tr)
        yp = max(yp, st["yp"])
        ang = max(ang, st["angle"])
        rmin = min(rmin, *st["ratios"])
        rmax = max(rmax, *st["ratios"])
        tails.extend(st["tail_ratios"])
    return [_case("asymptotics", "max ||y p_y| - 1| at y = 1e-5", yp, 0.02),
            _case("asymptotics", "max |angle - pi/2| at y = 1e-4", ang, 0.05),
            _case("asymptotics", "min eps-halving displacement ratio", rmin, 0.4, ok=rmin >= 0.4),
            _case("asymptotics", "max eps-halving displacement ratio", rmax, 0.6, ok=rmax <= 0.6),
            # informational: one trajectory's own tail shrinks quadratically
            _case("asymptotics", "median single-trajectory tail ratio (info)", float(np.median(tails)),
                  0.25, ok=True)]


def random_boundary_pair(rng, margin=0.05):
    from .bvp import BoundaryPoint

    while True:
        a = BoundaryPoint(rng.choice(list(col.Arc)), rng.uniform(margin, 1 - margin))
        b = BoundaryPoint(rng.choice(list(col.Arc)), rng.uniform(margin, 1 - margin))
        if abs(((a.perimeter - b.perimeter) + 1.5) % 3.0 - 1.5) > 0.1:
            return a, b


def suite_shooting(rng, n=10):
    from . import bvp

    res_worst = haus_worst = 0.0
    t0 = time.perf_counter()
    for _ in range(n):
        p, q = random_boundary_pair(rng)
        r1 = bvp.connect(p, q, eps=1e-3)
        bound = bvp.speed_bound(q.arc, q.s, 5e-4, geo.collinear_atlas())
        scan = bvp.scan_parameters(bound, n=17, stretch=9.0)
        r2 = bvp.connect(p, q, eps=5e-4, scan=scan)
        res_worst = max(res_worst, r1.residual, r2.residual)
        haus_worst = max(haus_worst, hausdorff(bvp.dense_uv(r1.shot), bvp.dense_uv(r2.shot)))
    return [_case("shooting", "max residual in arc parameter", res_worst, 1e-6),
            _case("shooting", "max Hausdorff distance between re-solves", haus_worst, 1e-4),
            _case("shooting", "total runtime in seconds", time.perf_counter() - t0, 300.0)]


T_TRIANGLES = (
    ((-0.3, 0.3), (-0.15, 0.5), (-0.5, 0.2)),
    ((-0.2, 0.2), (-0.4, 0.3), (-0.25, 0.45)),
    ((-0.1, 0.15), (-0.3, 0.1), (-0.2, 0.35)),
    ((-0.5, 0.1), (-0.35, 0.25), (-0.35, 0.15)),
    ((-0.1, 0.5), (-0.15, 0.3), (-0.25, 0.45)),
)
SHIRT_TRIANGLES = (
    ((0.2, 0.3), (-0.4, 0.1), (0.1, -0.5)),
    ((0.5, 0.5), (1.5, 1.2), (0.8, 1.6)),
    ((-0.5, -0.4), (-1.2, -0.8), (-0.4, -1.3)),
    ((0.3, -0.2), (0.7, -0.6), (0.2, -0.8)),
    ((-0.3, 0.4), (-0.7, 0.2), (-0.5, 0.7)),
)


def suite_gauss_bonnet():
    from . import bvp

    out = []
    worst = 0.0
    max_sum = -math.inf
    ca = geo.collinear_atlas()
    sa = geo.shirt_atlas()
    for verts, chart, atlas, Kg in ([(v, ca["uv"], ca, bvp.collinear_curvature_density) for v in T_TRIANGLES]
                                    + [(v, sa["north"], sa, bvp.shirt_curvature_density) for v in SHIRT_TRIANGLES]):
        rec = bvp.gauss_bonnet(bvp.geodesic_triangle(verts, chart, atlas), chart, Kg)
        worst = max(worst, abs(rec.defect))
        max_sum = max(max_sum, sum(rec.interior_angles))
    out.append(_case("gauss_bonnet", "max |defect| over 10 triangles", worst, 1e-3))
    out.append(_case("gauss_bonnet", "max angle sum (must be < pi)", max_sum, math.pi, ok=max_sum < math.pi))
    return out


def suite_syzygy():
    from . import syzygy as sz

    d = sz.dictionary()
    out = [_case("syzygy", "distinct arc-midpoint orderings (must be 4)", len(set(d.values())), 4,
                 ok=len(set(d.values())) == 4)]
    fixtures = {"AABC": "BC", "ABBA": "", "ABAB": "ABAB", "ABCCBD": "AD", "DDDD": "", "CABBAC": ""}
    bad = sum(sz.reduce(sz.from_letters(k)).letters != v for k, v in fixtures.items())
    out.append(_case("syzygy", "hand-reduced fixture mismatches", bad, 0))
    atlas = geo.shirt_atlas()
    s0 = geo.shirt_state(0.3, 0.2, 0.7)
    a = sz.detect(geo.integrate(s0, atlas, 40.0, tol=1e-10))
    b = sz.detect(geo.integrate(s0, atlas, 40.0, tol=1e-11))
    same = a.letters == b.letters and sz.reduce(a).is_stutter_free()
    out.append(_case("syzygy", "sequence change under 10x tolerance tightening", 0 if same else 1, 0))
    return out


def suite_roundtrips(rng, n=200):
    worst_hopf = worst_xi = 0.0
    for _ in range(n):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        sp = cs.ShapePoint(*u)
        if 1.0 + sp.u1 < 1e-3:
            continue
        back = cs.shape_of(cs.inverse_hopf(sp, rng.uniform(0, 2 * np.pi)))
        worst_hopf = max(worst_hopf, float(np.max(np.abs(back.as_array() - sp.as_array()))))
        q = np.sort(rng.normal(size=4))
        q -= q.mean()
        worst_xi = max(worst_xi, float(np.max(np.abs(col.line_from_xi(col.xi_from_line(q)) - q))))
    out = [_case("roundtrips", "hopf / inverse_hopf", worst_hopf, 1e-12),
           _case("roundtrips", "xi / line", worst_xi, 1e-12)]
    atlas = geo.shirt_atlas()
    worst_rate = 0.0
    for _ in range(3):
        x, y, a = _random_chart_direction(rng)
        tr = geo.integrate(geo.shirt_state(x, y, a), atlas, 20.0, tol=1e-10)
        worst_rate = max(worst_rate, float(np.sum(np.abs(tr.drift))) / tr.arc_length)
    for tr in falling_trajectories(rng, 3):
        worst_rate = max(worst_rate, float(np.sum(np.abs(tr.drift))) / tr.arc_length)
    out.append(_case("roundtrips", "H drift per unit arc length", worst_rate, 1e-8))
    worst_vir = 0.0
    for _ in range(3):
        x, y, a = _random_chart_direction(rng)
        c = newton_initial_data(x, y, a)
        p = c.p * 1.1  # H > 0 so the virial identity is not trivially zero
        nt = cs.newtonian_flow(cs.Configuration(c.q, p), 0.5, tol=1e-12)
        worst_vir = max(worst_vir, virial_residual(nt))
    out.append(_case("roundtrips", "virial residual I'' - 4H", worst_vir, 1e-5))
    return out


DEFAULT_SEED = 20240601


def suites(quick: bool = False, seed: int = DEFAULT_SEED):
    """Name -> zero-argument callable producing a list of Cases."""
    k = 10 if quick else 1

    def rng():
        return np.random.default_rng(seed)

    out = {
        "shirt_laplacian": lambda: suite_shirt_laplacian(rng(), n=1000 // k),
        "shirt_curvature": lambda: suite_shirt_curvature(n=400 // (2 if quick else 1)),
        "cylinder_ends": lambda: suite_cylinder_ends(),
        "collinear": lambda: suite_collinear(rng(), n_cert=10000 // k, n_fd=500 // k),
        "jm_newton": lambda: suite_jm_newton(rng(), n=20 // (5 if quick else 1)),
        "asymptotics": lambda: suite_asymptotics(rng(), n=20 // (5 if quick else 1)),
        "shooting": lambda: suite_shooting(rng(), n=1 if quick else 10),
        "gauss_bonnet": suite_gauss_bonnet,
        "syzygy": suite_syzygy,
        "roundtrips": lambda: suite_roundtrips(rng(), n=200 // k),
    }
    return out


def run_all(report_path=None, quick: bool = False, only=None, stream=None, seed: int = DEFAULT_SEED):
    """Run the suites, write the JSON report, print a summary; returns (exit_code, cases)."""
    cases = []
    known = suites(quick, seed)
    unknown = set(only or ()) - set(known)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}; valid: {sorted(known)}")
    for name, fn in known.items():
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            res = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            res = [Case(name, f"raised {type(exc).__name__}: {exc}", "fail", math.nan, math.nan)]
        cases.extend(res)
        if stream is not None:
            for c in res:
                print(f"[{c.status.upper()}] {c.suite}: {c.case} (measured {c.measured:.3e}, tol {c.tolerance:.3e})",
                      file=stream)
            print(f"  {name}: {time.perf_counter() - t0:.1f}s", file=stream)
    n_fail = sum(c.status != "pass" for c in cases)
    if report_path is not None:
        from .io import write_json

        write_json(report_path, [c.as_dict() for c in cases])
    if stream is not None:
        print(f"{len(cases) - n_fail}/{len(cases)} checks passed", file=stream)
    return (0 if n_fail == 0 else 1), cases
