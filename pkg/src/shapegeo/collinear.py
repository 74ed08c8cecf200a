"""The collinear invariant surface and the ordered region T.

Collinear configurations are handled in the coordinates

    2 xi1 = q1 - q2 - q3 + q4,  2 xi2 = q1 - q2 + q3 - q4,  2 xi3 = q1 + q2 - q3 - q4,

normalized to |xi| = 1 (I = 1), and in the chart

    u = (xi1 + xi2) / (1 - xi3),  v = (xi1 - xi2) / (1 - xi3),

where the reduced JM metric reads (lambda / 2)(du^2 + dv^2).

Sign convention for T: forward-mapping ordered configurations q1 < q2 < q3 < q4
lands in u < 0 < v, and the circle on which q2 = q3 is centered at
``Q23_CIRCLE_CENTER`` = (1, -1).  ``_self_test`` checks this at import.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArcRangeError, CenterError, CollisionError, CollisionSingularityError, PoleError

SQRT3 = math.sqrt(3.0)
Q23_CIRCLE_CENTER = (1.0, -1.0)
CIRCLE_RADIUS = 2.0
# each circle term of lambda: center -> colliding pair
CIRCLE_PAIRS = {(1.0, -1.0): (2, 3), (-1.0, -1.0): (1, 3), (1.0, 1.0): (2, 4), (-1.0, 1.0): (1, 4)}
# s_ij / r_ij denominators -> colliding bodies
XI_PAIRS = {
    ("s", 1, 2): (1, 2), ("r", 1, 2): (3, 4),
    ("s", 1, 3): (1, 3), ("r", 1, 3): (2, 4),
    ("s", 2, 3): (1, 4), ("r", 2, 3): (2, 3),
}


@dataclass(frozen=True)
class XiCoord:
    xi1: float
    xi2: float
    xi3: float

    def as_array(self):
        return np.array([self.xi1, self.xi2, self.xi3])

    @property
    def norm(self):
        return math.sqrt(self.xi1**2 + self.xi2**2 + self.xi3**2)

    def normalized(self):
        n = self.norm
        return XiCoord(self.xi1 / n, self.xi2 / n, self.xi3 / n)


@dataclass(frozen=True)
class UVPoint:
    u: float
    v: float


def xi_from_line(q, tol=1e-12) -> XiCoord:
    q1, q2, q3, q4 = (float(a) for a in q)
    if abs(q1 + q2 + q3 + q4) > tol * max(1.0, max(abs(q1), abs(q2), abs(q3), abs(q4))):
        raise CenterError("positions must sum to zero")
    return XiCoord((q1 - q2 - q3 + q4) / 2, (q1 - q2 + q3 - q4) / 2, (q1 + q2 - q3 - q4) / 2)


def line_from_xi(xi: XiCoord):
    a, b, c = xi.xi1, xi.xi2, xi.xi3
    return np.array([(a + b + c) / 2, (-a - b + c) / 2, (-a + b - c) / 2, (a - b - c) / 2])


def _denominators(xi):
    x = np.asarray(xi, dtype=float)
    out = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        out[("s", i + 1, j + 1)] = x[..., i] + x[..., j]
        out[("r", i + 1, j + 1)] = x[..., i] - x[..., j]
    return out


def _check_xi(xi):
    for key, d in _denominators(xi).items():
        if np.any(d == 0.0):
            raise CollisionError(XI_PAIRS[key], f"{key[0]}_{key[1]}{key[2]} denominator vanished")


def potential_xi(xi) -> float:
    """Strong-force potential of the collinear configuration with coordinates ``xi``.

    Accepts an XiCoord or an array with trailing dimension 3 (vectorized).
    """
    arr = xi.as_array() if isinstance(xi, XiCoord) else np.asarray(xi, dtype=float)
    _check_xi(arr)
    total = sum(d**-2.0 for d in _denominators(arr).values())
    return float(total) if np.ndim(total) == 0 else total


def f_quadratic(x, y):
    """3x^2 + 3y^2 - 4xy, positive away from the origin."""
    return 3 * x * x + 3 * y * y - 4 * x * y


@dataclass(frozen=True)
class LaplacianCertificate:
    value: float
    terms: dict  # label -> term of U^2 d_i^2 log U divided by U^2 (each >= 0)


def _pair_inv(x, i, j):
    return 1.0 / (x[..., i] + x[..., j]), 1.0 / (x[..., i] - x[..., j])


def certificate_terms(xi):
    """Summands of sum_i d_i^2 log U, each manifestly non-negative.

    For fixed i with j, k the other indices, and s_ij = 1/(xi_i + xi_j),
    r_ij = 1/(xi_i - xi_j), ^n x_ij = s_ij^n + r_ij^n,

        U^2 d_i^2 log U = 2(^6x_ij + ^6x_ik + s_ij^2 r_ij^2 f(s_ij, r_ij) + s_ik^2 r_ik^2 f(s_ik, r_ik))
                        + 2(s_ij^2 s_ik^2 f(s_ij, s_ik) + s_ij^2 r_ik^2 f(s_ij, r_ik)
                            + s_ik^2 r_ij^2 f(s_ik, r_ij) + r_ij^2 r_ik^2 f(r_ij, r_ik))
                        + 6 ^2x_jk (^4x_ij + ^4x_ik)

    with f(x, y) = 3x^2 + 3y^2 - 4xy.  Returned terms are divided by U^2.
    """
    x = xi.as_array() if isinstance(xi, XiCoord) else np.asarray(xi, dtype=float)
    _check_xi(x)
    U = sum(d**-2.0 for d in _denominators(x).values())
    U2 = U * U
    f = f_quadratic
    terms = {}
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        sj, rj = _pair_inv(x, i, j)
        sk, rk = _pair_inv(x, i, k)
        sjk, rjk = _pair_inv(x, j, k)
        a, b, c = i + 1, j + 1, k + 1
        x2jk = sjk**2 + rjk**2
        t = {
            f"2*x6_{a}{b}": 2 * (sj**6 + rj**6),
            f"2*x6_{a}{c}": 2 * (sk**6 + rk**6),
            f"2*s{a}{b}^2 r{a}{b}^2 f": 2 * sj**2 * rj**2 * f(sj, rj),
            f"2*s{a}{c}^2 r{a}{c}^2 f": 2 * sk**2 * rk**2 * f(sk, rk),
            f"2*s{a}{b}^2 s{a}{c}^2 f": 2 * sj**2 * sk**2 * f(sj, sk),
            f"2*s{a}{b}^2 r{a}{c}^2 f": 2 * sj**2 * rk**2 * f(sj, rk),
            f"2*s{a}{c}^2 r{a}{b}^2 f": 2 * sk**2 * rj**2 * f(sk, rj),
            f"2*r{a}{b}^2 r{a}{c}^2 f": 2 * rj**2 * rk**2 * f(rj, rk),
            f"6*x2_{b}{c} x4_{a}{b}": 6 * x2jk * (sj**4 + rj**4),
            f"6*x2_{b}{c} x4_{a}{c}": 6 * x2jk * (sk**4 + rk**4),
        }
        for label, val in t.items():
            terms[f"d{a}: {label}"] = val / U2
    return terms


def laplacian_log_U_closed(xi) -> LaplacianCertificate:
    terms = certificate_terms(xi)
    value = sum(terms.values())
    if np.ndim(value) == 0:
        value = float(value)
        terms = {k: float(v) for k, v in terms.items()}
    return LaplacianCertificate(value=value, terms=terms)


# ------------------------------------------------------------------ (u, v) chart


def uv_projection(xi: XiCoord, tol=1e-9) -> UVPoint:
    if abs(xi.norm - 1.0) > tol:
        raise ValueError("xi must be normalized to |xi| = 1")
    d = 1.0 - xi.xi3
    if d <= 0.0:
        raise PoleError("xi3 = 1 is the pole of the (u, v) chart")
    return UVPoint((xi.xi1 + xi.xi2) / d, (xi.xi1 - xi.xi2) / d)


def xi_from_uv(u, v) -> XiCoord:
    r2 = u * u + v * v
    return XiCoord(2 * (u + v) / (2 + r2), 2 * (u - v) / (2 + r2), (r2 - 2) / (r2 + 2))


def line_from_uv(u, v):
    return line_from_xi(xi_from_uv(u, v))


_CIRCLES = ((1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0))


def _check_uv(u, v):
    if np.ndim(u) or np.ndim(v):
        return
    if u == 0.0:
        raise CollisionSingularityError("u", "u = 0 (q1 = q2)")
    if v == 0.0:
        raise CollisionSingularityError("v", "v = 0 (q3 = q4)")
    for a, b in _CIRCLES:
        if (u - a) ** 2 + (v - b) ** 2 - 4.0 == 0.0:
            raise CollisionSingularityError(f"circle{(a, b)}", f"circle centered {(a, b)} (q{CIRCLE_PAIRS[(a, b)]})")


def lambda_uv(u, v):
    """Conformal factor lambda; the JM metric on the collinear surface is (lambda/2)(du^2 + dv^2)."""
    _check_uv(u, v)
    total = 1.0 / (u * u) + 1.0 / (v * v)
    for a, b in _CIRCLES:
        w = (u - a) ** 2 + (v - b) ** 2 - 4.0
        total = total + 16.0 / (w * w)
    return total


def lambda_derivatives(u, v):
    """lambda, d lambda/du, d lambda/dv and the flat Laplacian of lambda, term by term."""
    _check_uv(u, v)
    u2, v2 = u * u, v * v
    lam = 1.0 / u2 + 1.0 / v2
    lu = -2.0 / (u2 * u)
    lv = -2.0 / (v2 * v)
    lap = 6.0 / (u2 * u2) + 6.0 / (v2 * v2)
    for a, b in _CIRCLES:
        du, dv = u - a, v - b
        w = du * du + dv * dv - 4.0
        w2 = w * w
        lam = lam + 16.0 / w2
        k = -64.0 / (w2 * w)
        lu = lu + k * du
        lv = lv + k * dv
        lap = lap + 256.0 * (w + 6.0) / (w2 * w2)
    return lam, lu, lv, lap


def grad_log_lambda_uv(u, v):
    lam, lu, lv, _ = lambda_derivatives(u, v)
    return lu / lam, lv / lam


def laplacian_log_lambda_uv(u, v):
    lam, lu, lv, lap = lambda_derivatives(u, v)
    return lap / lam - (lu * lu + lv * lv) / (lam * lam)


def curvature_uv(u, v):
    """Gaussian curvature of (lambda/2)(du^2 + dv^2): K = -Laplacian(log lambda)/lambda."""
    lam, lu, lv, lap = lambda_derivatives(u, v)
    return -(lap / lam - (lu * lu + lv * lv) / (lam * lam)) / lam


def curvature_from_xi(xi: XiCoord):
    """Curvature via the sphere route: K = (1 - (Laplacian log U + 2)/2) / U at |xi| = 1."""
    x = xi.normalized()
    lap = laplacian_log_U_closed(x).value
    return (1.0 - 0.5 * (lap + 2.0)) / potential_xi(x)


# ------------------------------------------------------------------ region T

ARC_LENGTH_STRAIGHT = SQRT3 - 1.0
THETA_A = 2.0 * math.pi / 3.0  # circle angle at the q1=q2=q3 corner
THETA_B = 5.0 * math.pi / 6.0  # circle angle at the q2=q3=q4 corner


class Arc(enum.Enum):
    """Boundary arcs of T (s runs from the first-named corner to the second)."""

    Q1Q2 = "Q1Q2"  # u = 0, from the simultaneous-binary corner to triple A
    Q2Q3 = "Q2Q3"  # circle, from triple A to triple B
    Q3Q4 = "Q3Q4"  # v = 0, from the simultaneous-binary corner to triple B


CORNER_SBC = (0.0, 0.0)
CORNER_TRIPLE_A = (0.0, SQRT3 - 1.0)  # q1 = q2 = q3
CORNER_TRIPLE_B = (1.0 - SQRT3, 0.0)  # q2 = q3 = q4


def _q23_radius(u, v):
    return math.hypot(u - Q23_CIRCLE_CENTER[0], v - Q23_CIRCLE_CENTER[1])


def heights(u, v):
    """Signed Euclidean heights above the three arcs (all positive inside T)."""
    return {Arc.Q1Q2: -u, Arc.Q3Q4: v, Arc.Q2Q3: CIRCLE_RADIUS - _q23_radius(u, v)}


def collar_frame(arc: Arc, u, v):
    """(height, along, inward unit normal, unit tangent in direction of increasing s)."""
    if arc is Arc.Q1Q2:
        return -u, v, (-1.0, 0.0), (0.0, 1.0)
    if arc is Arc.Q3Q4:
        return v, -u, (0.0, 1.0), (-1.0, 0.0)
    cx, cy = Q23_CIRCLE_CENTER
    r = _q23_radius(u, v)
    th = math.atan2(v - cy, u - cx)
    c, s = math.cos(th), math.sin(th)
    return CIRCLE_RADIUS - r, CIRCLE_RADIUS * th, (-c, -s), (-s, c)


def arc_length(arc: Arc):
    return ARC_LENGTH_STRAIGHT if arc is not Arc.Q2Q3 else CIRCLE_RADIUS * (THETA_B - THETA_A)


def along_to_s(arc: Arc, along):
    if arc is Arc.Q2Q3:
        return (along / CIRCLE_RADIUS - THETA_A) / (THETA_B - THETA_A)
    return along / ARC_LENGTH_STRAIGHT


def s_to_along(arc: Arc, s):
    if arc is Arc.Q2Q3:
        return CIRCLE_RADIUS * (THETA_A + s * (THETA_B - THETA_A))
    return s * ARC_LENGTH_STRAIGHT


def boundary_param(arc, s, height=0.0) -> UVPoint:
    """Point at arc parameter s (arc-length uniform), optionally lifted ``height`` into T."""
    arc = Arc(arc)
    if not 0.0 <= s <= 1.0:
        raise ArcRangeError(f"arc parameter {s} outside [0, 1]")
    if arc is Arc.Q1Q2:
        return UVPoint(-height, s * ARC_LENGTH_STRAIGHT)
    if arc is Arc.Q3Q4:
        return UVPoint(-s * ARC_LENGTH_STRAIGHT, height)
    th = THETA_A + s * (THETA_B - THETA_A)
    r = CIRCLE_RADIUS - height
    return UVPoint(Q23_CIRCLE_CENTER[0] + r * math.cos(th), Q23_CIRCLE_CENTER[1] + r * math.sin(th))


def perimeter(arc, s):
    """Cyclic coordinate on the boundary of T in [0, 3): SBC -> A -> B -> SBC."""
    arc = Arc(arc)
    if arc is Arc.Q1Q2:
        return s
    if arc is Arc.Q2Q3:
        return 1.0 + s
    return (3.0 - s) % 3.0


def from_perimeter(sigma):
    sigma = sigma % 3.0
    if sigma < 1.0:
        return Arc.Q1Q2, sigma
    if sigma < 2.0:
        return Arc.Q2Q3, sigma - 1.0
    return Arc.Q3Q4, 3.0 - sigma


@dataclass(frozen=True)
class RegionT:
    """The closure of the ordered disk q1 <= q2 <= q3 <= q4 in the (u, v) chart."""

    arcs: tuple = tuple(Arc)
    sbc_corner: tuple = CORNER_SBC
    triple_corners: tuple = (CORNER_TRIPLE_A, CORNER_TRIPLE_B)
    q23_circle_center: tuple = Q23_CIRCLE_CENTER

    def membership(self, p: UVPoint) -> bool:
        """Interior membership decided on the ordered line configuration."""
        q = line_from_uv(p.u, p.v)
        return bool(q[0] < q[1] < q[2] < q[3])

    def boundary_param(self, arc, s, height=0.0) -> UVPoint:
        return boundary_param(arc, s, height)

    def corner_kind(self, p: UVPoint, tol=1e-12):
        for name, c in (("simultaneous_binary", CORNER_SBC), ("triple_q1q2q3", CORNER_TRIPLE_A),
                        ("triple_q2q3q4", CORNER_TRIPLE_B)):
            if math.hypot(p.u - c[0], p.v - c[1]) <= tol:
                return name
        return None


def region_T() -> RegionT:
    return RegionT()


def grid_fields_uv(U, V, collar=0.0):
    """lambda, K and the in-T mask (height above ``collar``) on coordinate arrays."""
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam, lu, lv, lap = lambda_derivatives(U, V)
        K = -(lap / lam - (lu * lu + lv * lv) / (lam * lam)) / lam
    h = np.minimum(np.minimum(-U, V), CIRCLE_RADIUS - np.hypot(U - Q23_CIRCLE_CENTER[0], V - Q23_CIRCLE_CENTER[1]))
    in_T = h > collar
    return {"u": U.ravel(), "v": V.ravel(), "lambda": lam.ravel(), "K": K.ravel(), "in_T": in_T.ravel()}


def curvature_grid_uv(umin, umax, vmin, vmax, n, collar=0.0):
    """Row-major n x n grid (v outer, u inner) of the fields in ``grid_fields_uv``."""
    xs = np.linspace(umin, umax, n)
    ys = np.linspace(vmin, vmax, n)
    V, U = np.meshgrid(ys, xs, indexing="ij")
    return grid_fields_uv(U, V, collar)


def _self_test():
    # ordered configurations must land in u < 0 < v inside the (1, -1) circle
    for q in ((-3.0, -1.0, 1.0, 3.0), (-2.0, -1.5, 0.5, 3.0), (-1.0, -0.2, 0.1, 1.1)):
        x = xi_from_line(q).normalized()
        p = uv_projection(x)
        assert p.u < 0 < p.v and _q23_radius(p.u, p.v) < CIRCLE_RADIUS
    # q2 -> q3 must approach the circle whose center is Q23_CIRCLE_CENTER
    x = xi_from_line((-2.0, 0.0, 1e-9, 2.0 - 1e-9)).normalized()
    p = uv_projection(x)
    w = {c: abs((p.u - c[0]) ** 2 + (p.v - c[1]) ** 2 - 4.0) for c in _CIRCLES}
    assert min(w, key=w.get) == Q23_CIRCLE_CENTER


_self_test()
