"""The parallelogram invariant surface ("the shirt").

Shape points are normalized to I = 2, i.e. to the unit sphere in (u1, u2, u3).
Two stereographic charts cover the sphere:

* ``north``: (x, y) = (u1, u2) / (1 - u3), misses the pole u3 = 1;
* ``south``: (x, y) = (u1, -u2) / (1 + u3), misses u3 = -1.

The y-flip in the south chart keeps both charts positively oriented; the
transition is then the holomorphic map z -> 1/z.  Since U does not depend on
u3 and is even in u2, the conformal factor is the same function in both
charts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config_space import ShapePoint
from .errors import EndSingularityError, PoleError, QuadratureError

SHIRT_I = 2.0
END_EXCLUSION = 1e-12
# lambda * (dx^2 + dy^2) is this multiple of the pushed-down U ds^2_Eucl
SUBMERSION_SCALE = 2.0


class ShirtEnd(enum.Enum):
    """Collision punctures, located in the north chart."""

    BC13 = ("BC13", (0.0, -1.0), (1, 3))
    BC24 = ("BC24", (0.0, 1.0), (2, 4))
    SBC12 = ("SBC12", (-1.0, 0.0), (1, 2))
    SBC14 = ("SBC14", (1.0, 0.0), (1, 4))

    def __init__(self, label, location, pair):
        self.label = label
        self.location = location
        self.pair = pair

    @property
    def is_simultaneous(self):
        return self.label.startswith("SBC")

    @property
    def stated_radius(self):
        """Cylinder radius quoted for this end in the literature (1/sqrt2 or 1)."""
        return 1.0 if self.is_simultaneous else 1.0 / math.sqrt(2.0)

    @property
    def metric_radius(self):
        """Cylinder radius implied by the leading term of lambda: sqrt of its 1/r^2 coefficient."""
        return 2.0 if self.is_simultaneous else 1.0


@dataclass(frozen=True)
class ShirtChartPoint:
    chart: str
    x: float
    y: float

    def __post_init__(self):
        if self.chart not in ("north", "south"):
            raise ValueError(f"unknown chart {self.chart!r}")


def stereographic(s: ShapePoint, chart: str = "north", tol: float = 1e-9) -> ShirtChartPoint:
    u1, u2, u3 = s.u1, s.u2, s.u3
    if abs(u1 * u1 + u2 * u2 + u3 * u3 - 1.0) > tol:
        raise ValueError("shape point must be normalized to I = 2")
    if chart == "north":
        d = 1.0 - u3
        if d <= 0.0:
            raise PoleError("north pole is excluded from the north chart")
        return ShirtChartPoint("north", u1 / d, u2 / d)
    d = 1.0 + u3
    if d <= 0.0:
        raise PoleError("south pole is excluded from the south chart")
    return ShirtChartPoint("south", u1 / d, -u2 / d)


def inverse_stereographic(p: ShirtChartPoint) -> ShapePoint:
    x, y = p.x, p.y
    r2 = x * x + y * y
    if p.chart == "north":
        return ShapePoint(2 * x / (1 + r2), 2 * y / (1 + r2), (r2 - 1) / (1 + r2))
    return ShapePoint(2 * x / (1 + r2), -2 * y / (1 + r2), (1 - r2) / (1 + r2))


def chart_transition(p: ShirtChartPoint) -> ShirtChartPoint:
    """Change of chart z -> 1/z, i.e. (x, y) -> (x, -y)/(x^2 + y^2)."""
    r2 = p.x * p.x + p.y * p.y
    if r2 == 0.0:
        raise PoleError("origin maps to the pole of the other chart")
    other = "south" if p.chart == "north" else "north"
    return ShirtChartPoint(other, p.x / r2, -p.y / r2)


def nearest_end(x, y):
    """(ShirtEnd, chart distance) of the closest puncture."""
    best = min(ShirtEnd, key=lambda e: math.hypot(x - e.location[0], y - e.location[1]))
    return best, math.hypot(x - best.location[0], y - best.location[1])


def _check_regular(x, y):
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        end, d = nearest_end(float(x), float(y))
        if d <= END_EXCLUSION:
            raise EndSingularityError(end.label)


def conformal_f(x, y):
    _check_regular(x, y)
    return (
        2.0 / ((x + 1) ** 2 + y**2)
        + 2.0 / ((x - 1) ** 2 + y**2)
        + 1.0 / (2.0 * (x**2 + (y + 1) ** 2))
        + 1.0 / (2.0 * (x**2 + (y - 1) ** 2))
    )


def conformal_lambda(x, y):
    """Conformal factor of the reduced JM metric: ds^2 = lambda (dx^2 + dy^2)."""
    return 4.0 * conformal_f(x, y) / (x**2 + y**2 + 1.0)


def grad_log_lambda(x, y):
    _check_regular(x, y)
    f = fx = fy = 0.0
    for cx, cy, a in ((-1.0, 0.0, 2.0), (1.0, 0.0, 2.0), (0.0, -1.0, 0.5), (0.0, 1.0, 0.5)):
        dx, dy = x - cx, y - cy
        d2 = dx * dx + dy * dy
        f = f + a / d2
        k = -2.0 * a / (d2 * d2)
        fx = fx + k * dx
        fy = fy + k * dy
    s = 1.0 + x * x + y * y
    return fx / f - 2.0 * x / s, fy / f - 2.0 * y / s


def laplacian_log_lambda(x, y):
    """Closed-form flat Laplacian of log lambda; non-negative, zero only at the origin."""
    x2, y2 = x * x, y * y
    bracket = 5 + 5 * x2 * x2 - 6 * y2 + 5 * y2 * y2 + 2 * x2 * (3 + 5 * y2)
    assert np.all(np.asarray(bracket) > 0)
    return 256.0 * (x2 + y2) / bracket**2


def curvature(x, y):
    """Gaussian curvature K = -Laplacian(log lambda) / (2 lambda)."""
    return -laplacian_log_lambda(x, y) / (2.0 * conformal_lambda(x, y))


def curvature_or_limit(x, y, exclusion=END_EXCLUSION):
    """(K, is_limit): the documented limit 0 is reported at the ends instead of raising."""
    end, d = nearest_end(x, y)
    if d <= exclusion:
        return 0.0, True
    return float(curvature(x, y)), False


@dataclass(frozen=True)
class EndGeometry:
    end: ShirtEnd
    radii: tuple
    asymptotic_radius: float
    metric_radius: float
    measured_circumferences: tuple
    monotone: bool


def jm_circle_length(center, radius, n=1024):
    """JM length of the north-chart circle of given radius about ``center`` (periodic trapezoid rule)."""
    th = 2 * np.pi * np.arange(n) / n
    x = center[0] + radius * np.cos(th)
    y = center[1] + radius * np.sin(th)
    return float(2 * np.pi * radius * np.mean(np.sqrt(conformal_lambda(x, y))))


def end_geometry(end: ShirtEnd, radii, n=1024) -> EndGeometry:
    """Measure JM circumferences of small chart circles around a puncture."""
    radii = tuple(float(r) for r in radii)
    cx, cy = end.location
    out = []
    for r in radii:
        for other in ShirtEnd:
            if other is end:
                continue
            gap = math.hypot(cx - other.location[0], cy - other.location[1]) - r
            if gap <= 1e-2:
                raise QuadratureError(f"circle of radius {r} about {end.label} meets the {other.label} exclusion disk")
        out.append(jm_circle_length((cx, cy), r, n))
    order = np.argsort(radii)
    c_sorted = np.asarray(out)[order]
    monotone = bool(np.all(np.diff(c_sorted) >= 0) or np.all(np.diff(c_sorted) <= 0))
    return EndGeometry(end, radii, end.stated_radius, end.metric_radius, tuple(out), monotone)


def grid_fields(X, Y, exclusion=1e-2):
    """f, lambda, Laplacian(log lambda) and K on coordinate arrays.

    Points within ``exclusion`` of an end carry NaN for the singular fields and
    K = 0 (the limit value).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    near = np.zeros_like(X, dtype=bool)
    for e in ShirtEnd:
        near |= np.hypot(X - e.location[0], Y - e.location[1]) <= exclusion
    with np.errstate(divide="ignore", invalid="ignore"):
        f = conformal_f(X, Y)
        lam = 4.0 * f / (X**2 + Y**2 + 1.0)
        lap = laplacian_log_lambda(X, Y)
        K = -lap / (2.0 * lam)
    f = np.where(near, np.nan, f)
    lam = np.where(near, np.nan, lam)
    K = np.where(near, 0.0, K)
    return {"x": X.ravel(), "y": Y.ravel(), "f": f.ravel(), "lambda": lam.ravel(),
            "lap_log_lambda": lap.ravel(), "K": K.ravel(), "near_end": near.ravel()}


def curvature_grid(xmin, xmax, ymin, ymax, n, exclusion=1e-2):
    """Row-major n x n grid (y outer, x inner) of the fields in ``grid_fields``."""
    xs = np.linspace(xmin, xmax, n)
    ys = np.linspace(ymin, ymax, n)
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    return grid_fields(X, Y, exclusion)
