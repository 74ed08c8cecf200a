"""Unit-energy geodesic flow of conformal metrics g (dx^2 + dy^2) on 2-D charts.

The Hamiltonian is H = |p|^2 / (2 g) and trajectories live on H = 1, so the
metric speed is constant ``SPEED = sqrt(2)``: JM arc length = sqrt(2) * t.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import collinear as col
from . import shirt
from .errors import DomainError, DomainEscapeError, NotFallingError
from .rk import DormandPrince, locate_crossing

SPEED = math.sqrt(2.0)
H_TOL = 1e-9
DEFAULT_COLLAR = 1e-3
EPS_SEQUENCE = (1e-3, 5e-4, 2.5e-4)


@dataclass(frozen=True)
class Event:
    """Zero crossing of ``field(state)``; ``direction=-1`` fires on + to - only."""

    kind: Union[str, Callable[[np.ndarray], str]]
    field: Callable[[np.ndarray], float]
    direction: int = -1
    terminal: bool = True

    def label(self, state):
        return self.kind(state) if callable(self.kind) else self.kind


@dataclass(frozen=True)
class Transition:
    trigger: Event
    target: str
    mapping: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConformalChart:
    name: str
    g: Callable[[float, float], float]
    grad_log_g: Callable[[float, float], tuple]
    domain: Callable[[float, float], bool]
    events: tuple = ()
    transitions: tuple = ()
    to_common: Callable[[float, float], tuple] = lambda x, y: (x, y)


@dataclass(frozen=True)
class Atlas:
    name: str
    charts: dict
    choose: Callable[[float, float], str] = None

    def __getitem__(self, name) -> ConformalChart:
        return self.charts[name]


@dataclass(frozen=True)
class PhaseState:
    x: float
    y: float
    px: float
    py: float
    t: float = 0.0
    chart: str = ""

    def vector(self):
        return np.array([self.x, self.y, self.px, self.py])


def hamiltonian(state, chart: ConformalChart) -> float:
    x, y, px, py = state[:4] if not isinstance(state, PhaseState) else state.vector()
    return (px * px + py * py) / (2.0 * chart.g(x, y))


def unit_state(chart: ConformalChart, x, y, angle, t=0.0) -> PhaseState:
    """State at (x, y) moving in chart direction ``angle`` with H = 1."""
    if not chart.domain(x, y):
        raise DomainError(f"({x}, {y}) outside chart {chart.name}")
    m = math.sqrt(2.0 * chart.g(x, y))
    return PhaseState(x, y, m * math.cos(angle), m * math.sin(angle), t, chart.name)


def eom(s: PhaseState, chart: ConformalChart) -> np.ndarray:
    """Hamilton's equations: x' = p/g, p' = H grad(log g) (= grad log g on H = 1)."""
    if not chart.domain(s.x, s.y):
        raise DomainError(f"({s.x}, {s.y}) outside chart {chart.name}")
    return _rhs(chart)(s.t, s.vector())


def _rhs(chart):
    g, grad = chart.g, chart.grad_log_g

    def f(t, y):
        x, yy, px, py = y
        gv = g(x, yy)
        gx, gy = grad(x, yy)
        H = (px * px + py * py) / (2.0 * gv)
        return np.array([px / gv, py / gv, H * gx, H * gy])

    return f


@dataclass(frozen=True)
class TrajectoryEvent:
    kind: str
    t: float
    x: float
    y: float
    chart: str
    data: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Trajectory:
    """Samples at accepted steps plus the dense-output segments between them."""

    atlas: str
    t: np.ndarray
    charts: tuple
    states: np.ndarray  # (n, 4): x, y, px, py
    events: tuple
    termination: str
    segments: tuple = field(repr=False, default=())
    drift: np.ndarray = field(repr=False, default=None)  # per sample, H - 1 before renormalization
    tol: float = 1e-10

    @property
    def duration(self):
        return float(abs(self.t[-1] - self.t[0]))

    @property
    def arc_length(self):
        return SPEED * self.duration

    @property
    def final(self) -> PhaseState:
        x, y, px, py = self.states[-1]
        return PhaseState(x, y, px, py, float(self.t[-1]), self.charts[-1])

    def _segment_index(self, t):
        lo = np.array([min(s.t0, s.t1) for s in self.segments])
        k = int(np.searchsorted(lo, t, side="right")) - 1 if self.t[-1] >= self.t[0] else None
        if k is None:
            hi = np.array([s.t1 for s in self.segments])
            k = int(np.searchsorted(-hi, -t, side="left"))
        return int(np.clip(k, 0, len(self.segments) - 1))

    def state_at(self, t):
        """(chart, state vector) from dense output at time ``t``."""
        seg = self.segments[self._segment_index(t)]
        return seg.tag, seg(t)

    def dense(self, per_step=8):
        """Evenly subdivided dense samples: (t, charts, states)."""
        ts, cs, ys = [], [], []
        for seg in self.segments:
            for k in range(per_step):
                tt = seg.t0 + (seg.t1 - seg.t0) * k / per_step
                ts.append(tt)
                cs.append(seg.tag)
                ys.append(seg(tt))
        ts.append(self.t[-1])
        cs.append(self.charts[-1])
        ys.append(self.states[-1])
        return np.array(ts), cs, np.array(ys)

    def common_points(self, atlas: "Atlas", per_step=8):
        _, cs, ys = self.dense(per_step)
        return np.array([atlas[c].to_common(y[0], y[1]) for c, y in zip(cs, ys)])

    def events_of(self, prefix):
        return [e for e in self.events if e.kind.startswith(prefix)]


def _crossed(ev: Event, f0, f1):
    if ev.direction < 0:
        return f0 > 0 >= f1
    if ev.direction > 0:
        return f0 < 0 <= f1
    return (f0 > 0 >= f1) or (f0 < 0 <= f1)


def integrate(s0: PhaseState, atlas: Atlas, t_end: float, tol: float = 1e-10, stop=None,
              renormalize: bool = True, max_steps: int = 200_000, max_step: float = math.inf) -> Trajectory:
    """Integrate the H = 1 geodesic flow from ``s0`` until ``t_end`` or a terminal event.

    ``stop`` optionally restricts which terminal event kinds end the run (prefix
    match); other terminal events are then only recorded.
    """
    chart = atlas[s0.chart]
    y = s0.vector()
    H0 = hamiltonian(y, chart)
    if abs(H0 - 1.0) > H_TOL:
        raise ValueError(f"initial state has H = {H0!r}, expected 1")
    if not chart.domain(s0.x, s0.y):
        raise DomainError(f"initial point outside chart {chart.name}")
    direction = 1.0 if t_end >= s0.t else -1.0
    stepper = DormandPrince(_rhs(chart), s0.t, y, direction, rtol=tol, atol=tol, max_step=max_step)
    ts, cs, ys, segs, drift, events = [s0.t], [chart.name], [y], [], [0.0], []
    termination = "max_steps"

    def is_stop(kind):
        return stop is None or any(kind.startswith(k) for k in stop)

    for _ in range(max_steps):
        if direction * (stepper.t - t_end) >= 0:
            termination = "t_end"
            break
        seg = stepper.step(t_limit=t_end).with_tag(chart.name)
        y0, y1 = seg.y0, seg.y1
        # earliest crossing among events and transitions
        hit = None
        for ev in chart.events:
            f0, f1 = ev.field(y0), ev.field(y1)
            if _crossed(ev, f0, f1):
                tc = locate_crossing(ev.field, seg, seg.t0, seg.t1, f0, f1)
                if hit is None or direction * (tc - hit[0]) < 0:
                    hit = (tc, ev, None)
        for tr in chart.transitions:
            f0, f1 = tr.trigger.field(y0), tr.trigger.field(y1)
            if _crossed(tr.trigger, f0, f1):
                tc = locate_crossing(tr.trigger.field, seg, seg.t0, seg.t1, f0, f1)
                if hit is None or direction * (tc - hit[0]) < 0:
                    hit = (tc, tr.trigger, tr)
        if hit is not None:
            tc, ev, tr = hit
            yc = seg(tc)
            seg.t1 = tc  # interpolant unchanged, interval shortened
            segs.append(seg)
            ts.append(tc)
            cs.append(chart.name)
            ys.append(yc)
            drift.append(hamiltonian(yc, chart) - 1.0)
            kind = ev.label(yc)
            if tr is not None:
                ynew = tr.mapping(yc)
                events.append(TrajectoryEvent("handoff", tc, yc[0], yc[1], chart.name, {"to": tr.target}))
                chart = atlas[tr.target]
                ynew = _project(ynew, chart)
                ts.append(tc)
                cs.append(chart.name)
                ys.append(ynew)
                drift.append(0.0)
                stepper = DormandPrince(_rhs(chart), tc, ynew, direction, rtol=tol, atol=tol,
                                        first_step=stepper.h_abs, max_step=max_step)
                continue
            events.append(TrajectoryEvent(kind, tc, yc[0], yc[1], chart.name))
            if is_stop(kind):
                termination = kind
                break
            ys[-1] = _project(yc, chart) if renormalize else yc
            stepper.restart(tc, ys[-1])
            continue
        if not chart.domain(y1[0], y1[1]):
            raise DomainEscapeError(f"left chart {chart.name} at t={seg.t1!r} without a boundary event")
        drift.append(hamiltonian(y1, chart) - 1.0)
        y_acc = _project(y1, chart) if renormalize else y1
        if renormalize:
            stepper.restart(seg.t1, y_acc)
        segs.append(seg)
        ts.append(seg.t1)
        cs.append(chart.name)
        ys.append(y_acc)
    return Trajectory(atlas=atlas.name, t=np.array(ts), charts=tuple(cs), states=np.array(ys),
                      events=tuple(events), termination=termination, segments=tuple(segs),
                      drift=np.array(drift), tol=tol)


def _project(y, chart):
    # p <- p sqrt(2 g) / |p|
    g = chart.g(y[0], y[1])
    m = math.hypot(y[2], y[3])
    out = np.array(y, dtype=float)
    if m > 0:
        out[2:] *= math.sqrt(2.0 * g) / m
    return out


# ----------------------------------------------------------------- shirt atlas

_SHIRT_POLES = ((-1.0, 0.0, 2.0), (1.0, 0.0, 2.0), (0.0, -1.0, 0.5), (0.0, 1.0, 0.5))


def _shirt_g(x, y):
    f = 0.0
    for cx, cy, a in _SHIRT_POLES:
        dx, dy = x - cx, y - cy
        f += a / (dx * dx + dy * dy)
    return 4.0 * f / (1.0 + x * x + y * y)


def _shirt_grad(x, y):
    f = fx = fy = 0.0
    for cx, cy, a in _SHIRT_POLES:
        dx, dy = x - cx, y - cy
        d2 = dx * dx + dy * dy
        f += a / d2
        k = -2.0 * a / (d2 * d2)
        fx += k * dx
        fy += k * dy
    s = 1.0 + x * x + y * y
    return fx / f - 2.0 * x / s, fy / f - 2.0 * y / s


def _invert_state(y):
    # z -> 1/z with covector p -> -p conj(z)^2
    z = complex(y[0], y[1])
    p = complex(y[2], y[3])
    zn = 1.0 / z
    pn = -p * z.conjugate() ** 2
    return np.array([zn.real, zn.imag, pn.real, pn.imag])


def _south_end_locations():
    out = {}
    for e in shirt.ShirtEnd:
        z = 1.0 / complex(*e.location)
        out[e.label] = (z.real, z.imag)
    return out


def _north_to_sphere(x, y):
    r2 = x * x + y * y
    return 2 * x / (1 + r2), 2 * y / (1 + r2), (r2 - 1) / (1 + r2)


def _south_to_sphere(x, y):
    r2 = x * x + y * y
    return 2 * x / (1 + r2), -2 * y / (1 + r2), (1 - r2) / (1 + r2)


# cylinder chart of an end: z = e + exp(w) in the north chart.  There the metric
# is 4 (a + r^2 f_rest) / (1 + |z|^2) |dw|^2, tending to a flat cylinder.


def _cyl_kernels(end):
    ex, ey = end.location
    a0 = next(a for cx, cy, a in _SHIRT_POLES if (cx, cy) == (ex, ey))
    others = tuple(t for t in _SHIRT_POLES if (t[0], t[1]) != (ex, ey))

    def parts(X, Y):
        r = math.exp(X)
        dx, dy = r * math.cos(Y), r * math.sin(Y)
        x, y = ex + dx, ey + dy
        fr = frx = fry = 0.0
        for cx, cy, a in others:
            qx, qy = x - cx, y - cy
            q2 = qx * qx + qy * qy
            fr += a / q2
            k = -2.0 * a / (q2 * q2)
            frx += k * qx
            fry += k * qy
        r2 = r * r
        G = a0 + r2 * fr
        s = 1.0 + x * x + y * y
        return x, y, dx, dy, r2, fr, frx, fry, G, s

    def g(X, Y):
        *_, G, s = parts(X, Y)
        return 4.0 * G / s

    def grad(X, Y):
        x, y, dx, dy, r2, fr, frx, fry, G, s = parts(X, Y)
        # grad_z G = 2 d f_rest + r^2 grad f_rest; grad_w = conj(d) grad_z
        gz = complex(2 * dx * fr + r2 * frx, 2 * dy * fr + r2 * fry)
        hz = complex(2 * x / s, 2 * y / s)
        dc = complex(dx, -dy)
        out = dc * gz / G - dc * hz
        return out.real, out.imag

    return g, grad


def _north_to_cyl(end):
    e = complex(*end.location)

    def f(y):
        d = complex(y[0], y[1]) - e
        w = cmath.log(d)
        pw = complex(y[2], y[3]) * d.conjugate()
        return np.array([w.real, w.imag, pw.real, pw.imag])

    return f


def _cyl_to_north(end):
    e = complex(*end.location)

    def f(y):
        d = cmath.exp(complex(y[0], y[1]))
        z = e + d
        pz = complex(y[2], y[3]) / d.conjugate()
        return np.array([z.real, z.imag, pz.real, pz.imag])

    return f


def _cyl_to_sphere(end):
    ex, ey = end.location

    def f(X, Y):
        r = math.exp(X)
        return _north_to_sphere(ex + r * math.cos(Y), ey + r * math.sin(Y))

    return f


def shirt_atlas(end_stop: float = 1e-8, handoff_radius: float = 2.0, end_in: float = 0.05,
                end_out: float = 0.08) -> Atlas:
    """Charts of the shirt.

    North and south stereographic charts hand off when |z| crosses
    ``handoff_radius``; inside chart distance ``end_in`` of a puncture the
    flow moves to that end's cylinder chart w = log(z - e) and returns to the
    north chart beyond ``end_out``.  Reaching chart distance ``end_stop`` is a
    terminal ``end:<label>`` event.
    """
    locs = {"north": {e.label: e.location for e in shirt.ShirtEnd}, "south": _south_end_locations()}
    charts = {}

    for name, other in (("north", "south"), ("south", "north")):
        evs = []
        for label, (cx, cy) in locs[name].items():
            evs.append(Event(f"end:{label}", lambda s, cx=cx, cy=cy: math.hypot(s[0] - cx, s[1] - cy) - end_stop))
        trans = [Transition(Event("handoff", lambda s: handoff_radius - math.hypot(s[0], s[1]), terminal=False),
                            other, _invert_state)]
        for end in shirt.ShirtEnd:
            ex, ey = end.location
            if name == "north":
                field = lambda s, ex=ex, ey=ey: math.hypot(s[0] - ex, s[1] - ey) - end_in
                mapping = _north_to_cyl(end)
            else:
                def field(s, ex=ex, ey=ey):
                    z = 1.0 / complex(s[0], s[1])
                    return math.hypot(z.real - ex, z.imag - ey) - end_in

                mapping = (lambda y, m=_north_to_cyl(end): m(_invert_state(y)))
            trans.append(Transition(Event("handoff", field, terminal=False), f"cyl:{end.label}", mapping))

        def domain(x, y, loc=locs[name]):
            if not (math.isfinite(x) and math.isfinite(y)):
                return False
            return all(math.hypot(x - a, y - b) > 0.0 for a, b in loc.values())

        to_common = _north_to_sphere if name == "north" else _south_to_sphere
        charts[name] = ConformalChart(name, _shirt_g, _shirt_grad, domain, tuple(evs), tuple(trans), to_common)

    x_stop, x_out = math.log(end_stop), math.log(end_out)
    for end in shirt.ShirtEnd:
        g, grad = _cyl_kernels(end)
        evs = (Event(f"end:{end.label}", lambda s: s[0] - x_stop),)
        trans = (Transition(Event("handoff", lambda s: x_out - s[0], terminal=False), "north", _cyl_to_north(end)),)
        dom = (lambda X, Y: math.isfinite(X) and math.isfinite(Y) and X < x_out + 1.0)
        charts[f"cyl:{end.label}"] = ConformalChart(f"cyl:{end.label}", g, grad, dom, evs, trans,
                                                   _cyl_to_sphere(end))

    def choose(x, y):
        e, d = shirt.nearest_end(x, y)
        return f"cyl:{e.label}" if d < end_in else "north"

    return Atlas("shirt", charts, choose)


def from_north_state(chart_name, y):
    """North-chart phase state expressed in ``chart_name``."""
    y = np.asarray(y, dtype=float)
    if chart_name == "north":
        return y
    if chart_name == "south":
        return _invert_state(y)
    return _north_to_cyl(shirt.ShirtEnd[chart_name.split(":", 1)[1]])(y)


def to_north_state(chart_name, y):
    y = np.asarray(y, dtype=float)
    if chart_name == "north":
        return y
    if chart_name == "south":
        return _invert_state(y)
    return _cyl_to_north(shirt.ShirtEnd[chart_name.split(":", 1)[1]])(y)


def shirt_state(x, y, angle, atlas: Optional[Atlas] = None, t=0.0) -> PhaseState:
    """H = 1 state at north-chart point (x, y) heading in north-chart direction ``angle``."""
    atlas = atlas or shirt_atlas()
    s = unit_state(atlas["north"], x, y, angle, t)
    name = atlas.choose(x, y)
    return PhaseState(*from_north_state(name, s.vector()), t, name)


def equator_angle(u1, u2):
    """Position on the equator circle of the unit sphere, in [0, 2 pi)."""
    return math.atan2(u2, u1) % (2 * math.pi)


# ----------------------------------------------------------- collinear region T


# check-free scalar kernels for the integrator; the chart domain guards the poles
_C = ((1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0))


def _uv_g(u, v):
    t = 1.0 / (u * u) + 1.0 / (v * v)
    for a, b in _C:
        w = (u - a) * (u - a) + (v - b) * (v - b) - 4.0
        t += 16.0 / (w * w)
    return 0.5 * t


def _uv_grad(u, v):
    u2, v2 = u * u, v * v
    lam = 1.0 / u2 + 1.0 / v2
    lu = -2.0 / (u2 * u)
    lv = -2.0 / (v2 * v)
    for a, b in _C:
        du, dv = u - a, v - b
        w = du * du + dv * dv - 4.0
        w2 = w * w
        lam += 16.0 / w2
        k = -64.0 / (w2 * w)
        lu += k * du
        lv += k * dv
    return lu / lam, lv / lam


def _w_from_zeta(X, Y):
    # inverse of zeta = -w^2 with w in the quadrant u < 0 < v
    w = -cmath.sqrt(complex(-X, -Y))
    return w


def _corner_g(X, Y):
    w = _w_from_zeta(X, Y)
    return _uv_g(w.real, w.imag) / (4.0 * abs(w) ** 2)


def _corner_grad(X, Y):
    w = _w_from_zeta(X, Y)
    gx, gy = _uv_grad(w.real, w.imag)
    # grad_zeta F(w(zeta)) = conj(dw/dzeta) grad_w F, with dw/dzeta = -1/(2w)
    dw = -1.0 / (2.0 * w)
    gz = dw.conjugate() * complex(gx, gy)
    zeta = complex(X, Y)
    gz -= zeta / abs(zeta) ** 2
    return gz.real, gz.imag


def _uv_to_corner(y):
    w = complex(y[0], y[1])
    p = complex(y[2], y[3])
    zeta = -w * w
    pz = p / (-2.0 * w).conjugate()
    return np.array([zeta.real, zeta.imag, pz.real, pz.imag])


def _corner_to_uv(y):
    w = _w_from_zeta(y[0], y[1])
    pz = complex(y[2], y[3])
    pw = pz * (-2.0 * w).conjugate()
    return np.array([w.real, w.imag, pw.real, pw.imag])


def _uv_domain(u, v):
    return u < 0.0 < v and math.hypot(u - col.Q23_CIRCLE_CENTER[0], v - col.Q23_CIRCLE_CENTER[1]) < col.CIRCLE_RADIUS


def corner_chart(y_stop: float = 1e-8, r_out: float = 0.15) -> ConformalChart:
    """Regularizing chart zeta = -(u + i v)^2 near the simultaneous-binary corner.

    The corner becomes an ordinary boundary point: the quadrant u < 0 < v maps
    to the upper half plane, Q1Q2 to the positive real axis and Q3Q4 to the
    negative one, and the metric takes the form (1/(2Y^2) + O(1)) |d zeta|^2.
    """
    def arc_label(s):
        return "boundary:Q1Q2" if s[0] > 0 else "boundary:Q3Q4"

    events = (Event(arc_label, lambda s: s[1] - y_stop),)
    trig = Event("handoff", lambda s: r_out * r_out - math.hypot(s[0], s[1]), direction=-1, terminal=False)

    def domain(X, Y):
        return Y > 0.0 and math.hypot(X, Y) < 4 * r_out * r_out and math.isfinite(X)

    def to_common(X, Y):
        w = _w_from_zeta(X, Y)
        return w.real, w.imag

    return ConformalChart("corner", _corner_g, _corner_grad, domain, events,
                          (Transition(trig, "uv", _corner_to_uv),), to_common)


# log-polar chart about the Q2Q3 circle: zeta = -i log((w - c)/R), so that
# X is the polar angle and Y = log(R/|w - c|) ~ height/R with full relative precision
_CC = complex(*col.Q23_CIRCLE_CENTER)
_R = col.CIRCLE_RADIUS
_OTHER = ((1.0, 1.0), (-1.0, -1.0), (-1.0, 1.0))


def _w_from_circle(X, Y):
    return _CC + _R * math.exp(-Y) * complex(math.cos(X), math.sin(X))


def _circle_parts(X, Y):
    w = _w_from_circle(X, Y)
    u, v = w.real, w.imag
    u2, v2 = u * u, v * v
    rest = 1.0 / u2 + 1.0 / v2
    lu = -2.0 / (u2 * u)
    lv = -2.0 / (v2 * v)
    for a, b in _OTHER:
        du, dv = u - a, v - b
        q = du * du + dv * dv - 4.0
        q2 = q * q
        rest += 16.0 / q2
        k = -64.0 / (q2 * q)
        lu += k * du
        lv += k * dv
    W = _R * _R * math.expm1(-2.0 * Y)  # |w - c|^2 - R^2
    T = 16.0 / (W * W)
    dT_dY = 256.0 * math.exp(-2.0 * Y) / (W * W * W) * (_R * _R / 4.0)
    return w, rest, lu, lv, T, dT_dY


def _circle_g(X, Y):
    w, rest, _, _, T, _ = _circle_parts(X, Y)
    return 0.5 * (rest + T) * abs(w - _CC) ** 2


def _circle_grad(X, Y):
    w, rest, lu, lv, T, dT_dY = _circle_parts(X, Y)
    lam = rest + T
    # grad_zeta of the smooth part: conj(dw/dzeta) grad_w, with dw/dzeta = i (w - c)
    gz = (1j * (w - _CC)).conjugate() * complex(lu, lv)
    return gz.real / lam, (gz.imag + dT_dY) / lam - 2.0


def _uv_to_circle(y):
    w = complex(y[0], y[1])
    p = complex(y[2], y[3])
    d = w - _CC
    zeta = -1j * cmath.log(d / _R)
    pz = p / (-1j / d).conjugate()
    X = zeta.real % (2 * math.pi)
    return np.array([X, zeta.imag, pz.real, pz.imag])


def _circle_to_uv(y):
    w = _w_from_circle(y[0], y[1])
    pz = complex(y[2], y[3])
    pw = pz / (1j * (w - _CC)).conjugate()
    return np.array([w.real, w.imag, pw.real, pw.imag])


def circle_chart(y_stop: float = 1e-8, y_out: float = 0.015) -> ConformalChart:
    """Collar chart of the circular arc Q2Q3 (log-polar about its center)."""
    R = _R

    def uv(s):
        w = _w_from_circle(s[0], s[1])
        return w.real, w.imag

    events = (
        Event("boundary:Q2Q3", lambda s: R * -math.expm1(-s[1]) - y_stop),
        Event("boundary:Q1Q2", lambda s: -uv(s)[0] - y_stop),
        Event("boundary:Q3Q4", lambda s: uv(s)[1] - y_stop),
    )
    trig = Event("handoff", lambda s: y_out - s[1], direction=-1, terminal=False)

    def domain(X, Y):
        if not (Y > 0.0 and math.isfinite(X)):
            return False
        w = _w_from_circle(X, Y)
        return w.real < 0.0 < w.imag

    def to_common(X, Y):
        w = _w_from_circle(X, Y)
        return w.real, w.imag

    return ConformalChart("circle", _circle_g, _circle_grad, domain, events,
                          (Transition(trig, "uv", _circle_to_uv),), to_common)


def collinear_atlas(y_stop: float = 1e-8, corner: bool = True, r_in: float = 0.1, r_out: float = 0.15,
                    circle_in: float = 0.02) -> Atlas:
    """Atlas for T: the (u, v) chart, the circle-collar chart and optionally the corner chart."""
    cx, cy = col.Q23_CIRCLE_CENTER
    R = col.CIRCLE_RADIUS
    events = (
        Event("boundary:Q1Q2", lambda s: -s[0] - y_stop),
        Event("boundary:Q3Q4", lambda s: s[1] - y_stop),
    )
    enter_circle = Event("handoff", lambda s: R - math.hypot(s[0] - cx, s[1] - cy) - circle_in,
                         direction=-1, terminal=False)
    transitions = [Transition(enter_circle, "circle", _uv_to_circle)]
    if corner:
        trig = Event("handoff", lambda s: math.hypot(s[0], s[1]) - r_in, direction=-1, terminal=False)
        transitions.append(Transition(trig, "corner", _uv_to_corner))
    uv = ConformalChart("uv", _uv_g, _uv_grad, _uv_domain, events, tuple(transitions))
    charts = {"uv": uv, "circle": circle_chart(y_stop, circle_in * 0.75)}
    if corner:
        charts["corner"] = corner_chart(y_stop, r_out)

    def choose(u, v):
        if corner and math.hypot(u, v) < r_in:
            return "corner"
        if R - math.hypot(u - cx, v - cy) < circle_in:
            return "circle"
        return "uv"

    return Atlas("collinear", charts, choose)


_FROM_UV = {"corner": _uv_to_corner, "circle": _uv_to_circle}
_TO_UV = {"corner": _corner_to_uv, "circle": _circle_to_uv}


def from_uv_state(chart_name, y):
    y = np.asarray(y, dtype=float)
    return y if chart_name == "uv" else _FROM_UV[chart_name](y)


def to_uv_state(chart_name, y):
    y = np.asarray(y, dtype=float)
    return y if chart_name == "uv" else _TO_UV[chart_name](y)


def collinear_state(u, v, angle, atlas: Optional[Atlas] = None, t=0.0) -> PhaseState:
    """H = 1 state at (u, v) heading in uv-direction ``angle``, in the chart the atlas picks."""
    atlas = atlas or collinear_atlas()
    s = unit_state(atlas["uv"], u, v, angle, t)
    name = atlas.choose(u, v)
    y = from_uv_state(name, s.vector())
    return PhaseState(*y, t, name)


# ----------------------------------------------------------- collar analysis


def collar_coordinates(chart_name, y, arc):
    """(height, along, p_height, p_along) of a T state relative to ``arc``.

    Heights are the collar coordinate of the chart the state lives in: the
    Euclidean height in (u, v), Y in the corner and circle charts.
    """
    arc = col.Arc(arc)
    if chart_name == "corner" and arc is not col.Arc.Q2Q3:
        X, Y, pX, pY = y
        return Y, X, pY, pX
    if chart_name == "circle" and arc is col.Arc.Q2Q3:
        X, Y, pX, pY = y
        return Y, X, pY, pX
    u, v, pu, pv = to_uv_state(chart_name, y)
    h, a, n, t = col.collar_frame(arc, u, v)
    if arc is col.Arc.Q2Q3:
        scale = (col.CIRCLE_RADIUS - h) / col.CIRCLE_RADIUS
        return h, a, pu * n[0] + pv * n[1], scale * (pu * t[0] + pv * t[1])
    return h, a, pu * n[0] + pv * n[1], pu * t[0] + pv * t[1]


def landing_point(chart_name, y, arc):
    """BoundaryPoint-style (arc, s) below the state ``y`` (straight drop in the collar)."""
    arc = col.Arc(arc)
    if chart_name == "corner" and arc is not col.Arc.Q2Q3:
        X = y[0]
        r = math.sqrt(abs(X))
        arc = col.Arc.Q1Q2 if X > 0 else col.Arc.Q3Q4
        return arc, r / col.ARC_LENGTH_STRAIGHT
    if chart_name == "circle" and arc is col.Arc.Q2Q3:
        return arc, col.along_to_s(arc, col.CIRCLE_RADIUS * y[0])
    _, a, _, _ = collar_coordinates(chart_name, y, arc)
    return arc, col.along_to_s(arc, a)


@dataclass(frozen=True)
class FallRecord:
    arc: "col.Arc"
    boundary_estimate: float  # arc parameter s at the last sample
    eps: float
    displacement: float  # |along(eps) - along(final)| in chart units
    c_fit: float  # displacement / eps
    heights: np.ndarray
    angles: np.ndarray  # arctan(|p_h| / |p_a|) along the tail
    height_momentum: np.ndarray  # |h p_h| along the tail


def _fall_arc(traj: Trajectory):
    kind = traj.termination
    if not kind.startswith("boundary:"):
        return None
    return col.Arc(kind.split(":", 1)[1])


def height_crossing(traj: Trajectory, arc, h, atlas: Optional[Atlas] = None):
    """Last dense-output state where the collar height of ``arc`` equals ``h`` (chart, state)."""
    arc = col.Arc(arc)
    for seg in reversed(traj.segments):
        fa = collar_coordinates(seg.tag, seg.y0, arc)[0] - h
        fb = collar_coordinates(seg.tag, seg(seg.t1), arc)[0] - h
        if fa * fb <= 0 and fa != fb:
            field = lambda y, tag=seg.tag: collar_coordinates(tag, y, arc)[0] - h
            tc = locate_crossing(field, seg, seg.t0, seg.t1, fa, fb)
            return seg.tag, seg(tc)
    return None


def boundary_fall(traj: Trajectory, eps: float = DEFAULT_COLLAR) -> FallRecord:
    """Tail diagnostics of a trajectory that ended by falling onto an arc of T."""
    arc = _fall_arc(traj)
    if arc is None:
        raise NotFallingError(f"trajectory terminated with {traj.termination!r}, not a boundary fall")
    chart_name = traj.charts[-1]
    final = traj.states[-1]
    h_end, a_end, ph_end, _ = collar_coordinates(chart_name, final, arc)
    if ph_end >= 0:
        raise NotFallingError("final momentum points away from the boundary")
    heights, angles, hp = [], [], []
    for c, y in zip(traj.charts, traj.states):
        if c != chart_name:
            continue
        h, a, ph, pa = collar_coordinates(c, y, arc)
        if 0 < h <= eps:
            heights.append(h)
            angles.append(math.atan2(abs(ph), abs(pa)))
            hp.append(abs(h * ph))
    cross = height_crossing(traj, arc, eps)
    if cross is None:
        displacement = float("nan")
    else:
        c0, y0 = cross
        _, s_eps = landing_point(c0, y0, arc) if c0 == chart_name else (None, None)
        if s_eps is None:
            displacement = float("nan")
        else:
            _, s_end = landing_point(chart_name, final, arc)
            displacement = abs(s_eps - s_end) * col.arc_length(arc)
    _, s_final = landing_point(chart_name, final, arc)
    return FallRecord(arc=landing_point(chart_name, final, arc)[0],
                      boundary_estimate=s_final, eps=eps, displacement=displacement,
                      c_fit=displacement / eps, heights=np.array(heights), angles=np.array(angles),
                      height_momentum=np.array(hp))


def fixed_angle_displacements(traj: Trajectory, eps_seq=EPS_SEQUENCE, entry_height: float = 0.05,
                              atlas: Optional[Atlas] = None, tol: float = 1e-10):
    """Landing displacements of the fixed-entry-angle family of a falling trajectory.

    The uv-frame angle to the boundary is read where ``traj`` crosses
    ``entry_height``; for each eps a fresh geodesic is launched at height eps
    above the landing point with that angle and its landing displacement along
    the arc is returned.  A single trajectory's own tail displacement is
    O(eps^2), so this family is what exhibits the linear O(eps) scaling.
    """
    atlas = atlas or collinear_atlas()
    arc = _fall_arc(traj)
    if arc is None:
        raise NotFallingError(f"trajectory terminated with {traj.termination!r}, not a boundary fall")
    cross = height_crossing(traj, arc, entry_height)
    if cross is None:
        raise NotFallingError(f"trajectory never crosses collar height {entry_height}")
    u, v, pu, pv = to_uv_state(*cross)
    _, _, n, t = col.collar_frame(arc, u, v)
    pn, pt = pu * n[0] + pv * n[1], pu * t[0] + pv * t[1]
    theta = math.atan2(pn, pt)
    land_arc, s_end = landing_point(traj.charts[-1], traj.states[-1], arc)
    out = []
    for eps in eps_seq:
        b = col.boundary_param(land_arc, s_end, eps)
        _, _, n, t = col.collar_frame(land_arc, b.u, b.v)
        d = (math.cos(theta) * t[0] + math.sin(theta) * n[0], math.cos(theta) * t[1] + math.sin(theta) * n[1])
        s0 = collinear_state(b.u, b.v, math.atan2(d[1], d[0]), atlas)
        tr = integrate(s0, atlas, 50.0, tol=tol, stop=("boundary:",))
        a2 = _fall_arc(tr)
        if a2 is not land_arc:
            raise NotFallingError(f"family member at eps={eps} landed on {tr.termination!r}")
        _, s_land = landing_point(tr.charts[-1], tr.states[-1], land_arc)
        out.append(abs(s_land - s_end) * col.arc_length(land_arc))
    return out


def jm_length(points, g):
    """JM length of a chart polyline (midpoint rule) for conformal factor ``g``."""
    pts = np.asarray(points, dtype=float)
    mid = 0.5 * (pts[1:] + pts[:-1])
    ds = np.hypot(*(pts[1:] - pts[:-1]).T)
    return float(sum(math.sqrt(g(x, y)) * d for (x, y), d in zip(mid, ds)))
