"""Physical configuration space of the equal-mass planar 4-body strong-force problem.

Positions and momenta are stored as ``(4, 2)`` float arrays.  Complex numbers
are used internally for the Jacobi pair ``(z1, z2)`` where the algebra is
naturally complex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    CenterError,
    CollisionError,
    GaugeDegenerateError,
    StepUnderflowError,
    StiffnessError,
    SymmetryError,
)
from .rk import DormandPrince, locate_crossing

PAIRS = tuple(combinations(range(4), 2))
# a configuration is in collision when r_ij^2 < COLLISION_RTOL * I
COLLISION_RTOL = 1e-24
SYMMETRY_TOL = 1e-12
CENTER_TOL = 1e-12


def _as_points(a):
    arr = np.asarray(a)
    if np.iscomplexobj(arr):
        arr = np.stack([arr.real, arr.imag], axis=-1)
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (4, 2):
        raise ValueError(f"expected 4 planar points, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class Configuration:
    """Four planar positions with optional momenta.

    ``q`` and ``p`` accept ``(4, 2)`` real arrays or length-4 complex sequences.
    """

    q: np.ndarray
    p: Optional[np.ndarray] = None
    centered: bool = False

    def __post_init__(self):
        q = _as_points(self.q)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        if self.p is not None:
            p = _as_points(self.p)
            p.setflags(write=False)
            object.__setattr__(self, "p", p)
        if self.centered and np.max(np.abs(q.sum(axis=0))) > CENTER_TOL * max(1.0, np.abs(q).max()):
            raise CenterError(f"sum of positions is {q.sum(axis=0)}, expected 0")

    @classmethod
    def from_complex(cls, q, p=None, centered=False):
        return cls(np.asarray(q, dtype=complex), None if p is None else np.asarray(p, dtype=complex), centered)

    @property
    def qc(self):
        return self.q[:, 0] + 1j * self.q[:, 1]

    @property
    def pc(self):
        return None if self.p is None else self.p[:, 0] + 1j * self.p[:, 1]

    @property
    def I(self):
        return float(np.sum(self.q**2))

    def squared_distances(self):
        return {(i, j): float(np.sum((self.q[i] - self.q[j]) ** 2)) for i, j in PAIRS}

    def collision_pairs(self):
        """1-based pairs whose squared separation is below the scale-invariant cutoff."""
        cutoff = COLLISION_RTOL * self.I
        return [(i + 1, j + 1) for (i, j), r2 in self.squared_distances().items() if r2 <= cutoff]

    def is_collision_free(self):
        return not self.collision_pairs()

    def is_parallelogram(self, tol=SYMMETRY_TOL):
        scale = max(1.0, float(np.abs(self.q).max()))
        return bool(
            np.max(np.abs(self.q[2] + self.q[0])) <= tol * scale
            and np.max(np.abs(self.q[3] + self.q[1])) <= tol * scale
        )


def collision_kind(c: Configuration):
    """Classify the collisions of ``c``: None, 'binary', 'simultaneous_binary' or 'multiple'."""
    pairs = c.collision_pairs()
    if not pairs:
        return None
    if len(pairs) == 1:
        return "binary"
    if len(pairs) == 2 and not set(pairs[0]) & set(pairs[1]):
        return "simultaneous_binary"
    return "multiple"


def _require_collision_free(c: Configuration):
    pairs = c.collision_pairs()
    if pairs:
        raise CollisionError(pairs[0])


def potential(c: Configuration) -> float:
    """Strong-force potential: sum of inverse squared mutual distances."""
    _require_collision_free(c)
    return sum(1.0 / r2 for r2 in c.squared_distances().values())


def _require_parallelogram(c: Configuration):
    if not c.is_parallelogram():
        raise SymmetryError("parallelogram symmetry q3 = -q1, q4 = -q2 violated")


def parallelogram_potential(c: Configuration) -> float:
    """Potential of a parallelogram configuration from the four independent distances."""
    _require_parallelogram(c)
    _require_collision_free(c)
    q1, q2 = c.q[0], c.q[1]
    r12 = float(np.sum((q2 - q1) ** 2))
    r14 = float(np.sum((q1 + q2) ** 2))
    r13 = float(np.sum((2 * q1) ** 2))
    r24 = float(np.sum((2 * q2) ** 2))
    return 2.0 / r12 + 2.0 / r14 + 1.0 / r13 + 1.0 / r24


@dataclass(frozen=True)
class Conserved:
    H: float
    J: float
    I: float
    Idot: float


def conserved(c: Configuration) -> Conserved:
    if c.p is None:
        raise ValueError("conserved quantities need momenta")
    U = potential(c)
    q, p = c.q, c.p
    H = 0.5 * float(np.sum(p**2)) - U
    J = float(np.sum(q[:, 0] * p[:, 1] - q[:, 1] * p[:, 0]))
    return Conserved(H=H, J=J, I=c.I, Idot=2.0 * float(np.sum(q * p)))


def _forces(q):
    # dU/dq for U = sum r_ij^-2
    d = q[:, None, :] - q[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(r2, np.inf)
    return -2.0 * np.einsum("ijk,ij->ik", d, r2**-2)


def _newton_rhs(t, y):
    q = y[:8].reshape(4, 2)
    return np.concatenate([y[8:], _forces(q).ravel()])


def _min_r(y):
    q = y[:8].reshape(4, 2)
    return min(math.dist(q[i], q[j]) for i, j in PAIRS)


@dataclass(frozen=True)
class ConfigTrajectory:
    """Time-stamped configurations (with momenta for Newtonian runs)."""

    t: np.ndarray
    q: np.ndarray  # (n, 4, 2)
    p: Optional[np.ndarray] = None
    events: tuple = ()
    termination: str = "t_end"
    segments: tuple = field(default=(), repr=False)

    def configuration(self, k) -> Configuration:
        return Configuration(self.q[k], None if self.p is None else self.p[k])

    def state_at(self, t) -> Configuration:
        if not self.segments:
            raise ValueError("trajectory has no dense output")
        ends = np.array([s.t1 for s in self.segments])
        k = int(np.clip(np.searchsorted(ends, t), 0, len(self.segments) - 1))
        y = self.segments[k](t)
        return Configuration(y[:8].reshape(4, 2), y[8:].reshape(4, 2))

    def invariants(self):
        """Arrays of H, J, I along the samples (NaN where momenta are absent)."""
        n = len(self.t)
        out = {k: np.full(n, np.nan) for k in ("H", "J", "I")}
        for k in range(n):
            c = self.configuration(k)
            out["I"][k] = c.I
            if c.p is not None and c.is_collision_free():
                cons = conserved(c)
                out["H"][k], out["J"][k] = cons.H, cons.J
        return out


def newtonian_flow(c: Configuration, t_end: float, tol: float = 1e-12, r_stop: Optional[float] = None,
                   max_steps: int = 200_000) -> ConfigTrajectory:
    """Integrate Hamilton's equations for H = |p|^2/2 - U from ``c``.

    Stops at ``t_end`` or with a ``boundary_fall`` event when the minimal mutual
    distance drops below ``r_stop`` (default ``1e-4 * sqrt(I)``).
    """
    if c.p is None:
        raise ValueError("newtonian_flow needs momenta")
    _require_collision_free(c)
    if r_stop is None:
        r_stop = 1e-4 * math.sqrt(c.I)
    y0 = np.concatenate([c.q.ravel(), c.p.ravel()])
    direction = 1.0 if t_end >= 0 else -1.0
    stepper = DormandPrince(_newton_rhs, 0.0, y0, direction, rtol=tol, atol=tol)
    ts, ys, segs, events = [0.0], [y0], [], []
    termination = "t_end"
    stop_field = lambda y: _min_r(y) - r_stop
    for _ in range(max_steps):
        if direction * (stepper.t - t_end) >= 0:
            break
        try:
            seg = stepper.step(t_limit=t_end)
        except StepUnderflowError as exc:
            raise StiffnessError(str(exc)) from exc
        f1 = stop_field(seg.y1)
        if f1 < 0:
            tc = locate_crossing(stop_field, seg, seg.t0, seg.t1, stop_field(seg.y0), f1)
            seg = _truncate(seg, tc)
            segs.append(seg)
            ts.append(tc)
            ys.append(seg(tc))
            events.append(("boundary_fall", tc))
            termination = "boundary_fall"
            break
        segs.append(seg)
        ts.append(seg.t1)
        ys.append(seg.y1)
    else:
        termination = "max_steps"
    Y = np.array(ys)
    return ConfigTrajectory(
        t=np.array(ts),
        q=Y[:, :8].reshape(-1, 4, 2),
        p=Y[:, 8:].reshape(-1, 4, 2),
        events=tuple(events),
        termination=termination,
        segments=tuple(segs),
    )


def _truncate(seg, tc):
    # same interpolant, reported interval shortened
    out = seg.with_tag(seg.tag)
    out.t1 = tc
    return out


# ---------------------------------------------------------------- Jacobi / Hopf


@dataclass(frozen=True)
class JacobiPair:
    z1: complex
    z2: complex


@dataclass(frozen=True)
class ShapePoint:
    u1: float
    u2: float
    u3: float

    @property
    def I(self):
        return 2.0 * math.sqrt(self.u1**2 + self.u2**2 + self.u3**2)

    def as_array(self):
        return np.array([self.u1, self.u2, self.u3])

    def normalized(self, I=2.0):
        """Rescale to size ``I`` (|u| = I/2)."""
        s = I / self.I
        return ShapePoint(self.u1 * s, self.u2 * s, self.u3 * s)


def jacobi(c: Configuration) -> JacobiPair:
    _require_parallelogram(c)
    q1, q2 = c.qc[0], c.qc[1]
    return JacobiPair(z1=complex(q2 - q1), z2=complex(-q2 - q1))


def hopf(j: JacobiPair) -> ShapePoint:
    w = j.z1.conjugate() * j.z2
    return ShapePoint(0.5 * (abs(j.z1) ** 2 - abs(j.z2) ** 2), w.real, w.imag)


GAUGE_TOL = 1e-12


def fiber_section(s: ShapePoint):
    """Gauge-fixed Jacobi pair over ``s`` with z1 real and positive."""
    a2 = s.I / 2 + s.u1
    if a2 <= GAUGE_TOL * max(1.0, s.I):
        raise GaugeDegenerateError(f"I/2 + u1 = {a2!r}: fiber passes through r12 = 0")
    a = math.sqrt(a2)
    return complex(a, 0.0), complex(s.u2, s.u3) / a


def configuration_from_jacobi(z1: complex, z2: complex, p1: complex = None, p2: complex = None) -> Configuration:
    q1 = -(z1 + z2) / 2
    q2 = (z1 - z2) / 2
    p = None
    if p1 is not None:
        # velocities of z map to body velocities the same way
        v1, v2 = -(p1 + p2) / 2, (p1 - p2) / 2
        p = [v1, v2, -v1, -v2]
    return Configuration.from_complex([q1, q2, -q1, -q2], p)


def inverse_hopf(s: ShapePoint, gauge_angle: float = 0.0) -> Configuration:
    """Parallelogram configuration over ``s``; ``gauge_angle`` is the overall rotation."""
    w1, w2 = fiber_section(s)
    rot = complex(math.cos(gauge_angle), math.sin(gauge_angle))
    return configuration_from_jacobi(rot * w1, rot * w2)


def shape_of(c: Configuration) -> ShapePoint:
    return hopf(jacobi(c))


def horizontal_velocity(z1: complex, z2: complex, du: np.ndarray):
    """Jacobi-pair velocity (dz1, dz2) projecting to ``du`` with dI = 0 and J = 0."""
    # unknowns: Re/Im of dz1, dz2; rows: d(hopf) = du, Re<z,dz> = 0, Im<z,dz> = 0
    a, b = z1.real, z1.imag
    c, d = z2.real, z2.imag
    A = np.array(
        [
            [a, b, -c, -d],  # du1 = Re(conj z1 dz1) - Re(conj z2 dz2)
            [c, d, a, b],  # du2 = Re(conj(dz1) z2 + conj(z1) dz2)
            [d, -c, -b, a],  # du3 = Im(conj(dz1) z2 + conj(z1) dz2)
            [a, b, c, d],  # Re<z, dz>
            [-b, a, -d, c],  # Im<z, dz>
        ]
    )
    rhs = np.concatenate([np.asarray(du, dtype=float), [0.0, 0.0]])
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return complex(sol[0], sol[1]), complex(sol[2], sol[3])


@dataclass(frozen=True)
class Lift:
    t: np.ndarray
    q: np.ndarray  # (n, 4, 2)
    alpha: np.ndarray
    J: np.ndarray  # angular momentum residual from finite-difference velocities

    def as_trajectory(self) -> ConfigTrajectory:
        return ConfigTrajectory(t=self.t, q=self.q)


def _fd_velocity(t, x):
    return np.gradient(x, t, axis=0, edge_order=2)


def horizontal_lift(t, shapes, initial_gauge: float = 0.0, rtol: float = 1e-12, I_tol: float = 1e-9) -> Lift:
    """Reconstruct the zero-angular-momentum physical orbit over a sampled shape curve.

    ``shapes`` is a sequence of ShapePoint (or an ``(n, 3)`` array) at constant I.
    The gauge angle obeys alpha' = -Im(conj(w1) w1' + conj(w2) w2') / I along the
    section w1 > 0, with w' from a cubic spline through the samples.
    """
    t = np.asarray(t, dtype=float)
    U = np.array([s.as_array() if isinstance(s, ShapePoint) else s for s in shapes], dtype=float)
    sizes = 2.0 * np.linalg.norm(U, axis=1)
    I = float(sizes[0])
    if np.max(np.abs(sizes - I)) > I_tol * max(1.0, I):
        raise ValueError("shape curve must have constant I")
    a2 = I / 2 + U[:, 0]
    bad = np.nonzero(a2 <= GAUGE_TOL * max(1.0, I))[0]
    if bad.size:
        raise GaugeDegenerateError("section z1 > 0 breaks down", time=float(t[bad[0]]))
    if len(t) == 1:
        alpha = np.array([initial_gauge])
    else:
        spline = CubicSpline(t, U, axis=0)
        dspline = spline.derivative()

        def rate(tt, y):
            u = spline(tt)
            du = dspline(tt)
            return np.array([-(u[1] * du[2] - u[2] * du[1]) / ((I / 2 + u[0]) * I)])

        alpha = _integrate_scalar(rate, t, initial_gauge, rtol)
    w1 = np.sqrt(a2)
    w2 = (U[:, 1] + 1j * U[:, 2]) / w1
    rot = np.exp(1j * alpha)
    z1, z2 = rot * w1, rot * w2
    q1 = -(z1 + z2) / 2
    q2 = (z1 - z2) / 2
    qc = np.stack([q1, q2, -q1, -q2], axis=1)
    q = np.stack([qc.real, qc.imag], axis=-1)
    if len(t) > 2:
        v = _fd_velocity(t, q)
        J = np.sum(q[..., 0] * v[..., 1] - q[..., 1] * v[..., 0], axis=1)
    else:
        J = np.zeros(len(t))
    return Lift(t=t, q=q, alpha=alpha, J=J)


def _integrate_scalar(rate, t, y0, rtol):
    # gauge angle through the same adaptive scheme, sampled at the input times
    out = np.empty(len(t))
    out[0] = y0
    direction = 1.0 if t[-1] >= t[0] else -1.0
    stepper = DormandPrince(rate, t[0], [y0], direction, rtol=rtol, atol=rtol)
    k = 1
    while k < len(t):
        seg = stepper.step(t_limit=t[-1])
        while k < len(t) and direction * (t[k] - seg.t1) <= 0:
            out[k] = seg(t[k])[0]
            k += 1
    return out
