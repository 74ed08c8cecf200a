"""Dormand-Prince 5(4) stepper with continuous (dense) output.

The stepper is driven one accepted step at a time so callers can project the
state (momentum renormalization) or switch charts between steps.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import StepUnderflowError

# Butcher tableau (Dormand & Prince 1980)
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
# continuous extension (Hairer, Norsett & Wanner, DOPRI5 contd5)
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class DenseSegment:
    """Quartic interpolant valid on one accepted step [t0, t1] (t1 < t0 allowed)."""

    __slots__ = ("t0", "t1", "h", "r1", "r2", "r3", "r4", "r5", "tag")

    def __init__(self, t0, t1, r1, r2, r3, r4, r5, tag=None):
        self.t0 = t0
        self.t1 = t1
        self.h = t1 - t0
        self.r1, self.r2, self.r3, self.r4, self.r5 = r1, r2, r3, r4, r5
        self.tag = tag

    def __call__(self, t):
        th = (t - self.t0) / self.h
        th1 = 1.0 - th
        return self.r1 + th * (self.r2 + th1 * (self.r3 + th * (self.r4 + th1 * self.r5)))

    @property
    def y0(self):
        return self.r1

    @property
    def y1(self):
        return self.r1 + self.r2

    def with_tag(self, tag):
        return DenseSegment(self.t0, self.t1, self.r1, self.r2, self.r3, self.r4, self.r5, tag)


def _rms(x):
    return math.sqrt(float(np.dot(x, x)) / x.size)


class DormandPrince:
    """Adaptive embedded RK5(4) integrator of ``y' = fun(t, y)``.

    ``step()`` advances by one accepted step and returns its ``DenseSegment``.
    ``restart(t, y)`` replaces the current state (e.g. after a projection) and
    discards the FSAL derivative.
    """

    def __init__(self, fun, t0, y0, direction=1.0, rtol=1e-10, atol=1e-10,
                 first_step=None, max_step=math.inf):
        self.fun = fun
        self.rtol = rtol
        self.atol = atol
        self.direction = 1.0 if direction >= 0 else -1.0
        self.max_step = max_step
        self.n_accepted = 0
        self.n_rejected = 0
        self.n_evals = 0
        self.t = float(t0)
        self.y = np.asarray(y0, dtype=float).copy()
        self.f = self._eval(self.t, self.y)
        self.h_abs = first_step if first_step is not None else self._initial_step()

    def _eval(self, t, y):
        self.n_evals += 1
        return np.asarray(self.fun(t, y), dtype=float)

    def _initial_step(self):
        # Hairer's starting-step heuristic
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = _rms(self.y / scale)
        d1 = _rms(self.f / scale)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = self.y + self.direction * h0 * self.f
        f1 = self._eval(self.t + self.direction * h0, y1)
        d2 = _rms((f1 - self.f) / scale) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, self.max_step)

    def restart(self, t, y, keep_step=True):
        self.t = float(t)
        self.y = np.asarray(y, dtype=float).copy()
        self.f = self._eval(self.t, self.y)
        if not keep_step:
            self.h_abs = self._initial_step()

    def step(self, t_limit=None):
        """Take one accepted step, never passing ``t_limit`` if given."""
        t, y, k1 = self.t, self.y, self.f
        fun = self._eval
        min_step = 10 * np.finfo(float).eps * max(1.0, abs(t))
        h_abs = min(self.h_abs, self.max_step)
        while True:
            if h_abs < min_step:
                raise StepUnderflowError(f"step size {h_abs:.3e} underflowed at t={t!r}")
            h = self.direction * h_abs
            if t_limit is not None and self.direction * (t + h - t_limit) > 0:
                h = t_limit - t
                h_abs = abs(h)
            k2 = fun(t + C2 * h, y + h * (A21 * k1))
            k3 = fun(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
            k4 = fun(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = fun(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = fun(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = fun(t + h, y_new)
            err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _rms(err / scale)
            if not math.isfinite(err_norm):
                h_abs *= MIN_FACTOR
                self.n_rejected += 1
                continue
            if err_norm <= 1.0:
                factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            self.n_rejected += 1

        r1 = y
        r2 = y_new - y
        r3 = h * k1 - r2
        r4 = r2 - h * k7 - r3
        r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
        seg = DenseSegment(t, t + h, r1, r2, r3, r4, r5)
        self.t = t + h
        self.y = y_new
        self.f = k7
        self.h_abs = h_abs * factor
        self.n_accepted += 1
        return seg


def locate_crossing(field, seg, ta, tb, fa=None, fb=None, xtol=1e-14):
    """Root of ``field(seg(t))`` bracketed in [ta, tb] on a dense segment."""
    g = lambda s: field(seg(s))
    fa = g(ta) if fa is None else fa
    fb = g(tb) if fb is None else fb
    if fa == 0.0:
        return ta
    if fb == 0.0:
        return tb
    lo, hi = (ta, tb) if ta < tb else (tb, ta)
    tol = xtol * max(1.0, abs(lo), abs(hi))
    return brentq(g, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
