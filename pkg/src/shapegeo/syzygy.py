"""Syzygies: equator crossings of shirt geodesics and their symbolic sequences.

The equator |z| = 1 is the collinear locus of the shirt; the four punctures
cut it into four open arcs, labelled A-D counterclockwise from angle 0 in the
north chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import shirt
from .config_space import inverse_hopf
from .errors import PunctureAngleError
from .geodesic import Trajectory, equator_angle, shirt_atlas

LETTERS = ("A", "B", "C", "D")
PUNCTURE_ANGLES = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
PUNCTURE_TOL = 1e-9
TANGENCY_TOL = 1e-7


@dataclass(frozen=True)
class SyzygyEvent:
    time: float
    angle: float
    letter: str
    tangential: bool = False


@dataclass(frozen=True)
class SyzygySequence:
    events: tuple
    reduced: bool = False
    deletions: int = 0

    @property
    def letters(self):
        return "".join(e.letter for e in self.events)

    @property
    def times(self):
        return [e.time for e in self.events]

    def __len__(self):
        return len(self.events)

    def is_stutter_free(self):
        s = self.letters
        return all(a != b for a, b in zip(s, s[1:]))


def classify(angle: float) -> str:
    a = angle % (2 * math.pi)
    for p in PUNCTURE_ANGLES + (2 * math.pi,):
        if abs(a - p) <= PUNCTURE_TOL:
            raise PunctureAngleError(f"angle {angle!r} is a puncture")
    return LETTERS[int(a // (math.pi / 2))]


def _ordering(angle):
    """Collinear mass ordering at an equator angle, canonical up to reflection."""
    sp = shirt.inverse_stereographic(shirt.ShirtChartPoint("north", math.cos(angle), math.sin(angle)))
    q = inverse_hopf(sp).q
    d = q[np.argmax(np.linalg.norm(q, axis=1))]
    proj = q @ (d / np.linalg.norm(d))
    s = "".join(str(i + 1) for i in np.argsort(proj))
    return min(s, s[::-1])


def dictionary():
    """Letter -> mass ordering at the midpoint of its equator arc."""
    return {L: _ordering(PUNCTURE_ANGLES[k] + math.pi / 4) for k, L in enumerate(LETTERS)}


def detect(traj: Trajectory, atlas=None, samples_per_step: int = 16,
           tangency_tol: float = TANGENCY_TOL) -> SyzygySequence:
    """Raw syzygy sequence of a shirt trajectory.

    The equator is u3 = 0 on the unit shape sphere, evaluated through each
    chart's sphere map.  Every dense segment is sampled so double crossings
    inside one step are resolved.  A near-zero extremum of u3 without a sign
    change is a grazing tangency, recorded as a flagged pair of equal letters.
    """
    atlas = atlas or shirt_atlas()
    events = []
    for seg in traj.segments:
        if seg.t1 == seg.t0:
            continue
        sphere = atlas[seg.tag].to_common

        def g(t, seg=seg, sphere=sphere):
            y = seg(t)
            return sphere(y[0], y[1])[2]

        def letter_at(t, seg=seg, sphere=sphere):
            y = seg(t)
            u = sphere(y[0], y[1])
            a = equator_angle(u[0], u[1])
            return a, classify(a)

        ts = np.linspace(seg.t0, seg.t1, samples_per_step + 1)
        fs = np.array([g(t) for t in ts])
        for k in range(samples_per_step):
            f0, f1 = fs[k], fs[k + 1]
            if f0 == 0.0 and k > 0:
                continue
            if f1 == 0.0 and k + 2 <= samples_per_step and fs[k + 2] * f0 > 0:
                # touches zero exactly on a sample without crossing: a graze
                a, L = letter_at(ts[k + 1])
                events.append(SyzygyEvent(float(ts[k + 1]), a, L, True))
                events.append(SyzygyEvent(float(ts[k + 1]), a, L, True))
                continue
            if f0 * f1 < 0 or f1 == 0.0:
                lo, hi = sorted((ts[k], ts[k + 1]))
                tc = brentq(g, lo, hi, xtol=1e-14, rtol=1e-15) if f1 != 0.0 else ts[k + 1]
                a, L = letter_at(tc)
                events.append(SyzygyEvent(float(tc), a, L, False))
        for k in range(1, samples_per_step):
            a0, a1, a2 = abs(fs[k - 1]), abs(fs[k]), abs(fs[k + 1])
            if a1 <= a0 and a1 <= a2 and fs[k - 1] * fs[k + 1] > 0 and fs[k] * fs[k - 1] > 0:
                lo, hi = sorted((ts[k - 1], ts[k + 1]))
                sgn = 1.0 if fs[k] > 0 else -1.0
                res = minimize_scalar(lambda t: sgn * g(t), bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-13})
                if abs(res.fun) <= tangency_tol:
                    a, L = letter_at(res.x)
                    events.append(SyzygyEvent(float(res.x), a, L, True))
                    events.append(SyzygyEvent(float(res.x), a, L, True))
    forward = traj.t[-1] >= traj.t[0]
    events.sort(key=lambda e: e.time if forward else -e.time)
    events = _flag_close_pairs(events, tangency_tol)
    return SyzygySequence(tuple(events), reduced=False)


def _flag_close_pairs(events, tol):
    # two transverse crossings of the same arc closer than the tangency scale form a graze
    out = list(events)
    for i in range(len(out) - 1):
        a, b = out[i], out[i + 1]
        if a.letter == b.letter and abs(a.time - b.time) <= math.sqrt(tol) and not (a.tangential and b.tangential):
            out[i] = SyzygyEvent(a.time, a.angle, a.letter, True)
            out[i + 1] = SyzygyEvent(b.time, b.angle, b.letter, True)
    return out


def reduce(seq: SyzygySequence, mode: str = "pairs") -> SyzygySequence:
    """Delete stutters.

    ``pairs`` (default) removes adjacent equal pairs until none remain, which
    is free reduction.  ``runs`` collapses each run of equal letters to one.
    """
    if mode == "pairs":
        stack = []
        deletions = 0
        for e in seq.events:
            if stack and stack[-1].letter == e.letter:
                stack.pop()
                deletions += 1
            else:
                stack.append(e)
        return SyzygySequence(tuple(stack), reduced=True, deletions=seq.deletions + deletions)
    if mode == "runs":
        out = []
        deletions = 0
        for e in seq.events:
            if out and out[-1].letter == e.letter:
                deletions += 1
                continue
            out.append(e)
        return SyzygySequence(tuple(out), reduced=True, deletions=seq.deletions + deletions)
    raise ValueError(f"unknown reduce mode {mode!r}")


def from_letters(letters: str, times=None) -> SyzygySequence:
    times = times if times is not None else range(len(letters))
    ev = []
    for L, t in zip(letters, times):
        if L not in LETTERS:
            raise ValueError(f"unknown letter {L!r}")
        ev.append(SyzygyEvent(float(t), (LETTERS.index(L) + 0.5) * math.pi / 2, L))
    return SyzygySequence(tuple(ev))


def to_json(seq: SyzygySequence):
    return {"letters": list(seq.letters), "times": seq.times, "tangential": [e.tangential for e in seq.events],
            "dictionary": dictionary(), "reduced": seq.reduced, "deletions": seq.deletions}
