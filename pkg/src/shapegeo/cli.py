"""Command-line front end.

Every subcommand takes ``--config FILE`` (JSON object of option values,
unknown keys rejected), ``--out`` and ``--seed``; explicit flags override the
file.  Exit status is 0 on success, 1 on domain errors and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from . import collinear as col
from . import config_space as cs
from . import geodesic as geo
from . import io
from . import shirt
from . import syzygy as syz
from .errors import ShapeGeoError

J_TOL = 1e-6
DEFAULT_SEED = 20240601


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Option:
    name: str  # dest; the flag is --name with '_' -> '-'
    type: Callable = str
    default: Any = None
    nargs: Any = None
    choices: Optional[tuple] = None
    required: bool = False
    help: str = ""

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")

    def coerce(self, value):
        """Validate a config-file value the way argparse would validate the flag."""
        if self.type is bool:
            if not isinstance(value, bool):
                raise UsageError(f"{self.name}: expected true/false, got {value!r}")
            return value
        if self.nargs is not None:
            if not isinstance(value, list):
                raise UsageError(f"{self.name}: expected a list")
            if isinstance(self.nargs, int) and len(value) != self.nargs:
                raise UsageError(f"{self.name}: expected {self.nargs} values")
            return [self._one(v) for v in value]
        return self._one(value)

    def _one(self, v):
        try:
            out = self.type(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{self.name}: {exc}") from exc
        if self.choices and out not in self.choices:
            raise UsageError(f"{self.name}: {out!r} not in {list(self.choices)}")
        return out


COMMON = (
    Option("out", str, None, help="output path (file, or directory for connect)"),
    Option("seed", int, DEFAULT_SEED, help="seed for randomized scans"),
)

ARCS = tuple(a.value for a in col.Arc)

COMMANDS = {
    "curvature-grid": (
        "Conformal factor and Gaussian curvature on a rectangular grid.",
        (
            Option("surface", str, "shirt", choices=("shirt", "collinear")),
            Option("bounds", float, None, nargs=4, help="xmin xmax ymin ymax (default: surface-specific)"),
            Option("n", int, 200, help="points per axis"),
            Option("exclusion", float, 1e-2, help="shirt: radius around ends reported as limits"),
            Option("collar", float, 0.0, help="collinear: in_T requires height above this"),
            Option("certificate", str, None, help="collinear: JSON dump of the certificate terms"),
        ),
    ),
    "geodesic": (
        "Integrate one unit-speed JM geodesic and write trajectory + events CSV.",
        (
            Option("surface", str, "shirt", choices=("shirt", "collinear")),
            Option("x", float, None, required=True, help="start point (x or u)"),
            Option("y", float, None, required=True, help="start point (y or v)"),
            Option("angle", float, 0.0, help="chart direction in radians"),
            Option("t_end", float, 10.0, help="flow time (negative integrates backward)"),
            Option("tol", float, 1e-10),
            Option("per_step", int, 1, help="dense samples per accepted step"),
        ),
    ),
    "syzygies": (
        "Syzygy sequence of a shirt geodesic.",
        (
            Option("x", float, None, required=True),
            Option("y", float, None, required=True),
            Option("angle", float, 0.0),
            Option("t_end", float, 20.0),
            Option("tol", float, 1e-10),
            Option("reduce", str, "pairs", choices=("none", "pairs", "runs")),
        ),
    ),
    "connect": (
        "Solve the boundary-to-boundary geodesic problem in T by shooting.",
        (
            Option("arc1", str, None, choices=ARCS, required=True, help="start arc (alpha-limit)"),
            Option("s1", float, None, required=True),
            Option("arc2", str, None, choices=ARCS, required=True, help="end arc (omega-limit)"),
            Option("s2", float, None, required=True),
            Option("eps", float, 1e-3, help="collar height of the launch"),
            Option("tol", float, 1e-6, help="residual tolerance in arc parameter"),
        ),
    ),
    "lift": (
        "Physical zero-angular-momentum orbit over a shirt trajectory CSV.",
        (
            Option("trajectory", str, None, required=True, help="CSV written by 'geodesic'"),
            Option("gauge", float, 0.0, help="initial gauge angle"),
        ),
    ),
    "verify": (
        "Run the oracle verification suites.",
        (
            Option("report", str, None, help="JSON report path"),
            Option("quick", bool, False, help="reduced sample counts"),
            Option("only", str, None, nargs="+", help="subset of suite names"),
        ),
    ),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        valid = sorted(a.option_strings[-1] for a in self._actions if a.option_strings)
        raise UsageError(f"{self.prog}: {message}; valid flags: {' '.join(valid)}")


def build_parser():
    parser = _Parser(prog="shapegeo", description="Reduced JM geometry of the planar equal-mass 4-body problem.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    parser.commands = {}
    for name, (help_, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=help_, description=help_, argument_default=argparse.SUPPRESS)
        parser.commands[name] = p
        p.add_argument("--config", help="JSON file of option values (flags override it)")
        for o in opts + COMMON:
            kw = {"dest": o.name, "help": f"{o.help} (default: {o.default})".strip()}
            if o.type is bool:
                kw["action"] = "store_true"
            else:
                kw["type"] = o.type
                if o.nargs is not None:
                    kw["nargs"] = o.nargs
                if o.choices:
                    kw["choices"] = o.choices
            p.add_argument(o.flag, **kw)
    return parser


def resolve(command, given: dict) -> dict:
    """Defaults, then config-file values, then explicit flags."""
    _, opts = COMMANDS[command]
    table = {o.name: o for o in opts + COMMON}
    cfg = {}
    path = given.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        keys = {k.replace("-", "_"): v for k, v in raw.items()}
        unknown = sorted(set(keys) - set(table))
        if unknown:
            raise UsageError(f"unknown config keys {unknown}; valid: {sorted(table)}")
        cfg = {k: table[k].coerce(v) for k, v in keys.items()}
    out = {k: o.default for k, o in table.items()}
    out.update(cfg)
    out.update(given)
    missing = [table[k].flag for k, o in table.items() if o.required and out[k] is None]
    if missing:
        raise UsageError(f"{command}: missing required {' '.join(missing)}")
    return out


def threads() -> int:
    env = os.environ.get("SHAPEGEO_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = min(n, int(env)) if int(env) > 0 else n
        except ValueError:
            raise UsageError(f"SHAPEGEO_THREADS must be an integer, got {env!r}")
    return max(1, n)


def _need_out(cfg, command):
    if not cfg["out"]:
        raise UsageError(f"{command}: --out is required")
    return cfg["out"]


def _parallel_rows(fn, X, Y):
    # independent rows evaluated concurrently; concatenated in row order for determinism
    chunks = np.array_split(np.arange(X.shape[0]), min(threads(), X.shape[0]))
    chunks = [c for c in chunks if c.size]
    with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
        parts = list(ex.map(lambda c: fn(X[c], Y[c]), chunks))
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


# ------------------------------------------------------------------ commands


def cmd_curvature_grid(cfg):
    out = _need_out(cfg, "curvature-grid")
    n = cfg["n"]
    if n < 2:
        raise UsageError("curvature-grid: --n must be at least 2")
    if cfg["surface"] == "shirt":
        b = cfg["bounds"] or [-3.0, 3.0, -3.0, 3.0]
        cols = ("x", "y", "f", "lambda", "lap_log_lambda", "K")
        fn = lambda X, Y: shirt.grid_fields(X, Y, cfg["exclusion"])
    else:
        b = cfg["bounds"] or [1 - col.SQRT3, 0.0, 0.0, col.SQRT3 - 1]
        cols = ("u", "v", "lambda", "K", "in_T")
        fn = lambda X, Y: col.grid_fields_uv(X, Y, cfg["collar"])
    xs = np.linspace(b[0], b[1], n)
    ys = np.linspace(b[2], b[3], n)
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    fields = _parallel_rows(fn, X, Y)
    io.write_csv(out, cols, io.grid_rows(fields, cols))
    inputs = {"surface": cfg["surface"], "bounds": b, "n": n, "seed": cfg["seed"]}
    if cfg["surface"] == "shirt":
        inputs["exclusion"] = cfg["exclusion"]
        inputs["end_exclusion_radius"] = shirt.END_EXCLUSION
        summary = f"wrote {n}x{n} shirt grid to {out}; min K = {np.nanmin(fields['K']):.6g}"
    else:
        inputs["collar"] = cfg["collar"]
        K = fields["K"][fields["in_T"]]
        kmax = float(np.max(K)) if K.size else math.nan
        summary = f"wrote {n}x{n} collinear grid to {out}; max K on T = {kmax:.6g}"
        if cfg["certificate"]:
            _write_certificate(cfg["certificate"], fields)
    io.write_manifest(out, "curvature-grid", inputs)
    return 0, summary


def _write_certificate(path, fields):
    """Decomposition terms at every in-T grid point (audit dump)."""
    recs = []
    for u, v, inside in zip(fields["u"], fields["v"], fields["in_T"]):
        if not inside:
            continue
        cert = col.laplacian_log_U_closed(col.xi_from_uv(u, v))
        recs.append({"u": u, "v": v, "value": cert.value, "terms": dict(cert.terms)})
    io.write_json(path, recs)


def _initial_state(surface, x, y, angle):
    if surface == "shirt":
        atlas = geo.shirt_atlas()
        return atlas, geo.shirt_state(x, y, angle, atlas)
    atlas = geo.collinear_atlas()
    if not geo._uv_domain(x, y):
        raise ShapeGeoError(f"({x}, {y}) is not inside the collinear region T")
    return atlas, geo.collinear_state(x, y, angle, atlas)


def cmd_geodesic(cfg):
    out = _need_out(cfg, "geodesic")
    atlas, s0 = _initial_state(cfg["surface"], cfg["x"], cfg["y"], cfg["angle"])
    tr = geo.integrate(s0, atlas, cfg["t_end"], tol=cfg["tol"])
    io.write_trajectory(out, tr, cfg["per_step"], atlas)
    ev = os.path.splitext(out)[0] + ".events.csv"
    io.write_events(ev, tr)
    inputs = {k: cfg[k] for k in ("surface", "x", "y", "angle", "t_end", "per_step", "seed")}
    extra = {"chart": s0.chart, "events_file": os.path.basename(ev), "termination": tr.termination,
             "stop_conditions": ["t_end", "end:*" if cfg["surface"] == "shirt" else "boundary:*"]}
    io.write_manifest(out, "geodesic", inputs, {"tol": cfg["tol"], "H_renormalized": True}, extra)
    io.write_manifest(ev, "geodesic", inputs, {"tol": cfg["tol"]}, extra)
    return 0, f"{len(tr.t)} samples, {len(tr.events)} events, terminated by {tr.termination}; wrote {out}"


def cmd_syzygies(cfg):
    out = _need_out(cfg, "syzygies")
    atlas, s0 = _initial_state("shirt", cfg["x"], cfg["y"], cfg["angle"])
    tr = geo.integrate(s0, atlas, cfg["t_end"], tol=cfg["tol"])
    seq = syz.detect(tr, atlas)
    if cfg["reduce"] != "none":
        seq = syz.reduce(seq, cfg["reduce"])
    doc = syz.to_json(seq)
    doc["termination"] = tr.termination
    io.write_json(out, doc)
    inputs = {k: cfg[k] for k in ("x", "y", "angle", "t_end", "reduce", "seed")}
    io.write_manifest(out, "syzygies", inputs, {"tol": cfg["tol"], "tangency": syz.TANGENCY_TOL})
    return 0, f"syzygy sequence {seq.letters or '(empty)'}; wrote {out}"


def cmd_connect(cfg):
    from . import bvp

    out = _need_out(cfg, "connect")
    q = bvp.BoundaryPoint(cfg["arc1"], cfg["s1"])
    p = bvp.BoundaryPoint(cfg["arc2"], cfg["s2"])
    res = bvp.connect(p, q, eps=cfg["eps"], tol=cfg["tol"])
    os.makedirs(out, exist_ok=True)
    traj_path = os.path.join(out, "trajectory.csv")
    io.write_trajectory(traj_path, res.geodesic)
    doc = {
        "p": {"arc": p.arc.value, "s": p.s},
        "q": {"arc": q.arc.value, "s": q.s},
        "launch_parameter": res.launch_parameter,
        "residual": res.residual,
        "iterations": res.iterations,
        "trajectory_file": os.path.basename(traj_path),
        "eps": res.eps,
        "end_angles": list(res.end_angles),
    }
    res_path = os.path.join(out, "result.json")
    io.write_json(res_path, doc)
    inputs = {k: cfg[k] for k in ("arc1", "s1", "arc2", "s2", "eps", "seed")}
    tols = {"residual": cfg["tol"], "integration": 1e-10}
    io.write_manifest(res_path, "connect", inputs, tols)
    io.write_manifest(traj_path, "connect", inputs, tols)
    return 0, f"connected {q.arc.value}:{q.s} -> {p.arc.value}:{p.s}, residual {res.residual:.3g}; wrote {out}"


def lift_trajectory(path, gauge=0.0):
    """Zero-angular-momentum lift of a shirt-chart trajectory file (I = 2 scale)."""
    t, charts, states = io.read_trajectory(path)
    atlas = geo.shirt_atlas()
    try:
        U = np.array([atlas[c].to_common(y[0], y[1]) for c, y in zip(charts, states)])
    except KeyError as exc:
        raise ShapeGeoError(f"{path}: chart {exc} is not a shirt chart") from exc
    # handoff rows repeat a time; keep the first copy
    keep = np.concatenate([[True], np.diff(t) != 0])
    t, U = t[keep], U[keep]
    order = np.argsort(t, kind="stable")
    lift = cs.horizontal_lift(t[order], U[order], initial_gauge=gauge)
    return lift


def cmd_lift(cfg):
    out = _need_out(cfg, "lift")
    lift = lift_trajectory(cfg["trajectory"], cfg["gauge"])
    J = float(np.max(np.abs(lift.J))) if len(lift.J) else 0.0
    io.write_lift(out, lift)
    io.write_manifest(out, "lift", {"trajectory": cfg["trajectory"], "gauge": cfg["gauge"], "seed": cfg["seed"]},
                      {"J": J_TOL}, {"max_abs_J": J})
    if J > J_TOL:
        return 1, f"lift written to {out} but max |J| = {J:.3g} exceeds {J_TOL}; resample the trajectory more densely"
    return 0, f"lifted {len(lift.t)} samples, max |J| = {J:.3g}; wrote {out}"


def cmd_verify(cfg):
    from . import verify

    code, cases = verify.run_all(cfg["report"], quick=cfg["quick"], only=cfg["only"], stream=sys.stdout,
                                 seed=cfg["seed"])
    n_fail = sum(c.status != "pass" for c in cases)
    return code, f"{len(cases) - n_fail}/{len(cases)} checks passed"


HANDLERS = {
    "curvature-grid": cmd_curvature_grid,
    "geodesic": cmd_geodesic,
    "syzygies": cmd_syzygies,
    "connect": cmd_connect,
    "lift": cmd_lift,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns, extra = parser.parse_known_args(argv)
        if ns.command is None:
            raise UsageError(f"missing command; valid: {' '.join(COMMANDS)}")
        if extra:
            parser.commands[ns.command].error(f"unrecognized arguments: {' '.join(extra)}")
        given = {k: v for k, v in vars(ns).items() if k != "command"}
        cfg = resolve(ns.command, given)
        code, summary = HANDLERS[ns.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ShapeGeoError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return code
