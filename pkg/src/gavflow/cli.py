"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error,
3 numeric-domain error.  JSON floats are shortest round-trip decimals; CSV
floats carry 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__
from .chart import TWO_PI, Chart, ChartPoint
from .checks import full_report, mid_shell_action
from .derivation import DEFAULT_ORDER, PSI_COEFFICIENTS, DerivedTables, derive_tables
from .dynamics import (
    IntegratorConfig,
    _section_direction,
    _section_start,
    _unwrap_start,
    conjugacy_check,
    integrate,
    poincare_section,
    trace,
)
from .errors import ConfigurationError, GavflowError
from .exact import to_json
from .exact.serialize import scalar_to_json
from .field import FieldConfig, GavrilovField
from .reference import verify_expansions

CONFIG_ENV = "GAVFLOW_CONFIG"
RESCALE_TOL = 1e-8

# Keys accepted in a config file, with their parsers.
CONFIG_KEYS = {
    "R": float, "delta": float, "tau": float, "epsilon": float, "order": int,
    "cutoff_sign": int, "rtol": float, "atol": float, "max_step": float, "seed": int,
}
DEFAULTS: dict[str, Any] = {
    "R": 1.0, "delta": 0.2, "tau": None, "epsilon": None, "order": DEFAULT_ORDER,
    "cutoff_sign": 1, "rtol": 1e-10, "atol": 1e-12, "max_step": math.inf, "seed": 0,
}


class UsageError(ConfigurationError):
    pass


# ---------------------------------------------------------------- configuration


def read_config_file(path: str) -> dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment, hyphens and underscores are interchangeable."""
    out: dict[str, Any] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        key = key.replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{number}: expected 'key = value' with key in {sorted(CONFIG_KEYS)}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{number}: bad value for {key}: {value!r}") from exc
    return out


def resolve_settings(args: argparse.Namespace) -> dict[str, Any]:
    """Flags over config file over defaults."""
    settings = dict(DEFAULTS)
    path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
    if path:
        settings.update(read_config_file(path))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def field_config(settings: dict[str, Any]) -> FieldConfig:
    return FieldConfig(
        R=settings["R"], delta=settings["delta"], tau=settings["tau"], epsilon=settings["epsilon"],
        order=settings["order"], cutoff_sign=settings["cutoff_sign"],
    )


def integrator_config(settings: dict[str, Any]) -> IntegratorConfig:
    return IntegratorConfig(rtol=settings["rtol"], atol=settings["atol"], max_step=settings["max_step"])


# ---------------------------------------------------------------- output


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def dump_json(obj: Any) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _out(args: argparse.Namespace) -> str | None:
    return getattr(args, "out", None)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["%.17g" % v if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def tables_to_json(t: DerivedTables) -> dict:
    series = ("psi", "H", "alpha", "alpha2", "w", "gamma", "nu", "denominator", "m",
              "h1", "h", "K", "J", "H_of_h", "B", "R")
    out: dict[str, Any] = {"order": t.order}
    out.update({name: to_json(getattr(t, name)) for name in series})
    out["P"] = [to_json(p) for p in t.P]
    out["averages"] = {k: scalar_to_json(v) for k, v in sorted(t.averages.items())}
    return out


# ---------------------------------------------------------------- commands


def _field(settings) -> GavrilovField:
    return GavrilovField(field_config(settings))


def _chart(settings, unit_chi: bool = False) -> Chart:
    return Chart(_field(settings), unit_chi=unit_chi)


def _action(args, chart: Chart) -> float:
    return mid_shell_action(chart) if args.I is None else args.I


def cmd_derive(args, settings) -> int:
    tables = derive_tables(settings["order"])
    _emit(dump_json(tables_to_json(tables)), _out(args))
    return 0


def _parse_psi(text: str | None) -> list[Fraction]:
    if text is None:
        return list(PSI_COEFFICIENTS)
    try:
        coeffs = [Fraction(v.strip()) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"--psi expects comma-separated rationals, got {text!r}") from exc
    if coeffs[0] == 0:
        raise UsageError("--psi needs a nonzero leading coefficient")
    return coeffs


def cmd_verify_expansions(args, settings) -> int:
    report = verify_expansions(settings["order"], _parse_psi(args.psi))
    _emit("\n".join(report.lines()) + "\n", _out(args))
    return 0 if report.passed else 1


def cmd_field(args, settings) -> int:
    fld = _field(settings)
    if args.field_command == "eval":
        x = np.array([args.x, args.y, args.z])
        U = fld.velocity_raw(x) if args.raw else fld.velocity_cut(x)
        out = {"U": U, "P": fld.pressure(x), "Ptilde": fld.pressure_cut(x), "mode": "raw" if args.raw else "cut"}
        _emit(dump_json(out), _out(args))
        return 0
    if args.field_command == "residual":
        res = fld.euler_residual(fld.sample_shell(args.samples, settings["seed"]))
        out = {"samples": args.samples, "seed": settings["seed"]}
        for key, values in res.items():
            a = np.abs(values)
            out[key] = {"max": float(np.max(a)), "mean": float(np.mean(a))}
        _emit(dump_json(out), _out(args))
        return 0
    # rescale
    pts = fld.sample_shell(64, settings["seed"])
    scaled = fld.rescaled(args.lam, args.mu)
    y = pts * args.lam
    out = {
        "lambda": args.lam, "mu": args.mu,
        "velocity_law": _relative(scaled.velocity_cut(y), args.mu * fld.velocity_cut(pts)),
        "pressure_law": _relative(scaled.pressure_cut(y), args.mu**2 * fld.pressure_cut(pts)),
    }
    code = 0
    if args.check:
        twice = scaled.rescaled(args.lam, args.mu)
        direct = fld.rescaled(args.lam**2, args.mu**2)
        yy = y * args.lam
        out["group_law"] = max(_relative(twice.velocity_cut(yy), direct.velocity_cut(yy)),
                               _relative(twice.pressure_cut(yy), direct.pressure_cut(yy)))
        out["pass"] = max(out["velocity_law"], out["pressure_law"], out["group_law"]) <= RESCALE_TOL
        code = 0 if out["pass"] else 1
    _emit(dump_json(out), _out(args))
    return code


def _relative(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-300))


def cmd_chart(args, settings) -> int:
    chart = _chart(settings, args.unit_chi)
    if args.chart_command == "map":
        xyz = chart.chart_forward(ChartPoint(args.sigma, args.beta, args.I))
        out = {"sigma": args.sigma, "beta": args.beta, "I": args.I, "xyz": xyz,
               "P": chart.field.pressure(xyz)}
    elif args.chart_command == "unmap":
        pt = chart.chart_inverse((args.x, args.y, args.z))
        out = {"xyz": [args.x, args.y, args.z], "sigma": pt.sigma, "beta": pt.beta, "I": pt.action}
    else:
        if args.c is None:
            raise UsageError("chart needs --c, or one of the map / unmap subcommands")
        summary = chart.action_chart(args.c).summary()
        chi = float(chart.chi(args.c))
        out = dict(summary, chi=chi, unit_chi=args.unit_chi,
                   T_c=chart.period_Tc(args.c) if chi != 0 else None)
    _emit(dump_json(out), _out(args))
    return 0


def cmd_freq(args, settings) -> int:
    chart = _chart(settings, args.unit_chi)
    _emit(dump_json(chart.frequencies(_action(args, chart)).as_dict()), _out(args))
    return 0


def _start_point(args, chart: Chart) -> np.ndarray:
    given = [args.x0, args.y0, args.z0]
    if all(v is None for v in given):
        return _section_start(chart, mid_shell_action(chart))
    if any(v is None for v in given):
        raise UsageError("give all of --x0 --y0 --z0 or none of them")
    return np.array(given, dtype=float)


def cmd_trace(args, settings) -> int:
    chart = _chart(settings)
    x0 = _start_point(args, chart)
    t, xyz = trace(chart, x0, args.t_end, args.stage, integrator_config(settings), args.samples)
    P = chart.field.pressure(xyz)
    rows = ([float(ti), *map(float, p), float(pi)] for ti, p, pi in zip(t, xyz, P))
    _emit(csv_text(["t", "x", "y", "z", "P"], rows), _out(args))
    return 0


def cmd_poincare(args, settings) -> int:
    chart = _chart(settings)
    I = _action(args, chart)
    period = chart.period_Tc(chart.level_of_action(I))
    traj = integrate(chart.field, _section_start(chart, I), (args.returns + 0.5) * period,
                     integrator_config(settings))
    sec = poincare_section(traj, _section_direction(chart))
    later = sec.times > 0.5 * period
    times, points, phis = sec.times[later], sec.points[later], sec.phis[later]
    windings = np.diff(np.concatenate([[_unwrap_start(traj)], phis]))
    rows = ([k + 1, float(t), *map(float, p), float(ph), float(w)]
            for k, (t, p, ph, w) in enumerate(zip(times, points, phis, windings)))
    _emit(csv_text(["k", "t", "x", "y", "z", "phi", "winding"], rows), _out(args))
    return 0


def cmd_conjugacy(args, settings) -> int:
    chart = _chart(settings)
    I = _action(args, chart)
    fr = chart.frequencies(I)
    x0 = _section_start(chart, I)
    t = np.linspace(0.0, args.periods * TWO_PI / abs(fr.omega1), args.samples)
    rep = conjugacy_check(chart, x0, t, integrator_config(settings))
    _emit(dump_json(rep.as_dict()), _out(args))
    return 0


def cmd_scan_ratio(args, settings) -> int:
    if not 0 < args.I_min < args.I_max:
        raise UsageError("scan-ratio needs 0 < --I-min < --I-max")
    chart = _chart(settings)
    unit = chart.with_unit_chi()
    grid = [args.I_min] if args.count == 1 else list(np.geomspace(args.I_min, args.I_max, args.count))
    rows = []
    for I in grid:
        fr = chart.frequencies(float(I))
        ratio = unit.frequencies(float(I)).ratio
        rows.append([float(I), fr.omega1, fr.omega2, ratio, ratio / math.sqrt(I)])
    ratios = np.array([r[3] for r in rows])
    monotone = bool(np.all(np.diff(ratios) > 0))
    Is = np.array([r[0] for r in rows])
    excess = np.array([r[4] for r in rows]) - (1 + 1.75 * Is)
    summary = {"monotone": monotone, "points": len(rows),
               "max_excess_over_I2": float(np.max(np.abs(excess) / Is**2))}
    if len(rows) >= 3:
        summary["intercept"] = float(np.polyfit(Is, [r[4] for r in rows], 2)[-1])
    _emit(csv_text(["I", "omega1", "omega2", "ratio", "ratio_over_sqrtI"], rows), _out(args))
    sys.stderr.write(json.dumps(_plain(summary), sort_keys=True) + "\n")
    return 0 if monotone else 1


def cmd_report(args, settings) -> int:
    report = full_report(settings["seed"], args.skip_dynamics)
    _emit(dump_json(report), _out(args))
    return 0 if report["pass"] else 1


# ---------------------------------------------------------------- parser


def _common_parser() -> argparse.ArgumentParser:
    # Suppressed defaults keep a subcommand from resetting values given before it.
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("configuration (flags > config file > defaults)")
    g.add_argument("--config", help=f"key = value file; default from ${CONFIG_ENV}")
    g.add_argument("--R", type=float, help="core circle radius (default 1)")
    g.add_argument("--delta", type=float, help="tube radius (default 0.2)")
    g.add_argument("--tau", type=float, help="pressure bound of the domain (default 0.9 x the minimum on the tube boundary)")
    g.add_argument("--epsilon", type=float, help="cut-off level (default tau / 3)")
    g.add_argument("--order", type=int, help=f"truncation order (default {DEFAULT_ORDER})")
    g.add_argument("--cutoff-sign", dest="cutoff_sign", type=int, choices=(1, -1),
                   help="sign of the cut-off (default 1)")
    g.add_argument("--rtol", type=float, help="integrator relative tolerance (default 1e-10)")
    g.add_argument("--atol", type=float, help="integrator absolute tolerance (default 1e-12)")
    g.add_argument("--max-step", dest="max_step", type=float, help="integrator max step (default inf)")
    g.add_argument("--seed", type=int, help="seed of all random sampling (default 0)")
    p.add_argument("--out", help="output file (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="gavflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text, description=help_text)

    add("derive", "exact series tables as canonical JSON").set_defaults(run=cmd_derive)

    p = add("verify-expansions", "compare derived constants with the reference table")
    p.add_argument("--psi", help="comma-separated profile coefficients, e.g. '1,-3/4,9/128,-21/1024'")
    p.set_defaults(run=cmd_verify_expansions)

    p = add("field", "point queries and checks of the velocity field")
    fsub = p.add_subparsers(dest="field_command", required=True)
    e = fsub.add_parser("eval", parents=[common], help="velocity and pressure at one point")
    for axis in "xyz":
        e.add_argument(f"--{axis}", type=float, required=True)
    mode = e.add_mutually_exclusive_group()
    mode.add_argument("--raw", action="store_true", help="uncut field")
    mode.add_argument("--cut", action="store_true", help="cut-off field (default)")
    r = fsub.add_parser("residual", parents=[common], help="Euler residuals at seeded shell points")
    r.add_argument("--samples", type=int, default=1000)
    s = fsub.add_parser("rescale", parents=[common], help="scaling law of the rescaled field")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--mu", type=float, required=True)
    s.add_argument("--check", action="store_true", help="also check the group law")
    p.set_defaults(run=cmd_field)

    p = add("chart", "action-angle data of one level, or the chart map and its inverse")
    p.add_argument("--c", type=float, help="level of alpha")
    p.add_argument("--unit-chi", dest="unit_chi", action="store_true", help="replace the cut-off factor by 1")
    csub = p.add_subparsers(dest="chart_command")
    m = csub.add_parser("map", parents=[common], help="(sigma, beta, I) to (x, y, z)")
    m.add_argument("--sigma", type=float, required=True)
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--I", type=float, required=True)
    u = csub.add_parser("unmap", parents=[common], help="(x, y, z) to (sigma, beta, I)")
    for axis in "xyz":
        u.add_argument(f"--{axis}", type=float, required=True)
    p.set_defaults(run=cmd_chart)

    p = add("freq", "frequencies and their ratio at one action")
    p.add_argument("--I", type=float, help="action (default: level where the cut-off peaks)")
    p.add_argument("--unit-chi", dest="unit_chi", action="store_true")
    p.set_defaults(run=cmd_freq)

    p = add("trace", "integrate one particle path, CSV t,x,y,z,P")
    for axis in ("x0", "y0", "z0"):
        p.add_argument(f"--{axis}", type=float)
    p.add_argument("--t-end", dest="t_end", type=float, required=True)
    p.add_argument("--stage", type=int, default=0, choices=range(6))
    p.add_argument("--samples", type=int, default=201)
    p.set_defaults(run=cmd_trace)

    p = add("poincare", "section returns of one orbit, CSV")
    p.add_argument("--I", type=float)
    p.add_argument("--returns", type=int, default=20)
    p.set_defaults(run=cmd_poincare)

    p = add("conjugacy", "integrated orbit against the linear flow on its torus")
    p.add_argument("--I", type=float)
    p.add_argument("--periods", type=float, default=5.0)
    p.add_argument("--samples", type=int, default=101)
    p.set_defaults(run=cmd_conjugacy)

    p = add("scan-ratio", "frequency ratio over a geometric grid of actions, CSV")
    p.add_argument("--I-min", dest="I_min", type=float, default=1e-4)
    p.add_argument("--I-max", dest="I_max", type=float, default=1e-2)
    p.add_argument("--count", type=int, default=50)
    p.set_defaults(run=cmd_scan_ratio)

    p = add("report", "every acceptance measurement as one JSON document")
    p.add_argument("--skip-dynamics", dest="skip_dynamics", action="store_true")
    p.set_defaults(run=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        return args.run(args, settings)
    except GavflowError as exc:
        sys.stderr.write(f"gavflow {args.command}: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
