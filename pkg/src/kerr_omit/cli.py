"""Command-line front end.

Exit codes: 0 success, 1 validation/configuration/I-O error, 2 numerical
failure, 3 oracle-check comparison failure.  ``KERR_OMIT_OUTPUT_DIR`` sets
the directory that relative ``--output`` paths and preset tables go to.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from .errors import KerrOmitError, NumericalError
from .params import apply_overrides, load_config, reference_mapping, params_from_mapping, derive
from .steady import BRANCHES, KERR_SHIFT_COLUMNS, kerr_shift_curve, solve_steady_state

OUTPUT_DIR_ENV = "KERR_OMIT_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ORACLE = 0, 1, 2, 3


class UsageFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for numerical failures
    def error(self, message):
        raise UsageFailure(f"{self.prog}: error: {message}")


def _common(parser):
    parser.add_argument("--config", help="JSON object of physical parameters (default: reference set)")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter; repeatable")
    parser.add_argument("--branch", choices=BRANCHES, default="lower")
    parser.add_argument("--output", help="output file ('-' for stdout; directory for presets)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--reproducible", action="store_true",
                        help="omit the timestamp so identical runs give identical bytes")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")


def _oracle_options(parser):
    g = parser.add_argument_group("oracle")
    g.add_argument("--steps-per-period", type=int, default=400)
    g.add_argument("--window-periods", type=int, default=50)
    g.add_argument("--tolerance", type=float, default=1e-3)
    g.add_argument("--max-windows", type=int, default=40)
    g.add_argument("--burn-in", type=float, default=None, help="seconds")
    g.add_argument("--initial", choices=("steady", "zero"), default="steady")
    g.add_argument("--perturbation", type=float, default=0.0,
                   help="relative offset of the initial field from the steady state")
    g.add_argument("--dump-trajectory", metavar="PATH",
                   help="write the demodulation-window trajectory CSV (large)")


def build_parser():
    parser = _Parser(prog="kerr-omit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("steady", help="pumped steady state")
    _common(p)

    p = sub.add_parser("spectrum", help="probe transmission and second-order sideband vs W")
    _common(p)
    p.add_argument("--method", choices=("matrix", "closed-form", "oracle"), default="matrix")
    p.add_argument("--lo", type=float, default=0.8, help="lowest W/omega_m")
    p.add_argument("--hi", type=float, default=1.2, help="highest W/omega_m")
    p.add_argument("--points", type=int, default=2001)
    _oracle_options(p)

    p = sub.add_parser("delay", help="group delays at fixed W versus pump power")
    _common(p)
    p.add_argument("--method", choices=("matrix", "closed-form"), default="matrix")
    p.add_argument("--pmin", type=float, default=0.05e-3, help="W")
    p.add_argument("--pmax", type=float, default=50e-3, help="W")
    p.add_argument("--points", type=int, default=31)
    p.add_argument("--scale", choices=("log", "linear"), default="log")
    p.add_argument("--omega-ratio", type=float, default=1.0, help="W/omega_m")

    p = sub.add_parser("kerr-shift", help="Kerr shift table over pump power and U")
    _common(p)
    p.add_argument("--pmin", type=float, default=0.0, help="W")
    p.add_argument("--pmax", type=float, default=20e-3, help="W")
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--kerr", type=float, action="append",
                   help="U in the configured unit tag; repeatable (default 0.5 3 8)")

    p = sub.add_parser("oracle-check", help="compare the analytic response with time integration")
    _common(p)
    p.add_argument("--method", choices=("matrix", "closed-form"), default="matrix")
    p.add_argument("--lo", type=float, default=0.8)
    p.add_argument("--hi", type=float, default=1.2)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--tol-first", type=float, default=0.01)
    p.add_argument("--tol-second", type=float, default=0.10)
    _oracle_options(p)

    p = sub.add_parser("preset", help="tables for one figure of the reference study")
    _common(p)
    p.add_argument("name", choices=("fig1c", "fig2", "fig3", "fig4"))
    p.add_argument("--method", choices=("matrix", "closed-form", "oracle"), default="matrix")
    return parser


# --- helpers -----------------------------------------------------------------

def _mapping(args):
    base = load_config(args.config) if args.config else reference_mapping()
    mapping = apply_overrides(base, args.param)
    params_from_mapping(mapping)
    return mapping


def _override_dict(args):
    return apply_overrides({}, args.param)


def _resolve(path):
    if path is None or path == "-":
        return path
    root = os.environ.get(OUTPUT_DIR_ENV)
    if root and not os.path.isabs(path):
        return os.path.join(root, path)
    return path


def _oracle_cfg(args):
    return {
        "steps_per_period": args.steps_per_period,
        "window_periods": args.window_periods,
        "tolerance": args.tolerance,
        "max_windows": args.max_windows,
        "burn_in": args.burn_in,
        "initial": args.initial,
        "initial_perturbation": args.perturbation,
    }


def _emit(args, rows, columns, mapping, extra=None):
    from .sweep import emit, metadata

    meta = metadata(mapping, args.command, args.reproducible, extra)
    emit(rows, args.format, _resolve(args.output), columns, meta)


# --- subcommands -----------------------------------------------------------------

def cmd_steady(args):
    mapping = _mapping(args)
    ss = solve_steady_state(derive(params_from_mapping(mapping)), args.branch)
    out = ss.to_dict()
    out["kerr_unit"] = ss.derived.kerr_source
    text = json.dumps(out, indent=1) + "\n"
    path = _resolve(args.output)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_spectrum(args):
    from .sweep import SweepSpec, run_sweep

    mapping = _mapping(args)
    spec = SweepSpec(axis="omega", lo=args.lo, hi=args.hi, count=args.points,
                     method=args.method, fmt=args.format, branch=args.branch,
                     oracle=_oracle_cfg(args) if args.method == "oracle" else {})
    rows = run_sweep(spec, mapping, args.jobs, dump=args.dump_trajectory)
    _emit(args, rows, spec.columns, mapping)
    return EXIT_OK


def cmd_delay(args):
    from .sweep import SweepSpec, run_sweep

    mapping = _mapping(args)
    spec = SweepSpec(axis="pump_power", lo=args.pmin, hi=args.pmax, count=args.points,
                     scale=args.scale, method=args.method, fmt=args.format,
                     branch=args.branch, omega_ratio=args.omega_ratio)
    rows = run_sweep(spec, mapping, args.jobs)
    _emit(args, rows, spec.columns, mapping)
    return EXIT_OK


def cmd_kerr_shift(args):
    from .params import resolve_kerr_unit

    mapping = _mapping(args)
    d = derive(params_from_mapping(mapping))
    factor, _ = resolve_kerr_unit(mapping.get("kerr_u_unit", "rad_per_s"))
    tags = args.kerr or [0.5, 3.0, 8.0]
    powers = np.linspace(args.pmin, args.pmax, args.points) if args.points > 1 else [args.pmin]
    rows = kerr_shift_curve(d, powers, [factor * t for t in tags], args.branch)
    _emit(args, rows, KERR_SHIFT_COLUMNS, mapping)
    return EXIT_OK


def cmd_oracle_check(args):
    from . import oracle
    from .response import observables
    from .sweep import _dump_paths, emit, metadata

    mapping = _mapping(args)
    d = derive(params_from_mapping(mapping))
    ss = solve_steady_state(d, args.branch)
    cfg = oracle.OracleConfig(branch=args.branch, **_oracle_cfg(args))
    ratios = np.linspace(args.lo, args.hi, args.points) if args.points > 1 else [args.lo]
    dumps = _dump_paths(args.dump_trajectory, len(ratios))
    rows, failed = [], False
    for r, dump in zip(ratios, dumps):
        w = float(r) * d.omega_m
        row = {"omega_over_omegam": float(r), "passed": False, "error": ""}
        try:
            an = observables(ss, w, method=args.method)
            res = oracle.integrate(d, w, cfg, steady=ss, dump=dump)
            rep = oracle.compare(an, res, args.tol_first, args.tol_second)
        except NumericalError as exc:
            row["error"] = str(exc)
            failed = True
        else:
            row.update(rep.to_dict())
            failed |= not rep.passed
        rows.append(row)
    columns = ("omega_over_omegam", "passed", "error")
    if args.format == "csv":
        for row in rows:
            dev = row.get("deviations", {})
            row["dev_tp_abs2"] = dev.get("tp_abs2", math.nan)
            row["dev_eta"] = dev.get("eta", math.nan)
        columns = ("omega_over_omegam", "dev_tp_abs2", "dev_eta", "passed", "error")
    meta = metadata(mapping, args.command, args.reproducible,
                    {"tolerances": [args.tol_first, args.tol_second], "branch": ss.branch,
                     "flags": list(ss.flags), "backend": oracle.BACKEND})
    emit(rows, args.format, _resolve(args.output), columns, meta)
    return EXIT_ORACLE if failed else EXIT_OK


def cmd_preset(args):
    from .sweep import emit, metadata, preset_tables

    overrides = _override_dict(args)
    if args.config:
        raise UsageFailure("preset: --config is not accepted; presets fix the reference parameters "
                           "(use --param for individual overrides)")
    tables = preset_tables(args.name, overrides, args.jobs, args.method, args.branch)
    root = _resolve(args.output) if args.output else os.environ.get(OUTPUT_DIR_ENV, ".")
    os.makedirs(root, exist_ok=True)
    for t in tables:
        meta = metadata(t.params, f"preset {args.name}", args.reproducible, {"table": t.name})
        emit(t.rows, args.format, os.path.join(root, f"{t.name}.{args.format}"), t.columns, meta)
        print(os.path.join(root, f"{t.name}.{args.format}"), file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "steady": cmd_steady,
    "spectrum": cmd_spectrum,
    "delay": cmd_delay,
    "kerr-shift": cmd_kerr_shift,
    "oracle-check": cmd_oracle_check,
    "preset": cmd_preset,
}


def run_command(argv):
    """Run one CLI invocation and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageFailure("--jobs must be >= 1")
        return COMMANDS[args.command](args)
    except UsageFailure as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (KerrOmitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    code = run_command(sys.argv[1:] if argv is None else argv)
    sys.exit(code)
