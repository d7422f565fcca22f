"""Parameter sweeps, figure presets and CSV/JSON emission.

Sweeps are described by a :class:`SweepSpec` and evaluated point by point,
optionally in a process pool.  Rows are always returned in grid order, so
serial and parallel runs emit identical files.

CSV files start with one ``#`` line holding the metadata as JSON, then a
header row in the documented column order.  JSON files hold
``{"metadata": ..., "rows": [...]}`` with complex numbers written as
``{"re": x, "im": y}`` objects.
"""

import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import BranchError, KerrOmitError, NumericalError, ValidationError
from .params import derive, reference_mapping, params_from_mapping, resolve_kerr_unit
from .response import SPECTRUM_COLUMNS, group_delays, observables, spectrum_row
from .steady import KERR_SHIFT_COLUMNS, kerr_shift_curve, solve_steady_state

AXES = ("omega", "pump_power", "kerr", "detuning")
# PhysicalParams field driven by each axis (omega is not a parameter)
AXIS_FIELDS = {"omega": None, "pump_power": "pump_power", "kerr": "kerr_u", "detuning": "detuning"}
SWEEP_METHODS = ("matrix", "closed-form", "oracle")
FORMATS = ("csv", "json")
SCALES = ("linear", "log")

TP_COLUMNS = ("omega_over_omegam", "tp_abs2", "arg_tp_rad", "method", "omega_rad_s", "error")
ETA_COLUMNS = ("omega_over_omegam", "eta", "arg_s2_rad", "method", "omega_rad_s", "error")
ORACLE_COLUMNS = SPECTRUM_COLUMNS + ("metric", "residual_fraction", "windows")
DELAY_COLUMNS = (
    "P_L_W", "U_rad_s", "detuning_over_omegam", "omega_over_omegam",
    "tau1_s", "tau2_s", "tau1_err_s", "tau2_err_s",
    "tp_abs2", "eta", "n", "Delta_over_omegam", "branch", "flags", "error",
)


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional sweep.

    Axis units: ``omega`` in W/omega_m, ``pump_power`` in W, ``kerr`` in the
    parameter set's Kerr unit tag, ``detuning`` in Delta_c/omega_m.
    """

    axis: str = "omega"
    lo: float = 0.8
    hi: float = 1.2
    count: int = 2001
    scale: str = "linear"
    overrides: dict = field(default_factory=dict)
    method: str = "matrix"
    fmt: str = "csv"
    output: str | None = None
    branch: str = "lower"
    oracle: dict = field(default_factory=dict)
    omega_ratio: float = 1.0  # fixed W/omega_m for non-omega axes

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValidationError("axis", f"must be one of {', '.join(AXES)}")
        if int(self.count) != self.count or self.count < 1:
            raise ValidationError("count", "must be an integer >= 1")
        if self.count > 1 and not self.lo < self.hi:
            raise ValidationError("grid", "min must be below max when count > 1")
        if self.scale not in SCALES:
            raise ValidationError("scale", f"must be one of {', '.join(SCALES)}")
        if self.scale == "log" and self.lo <= 0:
            raise ValidationError("grid", "log grids need a positive minimum")
        if self.method not in SWEEP_METHODS:
            raise ValidationError("method", f"must be one of {', '.join(SWEEP_METHODS)}")
        if self.method == "oracle" and self.axis != "omega":
            raise ValidationError("method", "oracle sweeps run along the omega axis only")
        if self.fmt not in FORMATS:
            raise ValidationError("format", f"must be one of {', '.join(FORMATS)}")
        fixed = AXIS_FIELDS[self.axis]
        if fixed is not None and fixed in self.overrides:
            raise ValidationError(fixed, "is the sweep axis and cannot also be fixed")

    def grid(self):
        if self.count == 1:
            return np.array([float(self.lo)])
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)

    @property
    def columns(self):
        if self.axis == "omega":
            return ORACLE_COLUMNS if self.method == "oracle" else SPECTRUM_COLUMNS
        return DELAY_COLUMNS


# --- point evaluators (top level so worker processes can pickle them) -------

def _spectrum_chunk(task):
    mapping, omegas, method, branch = task
    d = derive(params_from_mapping(mapping))
    ss = solve_steady_state(d, branch)
    return [spectrum_row(ss, float(w), method) for w in omegas]


def _oracle_point(task):
    from . import oracle

    mapping, omega, branch, oracle_cfg, dump = task
    d = derive(params_from_mapping(mapping))
    ss = solve_steady_state(d, branch)
    row = {"omega_over_omegam": omega / d.omega_m, "omega_rad_s": omega, "method": "oracle",
           "error": ""}
    try:
        res = oracle.integrate(d, omega, oracle.OracleConfig(branch=branch, **oracle_cfg),
                               steady=ss, dump=dump)
    except NumericalError as exc:
        res = getattr(exc, "result", None)
        row["error"] = str(exc)
    if res is None:
        row.update(tp_abs2=math.nan, eta=math.nan, arg_tp_rad=math.nan, arg_s2_rad=math.nan,
                   metric=math.nan, residual_fraction=math.nan, windows=0, amplitudes={})
        return row
    tp, s2 = res.tp, res.s2
    row.update(
        tp_abs2=res.tp_abs2,
        eta=res.eta,
        arg_tp_rad=math.atan2(tp.imag, tp.real),
        arg_s2_rad=math.atan2(s2.imag, s2.real),
        metric=res.metric,
        residual_fraction=res.residual_fraction,
        windows=res.windows,
        amplitudes={"a": {str(k): v for k, v in res.a.items()},
                    "x": {str(k): v for k, v in res.x.items()}},
    )
    return row


def delay_row(params, branch="lower", method="matrix", omega_ratio=1.0):
    """Group delays and observables at W = omega_ratio * omega_m (DELAY_COLUMNS)."""
    d = derive(params)
    row = {
        "P_L_W": params.pump_power,
        "U_rad_s": d.kerr,
        "detuning_over_omegam": d.detuning / d.omega_m,
        "omega_over_omegam": omega_ratio,
        "error": "",
    }
    try:
        ss = solve_steady_state(d, branch)
        row.update(n=ss.n, Delta_over_omegam=ss.delta / d.omega_m, branch=ss.branch,
                   flags=";".join(ss.flags))
        omega = omega_ratio * d.omega_m
        gd = group_delays(ss, omega=omega, method=method)
        r = observables(ss, omega, method=method)
    except (NumericalError, BranchError) as exc:
        row.setdefault("n", math.nan)
        row.setdefault("Delta_over_omegam", math.nan)
        row.setdefault("branch", branch)
        row.setdefault("flags", "")
        row.update(tau1_s=math.nan, tau2_s=math.nan, tau1_err_s=math.nan, tau2_err_s=math.nan,
                   tp_abs2=math.nan, eta=math.nan, error=str(exc))
        return row
    row.update(tau1_s=gd.tau1, tau2_s=gd.tau2, tau1_err_s=gd.tau1_err, tau2_err_s=gd.tau2_err,
               tp_abs2=r.tp_abs2, eta=r.eta)
    return row


def _parameter_point(task):
    mapping, branch, method, omega_ratio = task
    return delay_row(params_from_mapping(mapping), branch, method, omega_ratio)


def _axis_mapping(base, axis, value):
    m = dict(base)
    if axis == "pump_power":
        m["pump_power"] = float(value)
    elif axis == "kerr":
        m["kerr_u"] = float(value)
        m.pop("v_eff", None)
    elif axis == "detuning":
        m["detuning"] = float(value) * m["omega_m"]
    return m


def _run(func, tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def run_sweep(spec, base_mapping, jobs=1, dump=None):
    """Evaluate ``spec`` on top of ``base_mapping``; rows come back in grid order.

    ``dump`` (oracle sweeps only) is a path; with more than one point the
    trajectory of point i goes to ``<stem>_<i><suffix>``.
    """
    if jobs < 1:
        raise ValidationError("jobs", "must be >= 1")
    mapping = dict(base_mapping)
    mapping.update(spec.overrides)
    params_from_mapping(mapping)  # validate once up front
    grid = spec.grid()

    if spec.axis == "omega":
        omegas = grid * mapping["omega_m"]
        if spec.method == "oracle":
            dumps = _dump_paths(dump, len(omegas))
            tasks = [(mapping, float(w), spec.branch, dict(spec.oracle), p)
                     for w, p in zip(omegas, dumps)]
            return _run(_oracle_point, tasks, jobs)
        from .response import check_grid

        check_grid(omegas, mapping["omega_m"])
        chunks = [c for c in np.array_split(omegas, max(1, min(jobs, len(omegas)))) if len(c)]
        tasks = [(mapping, chunk, spec.method, spec.branch) for chunk in chunks]
        return [row for part in _run(_spectrum_chunk, tasks, jobs) for row in part]

    tasks = [(_axis_mapping(mapping, spec.axis, v), spec.branch, spec.method, spec.omega_ratio)
             for v in grid]
    return _run(_parameter_point, tasks, jobs)


def _dump_paths(dump, count):
    if dump is None:
        return [None] * count
    if count == 1:
        return [str(dump)]
    stem, dot, suffix = str(dump).rpartition(".")
    if not dot:
        stem, suffix = str(dump), "csv"
    return [f"{stem}_{i}.{suffix}" for i in range(count)]


# --- presets -------------------------------------------------------------------

PRESETS = ("fig1c", "fig2", "fig3", "fig4")
FIG2_TAGS = (0.0, 3.0, 8.0)
FIG3_TAGS = (0.0, 3.0)
FIG3_DETUNINGS = (-0.5, -1.0, -1.5)
FIG1C_TAGS = (0.5, 3.0, 8.0)
FIG1C_POWERS = tuple(np.linspace(0.0, 20e-3, 41))
FIG4_TAGS = (0.0, 3.0, 8.0)
FIG4_POWER_RANGE = (0.05e-3, 50e-3, 31)  # log-spaced, W
PRESET_VARIABLES = {
    "fig1c": ("pump_power", "kerr_u"),
    "fig2": ("kerr_u",),
    "fig3": ("kerr_u", "detuning"),
    "fig4": ("kerr_u", "pump_power"),
}


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple
    rows: list
    params: dict  # mapping the rows were computed from


def _tag(value):
    return f"{value:g}"


def preset_tables(name, overrides=None, jobs=1, method="matrix", branch="lower"):
    """Tables reproducing one figure of the reference parameter study."""
    if name not in PRESETS:
        raise ValidationError("preset", f"must be one of {', '.join(PRESETS)}")
    overrides = dict(overrides or {})
    clash = sorted(set(overrides) & set(PRESET_VARIABLES[name]))
    if clash:
        raise ValidationError(clash[0], f"is a variable of preset {name} and cannot be fixed")
    if method == "oracle" and name in ("fig1c", "fig4"):
        raise ValidationError("method", f"preset {name} has no oracle mode")
    tables = []
    if name == "fig1c":
        base = reference_mapping()
        base.update(overrides)
        d = derive(params_from_mapping(base))
        factor, _ = resolve_kerr_unit(base.get("kerr_u_unit", "hz_tag"))
        rows = kerr_shift_curve(d, FIG1C_POWERS, [factor * t for t in FIG1C_TAGS], branch)
        tables.append(Table("fig1c", KERR_SHIFT_COLUMNS, rows, base))
    elif name == "fig2":
        for tag in FIG2_TAGS:
            base = reference_mapping(kerr_u=tag)
            base.update(overrides)
            rows = run_sweep(SweepSpec(method=method, branch=branch), base, jobs)
            tables.append(Table(f"fig2_tp_U{_tag(tag)}", TP_COLUMNS, rows, base))
            tables.append(Table(f"fig2_eta_U{_tag(tag)}", ETA_COLUMNS, rows, base))
    elif name == "fig3":
        for tag in FIG3_TAGS:
            for dd in FIG3_DETUNINGS:
                base = reference_mapping(kerr_u=tag, detuning_over_omega_m=dd)
                base.update(overrides)
                rows = run_sweep(SweepSpec(method=method, branch=branch), base, jobs)
                tables.append(Table(f"fig3_U{_tag(tag)}_dc{_tag(dd)}", SPECTRUM_COLUMNS, rows, base))
    else:
        lo, hi, count = FIG4_POWER_RANGE
        for tag in FIG4_TAGS:
            base = reference_mapping(kerr_u=tag)
            base.update(overrides)
            spec = SweepSpec(axis="pump_power", lo=lo, hi=hi, count=count, scale="log",
                             method=method, branch=branch)
            rows = run_sweep(spec, base, jobs)
            tables.append(Table(f"fig4_U{_tag(tag)}", DELAY_COLUMNS, rows, base))
    return tables


# --- emission --------------------------------------------------------------------

def metadata(mapping, command, reproducible=False, extra=None):
    """Provenance block: inputs, derived rates, Kerr unit reading, code version."""
    params = params_from_mapping(mapping)
    d = derive(params)
    meta = {
        "code": "kerr-omit",
        "version": __version__,
        "command": command,
        "params": params.to_dict(),
        "derived": d.to_dict(),
        "kerr_unit": d.kerr_source,
        "omega_m_rad_s": d.omega_m,
        "detuning_over_omegam": d.detuning / d.omega_m,
    }
    if extra:
        meta.update(extra)
    if not reproducible:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    return str(value)


class _Encoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


def _decode(obj):
    if set(obj) == {"re", "im"}:
        return complex(obj["re"], obj["im"])
    return obj


def render(rows, fmt, columns, meta):
    """Serialise rows to a string (see module docstring for the layouts)."""
    if not rows:
        raise ValidationError("rows", "nothing to emit")
    if fmt not in FORMATS:
        raise ValidationError("format", f"must be one of {', '.join(FORMATS)}")
    if fmt == "json":
        return json.dumps({"metadata": meta, "rows": rows}, cls=_Encoder, indent=1) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True, cls=_Encoder) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(rows, fmt, path, columns, meta):
    """Write rows to ``path`` (``None`` or ``-`` for stdout).

    Raises :class:`ValidationError` before touching the filesystem when
    there is nothing to write; I/O errors propagate as ``OSError``.
    """
    text = render(rows, fmt, columns, meta)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_json(path):
    """Read an emitted JSON file back as ``(metadata, rows)``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh, object_hook=_decode)
    if not isinstance(data, dict) or set(data) != {"metadata", "rows"}:
        raise KerrOmitError(f"{path} is not an emitted result file")
    return data["metadata"], data["rows"]


def load_csv(path):
    """Read an emitted CSV file as ``(metadata, header, rows-of-strings)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise KerrOmitError(f"{path} lacks the metadata line")
        meta = json.loads(first[2:])
        reader = csv.reader(fh)
        header = next(reader)
        return meta, header, [dict(zip(header, r)) for r in reader]
