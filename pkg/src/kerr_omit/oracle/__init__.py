"""Brute-force time-domain ground truth.

Integrates the full classical equations of motion in the frame rotating at
the pump frequency,

    da/dt = (i Delta_c - kappa) a - i g a x + 2 i U |a|^2 a + eps_l + eps_p e^{-i W t}
    m x'' + m gamma_m x' + m omega_m^2 x = -hbar g |a|^2

with fixed-step RK4, then projects the settled trajectory onto the
harmonics e^{-i k W t}, k = -2..2.  Nothing here uses the perturbative
algebra of :mod:`kerr_omit.response`; the steady state is only used as an
initial condition and to size the burn-in.

The stepping kernel is compiled (Cython) when available and falls back to
a pure-Python twin otherwise; set ``KERR_OMIT_PURE_PYTHON=1`` to force the
fallback.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConvergenceError, InstabilityError, UsageError
from ..steady import solve_steady_state
from . import _kernel_py

HARMONICS = (-2, -1, 0, 1, 2)
MECHANICAL_HARMONICS = (0, 1, 2)


def _load_backends():
    backends = {"python": _kernel_py.advance}
    try:
        from . import _kernel
    except ImportError:
        pass
    else:
        backends["cython"] = _kernel.advance
    return backends


BACKENDS = _load_backends()
if os.environ.get("KERR_OMIT_PURE_PYTHON") or "cython" not in BACKENDS:
    BACKEND = "python"
else:
    BACKEND = "cython"


@dataclass(frozen=True)
class OracleConfig:
    steps_per_period: int = 400
    burn_in: float | None = None  # s; None -> burn_in_damping_times / slowest rate
    burn_in_damping_times: float = 10.0
    tolerance: float = 1e-3
    window_periods: int = 50
    max_windows: int = 40
    initial: str = "steady"  # or "zero"
    initial_perturbation: float = 0.0  # relative kick to the steady field at t = 0
    branch: str = "lower"

    def __post_init__(self):
        if int(self.steps_per_period) != self.steps_per_period or self.steps_per_period < 100:
            raise ValueError("steps_per_period must be an integer >= 100")
        if int(self.window_periods) != self.window_periods or self.window_periods < 1:
            raise ValueError("window_periods must be an integer >= 1")
        if not 0 < self.tolerance <= 1e-2:
            raise ValueError("tolerance must lie in (0, 1e-2]")
        if self.max_windows < 2:
            raise ValueError("max_windows must be >= 2")
        if self.initial not in ("steady", "zero"):
            raise ValueError("initial must be 'steady' or 'zero'")
        if not -1.0 < self.initial_perturbation < 1.0:
            raise ValueError("initial_perturbation must lie in (-1, 1)")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def harmonics(self):
        return HARMONICS


@dataclass(frozen=True)
class DemodResult:
    omega: float
    a: dict  # k -> complex, a(t) ~ sum_k a_k e^{-i k W t}
    x: dict  # k -> complex for k = 0, 1, 2; x_{-k} = conj(x_k)
    residual_fraction: float
    mean_power: float  # window average of |a|^2
    metric: float
    windows: int
    step: float
    steps_per_beat: int
    burn_in_time: float
    eps_l: float
    eps_p: float
    kappa: float
    branch: str
    flags: tuple = ()
    backend: str = BACKEND
    converged: bool = True

    @property
    def tp(self):
        return 1.0 - self.kappa * self.a[1] / self.eps_p

    @property
    def s2(self):
        return -self.kappa * self.a[2] / self.eps_p

    @property
    def tp_abs2(self):
        return abs(self.tp) ** 2

    @property
    def eta(self):
        return abs(self.s2)

    def to_dict(self):
        out = {
            "omega_rad_s": self.omega,
            "a": {str(k): [v.real, v.imag] for k, v in self.a.items()},
            "x": {str(k): [v.real, v.imag] for k, v in self.x.items()},
            "residual_fraction": self.residual_fraction,
            "mean_power": self.mean_power,
            "metric": self.metric,
            "windows": self.windows,
            "step_s": self.step,
            "steps_per_beat": self.steps_per_beat,
            "burn_in_s": self.burn_in_time,
            "branch": self.branch,
            "flags": list(self.flags),
            "backend": self.backend,
            "converged": self.converged,
        }
        if self.eps_p:
            out.update(tp_abs2=self.tp_abs2, eta=self.eta)
        return out


def time_step(derived, omega, steps_per_period):
    """(h, N): step size and steps per beat period 2 pi / W.

    h is the largest step not exceeding min(2pi/W, 2pi/omega_m, 1/kappa) /
    steps_per_period that divides the beat period exactly.
    """
    beat = 2.0 * math.pi / omega
    target = min(beat, 2.0 * math.pi / derived.omega_m, 1.0 / derived.kappa) / steps_per_period
    n = int(math.ceil(beat / target - 1e-9))
    return beat / n, n


def tables(derived, n):
    """Probe drive on the half-step grid and e^{i W t} on the step grid."""
    j = np.arange(2 * n)
    drive = derived.eps_p * np.exp(-1j * math.pi * j / n)
    rot = np.exp(2j * math.pi * np.arange(n) / n)
    return np.ascontiguousarray(drive), np.ascontiguousarray(rot)


def kernel_params(derived):
    d = derived
    return np.array(
        [d.detuning, d.kappa, d.g, d.kerr, d.eps_l, d.mass, d.omega_m, d.gamma_m, d.hbar],
        dtype=float,
    )


def default_burn_in(ss, damping_times=10.0):
    """``damping_times`` over the slower of Gamma and the linearised decay rate.

    Gamma overestimates the relaxation rate far from the red sideband, where
    the mechanics is damped by little more than gamma_m.
    """
    rate = ss.linewidth
    if ss.decay_rate > 0:
        rate = min(rate, ss.decay_rate)
    return damping_times / rate


_EMPTY_ACC = np.zeros(0, dtype=complex)
_EMPTY_TRAJ = np.zeros((0, 4))


def _check(status, stage, omega):
    if status == 1:
        raise InstabilityError(f"non-finite state during {stage} at W={omega!r} rad/s")
    if status == 2:
        raise InstabilityError(
            f"field amplitude ran away during {stage} at W={omega!r} rad/s "
            "(unstable branch or numerical blow-up)"
        )


def _metric(new, old, floor_a, floor_x):
    worst = 0.0
    for k in HARMONICS:
        worst = max(worst, abs(new[0][k] - old[0][k]) / max(abs(new[0][k]), floor_a))
    for k in MECHANICAL_HARMONICS:
        worst = max(worst, abs(new[1][k] - old[1][k]) / max(abs(new[1][k]), floor_x))
    return worst


def integrate(derived, omega, config=None, steady=None, backend=None, dump=None):
    """Integrate to a settled periodic response at probe offset ``omega``.

    Parameters
    ----------
    derived : DerivedParams
    omega : float
        Probe-pump offset W in rad/s.
    config : OracleConfig, optional
    steady : SteadyState, optional
        Pre-solved steady state (initial condition and burn-in scale).
    backend : {"cython", "python"}, optional
        Kernel to use; defaults to :data:`BACKEND`.
    dump : str or path, optional
        Write the demodulation-window trajectory as CSV
        (t_s, re_a, im_a, x_m, p_kg_m_s).

    Returns
    -------
    DemodResult

    Raises
    ------
    InstabilityError
        On NaN/overflow in the state.
    ConvergenceError
        When successive windows never agree within ``config.tolerance``;
        the exception carries the last metric and partial result.
    """
    cfg = config or OracleConfig()
    if not omega > 0:
        raise ValueError(f"probe offset must be positive, got {omega!r}")
    name = backend or BACKEND
    advance = BACKENDS[name]
    d = derived
    ss = steady if steady is not None else solve_steady_state(d, cfg.branch)

    h, nper = time_step(d, omega, cfg.steps_per_period)
    beat = nper * h
    drive, rot = tables(d, nper)
    pars = kernel_params(d)
    if cfg.initial == "steady":
        a0 = ss.a * (1.0 + cfg.initial_perturbation)
        y = np.array([a0.real, a0.imag, ss.x, 0.0])
    else:
        y = np.zeros(4)
    amax = 1e3 * (abs(ss.a) + (d.eps_l + d.eps_p) / d.kappa) + 1.0

    burn = cfg.burn_in if cfg.burn_in is not None else default_burn_in(ss, cfg.burn_in_damping_times)
    burn_steps = int(math.ceil(burn / beat - 1e-9)) * nper
    _check(advance(y, pars, drive, rot, burn_steps, h, 0, _EMPTY_ACC, _EMPTY_TRAJ, amax),
           "burn-in", omega)

    win_steps = cfg.window_periods * nper
    # harmonics below 1e-6 of the carrier only need to settle in absolute terms
    floor_a = 1e-6 * max(abs(ss.a), d.eps_p / d.kappa) + 1e-300
    floor_x = 1e-6 * abs(ss.x) + 1e-300
    writer = None
    if dump is not None:
        fh = open(dump, "w", newline="", encoding="utf-8")
        writer = csv.writer(fh)
        writer.writerow(["t_s", "re_a", "im_a", "x_m", "p_kg_m_s"])
    try:
        prev = None
        metric = math.inf
        t0 = burn_steps * h
        for w in range(1, cfg.max_windows + 1):
            acc = np.zeros(9, dtype=complex)
            traj = np.zeros((win_steps + 1, 4)) if writer is not None else _EMPTY_TRAJ
            _check(advance(y, pars, drive, rot, win_steps, h, 0, acc, traj, amax),
                   f"window {w}", omega)
            if writer is not None:
                start = 0 if w == 1 else 1  # window edges are shared
                times = t0 + h * np.arange(win_steps + 1)
                for t, row in zip(times[start:], traj[start:]):
                    writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
            t0 += win_steps * h
            acc /= win_steps
            amps = ({k: complex(acc[i]) for i, k in enumerate(HARMONICS)},
                    {k: complex(acc[5 + i]) for i, k in enumerate(MECHANICAL_HARMONICS)})
            power = acc[8].real
            if prev is not None:
                metric = _metric(amps, prev, floor_a, floor_x)
                if metric <= cfg.tolerance:
                    break
            prev = amps
    finally:
        if writer is not None:
            fh.close()

    retained = sum(abs(v) ** 2 for v in amps[0].values())
    residual = (power - retained) / power if power > 0 else 0.0
    result = DemodResult(
        omega=omega,
        a=amps[0],
        x=amps[1],
        residual_fraction=residual,
        mean_power=power,
        metric=metric,
        windows=w,
        step=h,
        steps_per_beat=nper,
        burn_in_time=burn_steps * h,
        eps_l=d.eps_l,
        eps_p=d.eps_p,
        kappa=d.kappa,
        branch=ss.branch,
        flags=ss.flags,
        backend=name,
        converged=metric <= cfg.tolerance,
    )
    if not result.converged:
        raise ConvergenceError(
            f"demodulation did not settle within {cfg.max_windows} windows at W={omega!r} rad/s",
            metric,
            result,
        )
    return result


# --- analytic vs oracle ------------------------------------------------------

@dataclass(frozen=True)
class ComparisonReport:
    omega: float
    deviations: dict  # name -> relative deviation
    first_tolerance: float
    second_tolerance: float
    passed: bool
    branch: str
    flags: tuple = ()
    analytic: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "omega_rad_s": self.omega,
            "deviations": dict(self.deviations),
            "first_tolerance": self.first_tolerance,
            "second_tolerance": self.second_tolerance,
            "passed": self.passed,
            "branch": self.branch,
            "flags": list(self.flags),
            "analytic": dict(self.analytic),
            "oracle": dict(self.oracle),
        }


def _rel(value, reference):
    if reference == 0:
        return 0.0 if value == 0 else math.inf
    return abs(value - reference) / abs(reference)


def compare(analytic, oracle, first_tolerance=0.01, second_tolerance=0.10):
    """Per-harmonic relative deviations of an analytic response from the oracle.

    Pass/fail is decided on |t_p|^2 (first order) and eta (second order);
    amplitude deviations are reported alongside.
    """
    d = analytic.steady.derived
    scale = max(abs(analytic.omega), 1.0)
    if (abs(analytic.omega - oracle.omega) > 1e-12 * scale
            or not math.isclose(d.eps_p, oracle.eps_p, rel_tol=1e-12, abs_tol=0.0)
            or not math.isclose(d.eps_l, oracle.eps_l, rel_tol=1e-12, abs_tol=0.0)
            or not math.isclose(d.kappa, oracle.kappa, rel_tol=1e-12)):
        raise UsageError("analytic response and oracle result were computed for different parameters")

    dev = {
        "A1m": _rel(analytic.a1m, oracle.a[1]),
        "A1p": _rel(analytic.a1p, oracle.a[-1]),
        "A2m": _rel(analytic.a2m, oracle.a[2]),
        "A2p": _rel(analytic.a2p, oracle.a[-2]),
        "X1": _rel(analytic.x1, oracle.x[1]),
        "X2": _rel(analytic.x2, oracle.x[2]),
        "tp_abs2": _rel(analytic.tp_abs2, oracle.tp_abs2),
        "eta": _rel(analytic.eta, oracle.eta),
    }
    passed = dev["tp_abs2"] <= first_tolerance and dev["eta"] <= second_tolerance
    flags = tuple(oracle.flags)
    if analytic.steady.branch != oracle.branch:
        flags += ("branch-mismatch",)
    return ComparisonReport(
        omega=analytic.omega,
        deviations=dev,
        first_tolerance=first_tolerance,
        second_tolerance=second_tolerance,
        passed=passed,
        branch=oracle.branch,
        flags=flags,
        analytic={"tp_abs2": analytic.tp_abs2, "eta": analytic.eta},
        oracle={"tp_abs2": oracle.tp_abs2, "eta": oracle.eta, "metric": oracle.metric},
    )
