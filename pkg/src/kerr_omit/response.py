"""Perturbative sideband response around the pumped steady state.

Fluctuations are expanded as

    da = A1- e^{-i W t} + A1+ e^{i W t} + A2- e^{-2i W t} + A2+ e^{2i W t}
    dx = X1 e^{-i W t} + c.c. + X2 e^{-2i W t} + c.c.

with W the probe-pump offset.  The first order is sourced by the probe
alone and the second order by products of first-order amplitudes only, so
each order is one 3x3 complex solve in the unknowns (A-, conj(A+), X).

hbar placement: the radiation-pressure force is -hbar g |a|^2, so every
term that feeds the field back into the mechanics (the third row of each
system, and g^2 |a|^2 in the closed forms) carries hbar.

Sign convention: alpha_(+/-) = -i W +/- i Delta + kappa, so the
anti-Stokes amplitude A1- sees alpha_- = kappa - i (W + Delta), which is
resonant at W = -Delta.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import SingularityError, StepSizeError
from .steady import solve_steady_state

COND_LIMIT = 1e12
METHODS = ("matrix", "closed-form")


@dataclass(frozen=True)
class ResponseCoefficients:
    omega: float
    alpha_p: complex
    alpha_m: complex
    alpha_0: complex
    lambda_p: complex
    lambda_m: complex
    lambda_0: complex
    beta: complex  # NaN when g == 0
    g_beta: complex  # g * beta, finite for g == 0


class FirstOrder(NamedTuple):
    a1m: complex
    a1p: complex
    x1: complex


class SecondOrder(NamedTuple):
    a2m: complex
    a2p: complex
    x2: complex


def coefficients(ss, omega):
    """alpha, lambda and beta at probe offset ``omega`` (rad/s)."""
    if not omega > 0:
        raise ValueError(f"probe offset must be positive, got {omega!r}")
    d = ss.derived
    delta = ss.delta
    alpha_p = complex(d.kappa, -omega + delta)
    alpha_m = complex(d.kappa, -omega - delta)
    alpha_0 = d.mass * complex(d.omega_m**2 - omega**2, -d.gamma_m * omega)
    lambda_p = complex(d.kappa, -2.0 * omega + delta)
    lambda_m = complex(d.kappa, -2.0 * omega - delta)
    lambda_0 = d.mass * complex(d.omega_m**2 - 4.0 * omega**2, -2.0 * d.gamma_m * omega)

    pole = alpha_p + 1j * ss.kerr_shift
    if abs(pole) <= 1e-14 * (abs(alpha_p) + abs(ss.kerr_shift)):
        raise SingularityError(
            "beta pole: alpha_+ + i*dw vanishes", omega=omega, kerr_shift=ss.kerr_shift
        )
    g_beta = -(2.0 * d.kerr * alpha_0 + d.hbar * d.g**2) * ss.n / (1j * pole)
    beta = g_beta / d.g if d.g != 0.0 else complex(math.nan, math.nan)
    return ResponseCoefficients(
        omega, alpha_p, alpha_m, alpha_0, lambda_p, lambda_m, lambda_0, beta, g_beta
    )


def system_matrix(ss, diag_m, diag_p, diag_0):
    """3x3 matrix acting on (A-, conj(A+), X) for one harmonic order."""
    d = ss.derived
    a = ss.a
    ac = a.conjugate()
    kerr = 2j * d.kerr
    return np.array(
        [
            [diag_m, -kerr * a * a, 1j * d.g * a],
            [kerr * ac * ac, diag_p, -1j * d.g * ac],
            [d.hbar * d.g * ac, d.hbar * d.g * a, diag_0],
        ],
        dtype=complex,
    )


def equilibrated_condition(matrix):
    """Condition number after row then column max-norm scaling."""
    m = np.array(matrix, dtype=complex)
    rows = np.abs(m).max(axis=1)
    if np.any(rows == 0):
        return math.inf
    m /= rows[:, None]
    cols = np.abs(m).max(axis=0)
    if np.any(cols == 0):
        return math.inf
    m /= cols[None, :]
    return float(np.linalg.cond(m))


def _solve(matrix, rhs, omega, order):
    cond = equilibrated_condition(matrix)
    if not cond <= COND_LIMIT:
        raise SingularityError(f"{order} system is singular", omega=omega, cond=cond)
    return np.linalg.solve(matrix, np.asarray(rhs, dtype=complex))


def first_order(ss, omega, coeffs=None):
    """(A1-, A1+, X1) from the linear probe response."""
    c = coeffs or coefficients(ss, omega)
    m = system_matrix(ss, c.alpha_m, c.alpha_p, c.alpha_0)
    a1m, b1, x1 = _solve(m, [ss.derived.eps_p, 0.0, 0.0], omega, "first-order")
    return FirstOrder(complex(a1m), complex(b1).conjugate(), complex(x1))


def second_order_sources(ss, first, kerr_quadratic=True):
    """Right-hand side of the second-order system from first-order products."""
    d = ss.derived
    a = ss.a
    ac = a.conjugate()
    a1, x1 = first.a1m, first.x1
    b1 = first.a1p.conjugate()
    src = [-1j * d.g * a1 * x1, 1j * d.g * b1 * x1, -d.hbar * d.g * a1 * b1]
    if kerr_quadratic:
        # 2iU(a* da^2 + 2 a |da|^2) from expanding 2iU|a|^2 a to second order
        src[0] += 2j * d.kerr * (ac * a1 * a1 + 2.0 * a * a1 * b1)
        src[1] += -2j * d.kerr * (a * b1 * b1 + 2.0 * ac * a1 * b1)
    return src


def second_order(ss, first, omega, coeffs=None, kerr_quadratic=True):
    """(A2-, A2+, X2) driven by the first-order amplitudes at the same ``omega``.

    ``kerr_quadratic=False`` drops the Kerr products (a* dA^2, a |dA|^2) and
    keeps only the optomechanical sources dA dX and dA dA*; that reduced
    system is the one the printed closed form for A2- refers to.
    """
    c = coeffs or coefficients(ss, omega)
    m = system_matrix(ss, c.lambda_m, c.lambda_p, c.lambda_0)
    src = second_order_sources(ss, first, kerr_quadratic)
    if not any(src):
        return SecondOrder(0j, 0j, 0j)
    a2m, b2, x2 = _solve(m, src, omega, "second-order")
    return SecondOrder(complex(a2m), complex(b2).conjugate(), complex(x2))


def _first_denominator(ss, c):
    d = ss.derived
    dw = ss.kerr_shift
    coupling = d.hbar * d.g**2 * ss.n
    return (c.alpha_0 * c.alpha_p * c.alpha_m - dw**2 * c.alpha_0
            + 2.0 * coupling * (ss.delta + dw))


def closed_form_first(ss, omega, coeffs=None):
    """Closed-form (A1-, X1)."""
    c = coeffs or coefficients(ss, omega)
    d = ss.derived
    coupling = d.hbar * d.g**2 * ss.n
    den = _first_denominator(ss, c)
    if den == 0:
        raise SingularityError("closed-form first-order denominator vanishes", omega=omega)
    a1m = (c.alpha_0 * c.alpha_p + 1j * coupling) / den * d.eps_p
    x1 = -(c.alpha_p + 1j * ss.kerr_shift) * d.hbar * d.g * ss.a.conjugate() / den * d.eps_p
    return complex(a1m), complex(x1)


class ClosedFormSecond(NamedTuple):
    a2m: complex
    reference: complex  # A2- from the reduced matrix solve
    delta: float  # |a2m - reference| / |reference|


CLOSED_FORM_VARIANTS = ("printed", "corrected")


def closed_form_second(ss, first, omega, coeffs=None, variant="printed"):
    """Closed form for A2- and its deviation from the matrix solve.

    ``printed`` evaluates the commonly quoted expression (hbar restored on the
    g^2 terms); ``corrected`` is the exact solution of the reduced second
    order system,

        A2- = [i g (g (l+ + i dw) beta - (l0 l+ + i hbar g^2 n)) A1- X1
               - (2U l0 + hbar g^2) g beta a X1^2 / hbar] / D2

    The printed form lacks the overall i g of the first term, has l0 l-
    instead of l0 l+, and a* instead of a in the second.  The comparison
    uses ``second_order(..., kerr_quadratic=False)``, the system both
    forms describe.
    """
    if variant not in CLOSED_FORM_VARIANTS:
        raise ValueError(f"unknown closed-form variant {variant!r}")
    c = coeffs or coefficients(ss, omega)
    d = ss.derived
    dw = ss.kerr_shift
    coupling = d.hbar * d.g**2 * ss.n
    den = (c.lambda_0 * c.lambda_p * c.lambda_m - dw**2 * c.lambda_0
           + 2.0 * coupling * (ss.delta + dw))
    if den == 0:
        raise SingularityError("closed-form second-order denominator vanishes", omega=omega)
    k2 = 2.0 * d.kerr * c.lambda_0 + d.hbar * d.g**2
    if variant == "printed":
        term_ax = ((c.lambda_p + 1j * dw) * c.g_beta
                   - (c.lambda_0 * c.lambda_m + 1j * coupling)) / den
        term_xx = -k2 * c.g_beta * ss.a.conjugate() / den
    else:
        term_ax = 1j * d.g * ((c.lambda_p + 1j * dw) * c.g_beta
                              - (c.lambda_0 * c.lambda_p + 1j * coupling)) / den
        term_xx = -k2 * c.g_beta * ss.a / (d.hbar * den)
    a2m = complex(term_ax * first.a1m * first.x1 + term_xx * first.x1**2)

    ref = second_order(ss, first, omega, c, kerr_quadratic=False).a2m
    if ref == 0:
        delta = 0.0 if a2m == 0 else math.inf
    else:
        delta = abs(a2m - ref) / abs(ref)
    return ClosedFormSecond(a2m, ref, delta)


@dataclass(frozen=True)
class SidebandResponse:
    omega: float
    a1m: complex
    a1p: complex
    x1: complex
    a2m: complex
    a2p: complex
    x2: complex
    tp: complex
    s2: complex
    method: str
    steady: object = field(repr=False, default=None)

    @property
    def tp_abs2(self):
        return abs(self.tp) ** 2

    @property
    def eta(self):
        return abs(self.s2)

    @property
    def s0(self):
        """Pump-frequency output, eps_l/sqrt(kappa) - sqrt(kappa) a."""
        d = self.steady.derived
        return d.eps_l / math.sqrt(d.kappa) - math.sqrt(d.kappa) * self.steady.a

    @property
    def s1(self):
        """Probe-frequency output, eps_p/sqrt(kappa) - sqrt(kappa) A1-."""
        d = self.steady.derived
        return d.eps_p / math.sqrt(d.kappa) - math.sqrt(d.kappa) * self.a1m

    def amplitudes(self):
        return {
            "A1m": self.a1m, "A1p": self.a1p, "X1": self.x1,
            "A2m": self.a2m, "A2p": self.a2p, "X2": self.x2,
            "tp": self.tp, "s2": self.s2,
        }


def _transmission(ss, omega, a1m, coeffs):
    d = ss.derived
    if d.eps_p != 0:
        return 1.0 - d.kappa * a1m / d.eps_p
    # eps_p = 0: the linear transmission is still defined; use a unit probe
    unit = first_order(dataclasses.replace(ss, derived=d.replace(eps_p=1.0)), omega, coeffs)
    return 1.0 - d.kappa * unit.a1m


def observables(ss, omega, method="matrix", kerr_quadratic=True):
    """Sideband amplitudes and the observables |t_p|^2, eta at ``omega``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    d = ss.derived
    c = coefficients(ss, omega)
    first = first_order(ss, omega, c)
    if method == "matrix":
        second = second_order(ss, first, omega, c, kerr_quadratic=kerr_quadratic)
    else:
        a1m, x1 = closed_form_first(ss, omega, c)
        b1 = (-2j * d.kerr * ss.a.conjugate() ** 2 * a1m
              + 1j * d.g * ss.a.conjugate() * x1) / c.alpha_p
        first = FirstOrder(a1m, b1.conjugate(), x1)
        cf = closed_form_second(ss, first, omega, c, variant="corrected")
        nan = complex(math.nan, math.nan)
        second = SecondOrder(cf.a2m, nan, nan)
    tp = _transmission(ss, omega, first.a1m, c)
    s2 = -d.kappa * second.a2m / d.eps_p if d.eps_p != 0 else 0j
    return SidebandResponse(
        omega, first.a1m, first.a1p, first.x1,
        second.a2m, second.a2p, second.x2,
        complex(tp), complex(s2), method, ss,
    )


SPECTRUM_COLUMNS = (
    "omega_over_omegam", "tp_abs2", "eta", "arg_tp_rad", "arg_s2_rad", "method",
    "omega_rad_s", "error",
)


def spectrum_row(ss, omega, method="matrix", kerr_quadratic=True):
    d = ss.derived
    row = {"omega_over_omegam": omega / d.omega_m, "omega_rad_s": omega, "method": method}
    try:
        r = observables(ss, omega, method, kerr_quadratic)
    except (SingularityError, np.linalg.LinAlgError) as exc:
        row.update(tp_abs2=math.nan, eta=math.nan, arg_tp_rad=math.nan,
                   arg_s2_rad=math.nan, error=str(exc), amplitudes={})
        return row
    row.update(
        tp_abs2=r.tp_abs2,
        eta=r.eta,
        arg_tp_rad=math.atan2(r.tp.imag, r.tp.real),
        arg_s2_rad=math.atan2(r.s2.imag, r.s2.real),
        error="",
        amplitudes=r.amplitudes(),
    )
    return row


def check_grid(omegas, omega_m):
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim != 1 or omegas.size == 0:
        raise ValueError("frequency grid must be a non-empty 1-D sequence")
    if np.any(np.diff(omegas) <= 0):
        raise ValueError("frequency grid must be strictly ascending")
    if omegas[0] <= 0 or omegas[-1] > 2.0 * omega_m * (1 + 1e-12):
        raise ValueError("frequency grid must lie within (0, 2 omega_m]")
    return omegas


def spectrum(derived, omegas, method="matrix", branch="lower", kerr_quadratic=True, steady=None):
    """Rows of :data:`SPECTRUM_COLUMNS` (plus complex ``amplitudes``) over ``omegas``.

    A single steady-state solve is shared by all points; per-point
    singularities are recorded in the row's ``error`` field.
    """
    omegas = check_grid(omegas, derived.omega_m)
    ss = steady if steady is not None else solve_steady_state(derived, branch)
    return [spectrum_row(ss, float(w), method, kerr_quadratic) for w in omegas]


def uniform_grid(omega_m, lo=0.8, hi=1.2, count=2001):
    """``count`` uniform offsets over [lo, hi] * omega_m."""
    if count == 1:
        return np.array([lo * omega_m])
    return np.linspace(lo, hi, count) * omega_m


# --- group delays -------------------------------------------------------------

STEP_BOUNDS = (1e-7, 1e-2)  # in units of omega_m


@dataclass(frozen=True)
class GroupDelays:
    tau1: float  # s
    tau2: float  # s
    step: float  # rad/s
    omega: float  # rad/s
    tau1_err: float
    tau2_err: float
    # central differences at h and h/2, kept for convergence checks
    tau1_pair: tuple = ()
    tau2_pair: tuple = ()


def default_step(ss):
    """1e-4 omega_m, reduced to Gamma/100 for narrow windows, clamped to STEP_BOUNDS."""
    d = ss.derived
    h = min(1e-4 * d.omega_m, 0.01 * ss.linewidth)
    return min(max(h, STEP_BOUNDS[0] * d.omega_m), STEP_BOUNDS[1] * d.omega_m)


def _phase_derivative(phases, h):
    """Central differences at h and h/2 from phases at -h, -h/2, 0, h/2, h."""
    unwrapped = np.unwrap(phases)
    if np.any(np.abs(np.diff(unwrapped)) > math.pi / 2):
        raise StepSizeError("phase jump larger than pi/2 across the stencil; use a smaller step")
    d_full = (unwrapped[4] - unwrapped[0]) / (2.0 * h)
    d_half = (unwrapped[3] - unwrapped[1]) / h
    return (4.0 * d_half - d_full) / 3.0, abs(d_half - d_full) / 3.0, (d_full, d_half)


def group_delays(ss, omega=None, step=None, method="matrix", kerr_quadratic=True):
    """tau1 = d arg(t_p)/dW and tau2 = (1/2) d arg(s2)/dW at ``omega`` (default omega_m).

    s2 = -kappa A2-/eps_p is the complex second-sideband amplitude whose
    modulus is eta.  Values are Richardson-extrapolated from central
    differences at ``step`` and ``step/2``; the reported errors are
    |D(h/2) - D(h)|/3.
    """
    d = ss.derived
    w0 = d.omega_m if omega is None else omega
    h = default_step(ss) if step is None else step
    lo, hi = STEP_BOUNDS[0] * d.omega_m, STEP_BOUNDS[1] * d.omega_m
    if not lo <= h <= hi:
        raise ValueError(f"step {h!r} outside [{lo!r}, {hi!r}] rad/s")
    offsets = (-h, -h / 2, 0.0, h / 2, h)
    tp_phase, s2_phase = [], []
    for off in offsets:
        r = observables(ss, w0 + off, method, kerr_quadratic)
        tp_phase.append(math.atan2(r.tp.imag, r.tp.real))
        s2_phase.append(math.atan2(r.s2.imag, r.s2.real))
    tau1, err1, pair1 = _phase_derivative(tp_phase, h)
    tau2, err2, pair2 = _phase_derivative(s2_phase, h)
    return GroupDelays(
        tau1, 0.5 * tau2, h, w0, err1, 0.5 * err2,
        pair1, (0.5 * pair2[0], 0.5 * pair2[1]),
    )
