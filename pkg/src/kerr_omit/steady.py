"""Pumped-cavity steady state with Kerr and radiation-pressure shifts.

With the probe off, the intracavity photon number ``n = |a|^2`` obeys

    n * (kappa^2 + (Delta_c + 2 U n + hbar g^2 n / (m omega_m^2))^2) = eps_l^2

Since g < 0, the static displacement x = -hbar g n / (m omega_m^2) is
positive and -g x > 0, so the Kerr and optomechanical shifts enter the
bracket with the same sign.  With s = 2U + hbar g^2/(m omega_m^2) and the
scaled variables y = s n / kappa, D = Delta_c / kappa, P = s eps_l^2 / kappa^3
this becomes the Kerr bistability cubic

    y^3 + 2 D y^2 + (1 + D^2) y - P = 0

which has three positive roots only when D < -sqrt(3).
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchError, NumericalError
from .params import drive_amplitude

BRANCHES = ("lower", "middle", "upper")
MERGE_RTOL = 1e-6
ROOT_RTOL = 1e-10


@dataclass(frozen=True)
class SteadyState:
    n: float
    a: complex
    x: float
    kerr_shift: float  # Delta omega = -2 U n
    delta: float  # Delta = Delta_c - 2 Delta omega - g x
    linewidth: float  # OMIT linewidth Gamma
    roots: tuple  # all positive roots in n, ascending
    branch: str
    branch_index: int
    derived: object = field(repr=False)
    flags: tuple = ()
    root_residuals: tuple = ()
    decay_rate: float = math.nan  # -max Re(eigenvalue) of the linearised dynamics

    @property
    def field_residual(self):
        """|a (-i(Delta_c - dw - g x) + kappa) - eps_l|, the self-consistency residual."""
        d = self.derived
        lhs = self.a * (-1j * (d.detuning - self.kerr_shift - d.g * self.x) + d.kappa)
        return abs(lhs - d.eps_l)

    def to_dict(self):
        d = self.derived
        return {
            "n": self.n,
            "a_re": self.a.real,
            "a_im": self.a.imag,
            "x_m": self.x,
            "dw_rad_s": self.kerr_shift,
            "Delta_rad_s": self.delta,
            "Gamma_rad_s": self.linewidth,
            "roots": list(self.roots),
            "branch": self.branch,
            "flags": list(self.flags),
            "decay_rate_s": self.decay_rate,
            "detuning_over_omegam": d.detuning / d.omega_m,
            "Delta_over_omegam": self.delta / d.omega_m,
        }


def shift_per_photon(derived):
    """s = 2U + hbar g^2 / (m omega_m^2): total detuning pull per photon."""
    d = derived
    return 2.0 * d.kerr + d.hbar * d.g**2 / (d.mass * d.omega_m**2)


def _cubic(y, D, P):
    return ((y + 2.0 * D) * y + (1.0 + D * D)) * y - P


def _cubic_scale(y, D, P):
    return abs(y**3) + abs(2.0 * D * y * y) + abs((1.0 + D * D) * y) + abs(P)


def _polish(y, D, P):
    # Newton; keep stepping only while the residual shrinks
    r = abs(_cubic(y, D, P))
    for _ in range(8):
        dfdy = (3.0 * y + 4.0 * D) * y + (1.0 + D * D)
        if dfdy == 0.0 or r == 0.0:
            break
        trial = y - _cubic(y, D, P) / dfdy
        rt = abs(_cubic(trial, D, P))
        if rt >= r:
            break
        y, r = trial, rt
    return y


def _real_root_count(D, P):
    disc = 4.0 * D * D - 12.0
    if disc <= 0.0:
        return 1
    sq = math.sqrt(disc)
    y1 = (-4.0 * D - sq) / 6.0  # local maximum
    y2 = (-4.0 * D + sq) / 6.0  # local minimum
    return 3 if _cubic(y1, D, P) >= 0.0 >= _cubic(y2, D, P) else 1


def photon_number_roots(derived):
    """Positive roots ``n`` of the self-consistency cubic, ascending.

    Returns ``(roots, near_bistable)``; roots closer than ``MERGE_RTOL``
    relative are merged.
    """
    d = derived
    if d.eps_l == 0.0:
        return (0.0,), False
    s = shift_per_photon(d)
    if s == 0.0:
        return (d.eps_l**2 / (d.kappa**2 + d.detuning**2),), False

    D = d.detuning / d.kappa
    P = s * d.eps_l**2 / d.kappa**3
    companion = np.roots([1.0, 2.0 * D, 1.0 + D * D, -P])
    count = _real_root_count(D, P)
    if count == 1:
        candidates = [companion[np.argmin(np.abs(companion.imag))].real]
    else:
        candidates = sorted(companion.real)
    ys = sorted(_polish(y, D, P) for y in candidates)

    merged = [ys[0]]
    near = False
    for y in ys[1:]:
        if abs(y - merged[-1]) <= MERGE_RTOL * max(abs(y), abs(merged[-1])):
            near = True
            continue
        merged.append(y)
    if count == 1 and len(companion) == 3:
        # complex pair that nearly touches the real axis
        pair = companion[np.abs(companion.imag) > 0]
        if len(pair) and np.all(np.abs(pair.imag) <= MERGE_RTOL * np.abs(pair)):
            near = True

    for y in merged:
        if y <= 0.0 or abs(_cubic(y, D, P)) > ROOT_RTOL * _cubic_scale(y, D, P):
            raise NumericalError(
                f"steady-state cubic root failed (y={y!r}, D={D!r}, P={P!r})"
            )
    return tuple(d.kappa * y / s for y in merged), near


def cubic_residual(derived, n):
    """Relative residual of the cubic in ``n`` (normalized by the term magnitudes)."""
    d = derived
    s = shift_per_photon(d)
    terms = (s * s * n**3, 2.0 * d.detuning * s * n * n, (d.kappa**2 + d.detuning**2) * n, -d.eps_l**2)
    scale = sum(abs(t) for t in terms)
    return abs(math.fsum(terms)) / scale if scale else 0.0


def _branch_table(roots):
    if len(roots) == 1:
        return {"lower": 0, "upper": 0}
    if len(roots) == 2:
        return {"lower": 0, "upper": 1}
    return {"lower": 0, "middle": 1, "upper": 2}


def solve_steady_state(derived, branch="lower"):
    """Solve the probe-off steady state and select a branch.

    ``branch`` is one of ``lower`` (default, the adiabatic continuation
    from low power), ``middle`` or ``upper``.  The middle branch is returned
    but flagged ``unstable-candidate``.
    """
    if branch not in BRANCHES:
        raise BranchError(branch, BRANCHES)
    d = derived
    roots, near = photon_number_roots(d)
    table = _branch_table(roots)
    if branch not in table:
        raise BranchError(branch, table)
    index = table[branch]
    n = roots[index]

    x = -d.hbar * d.g * n / (d.mass * d.omega_m**2)
    kerr_shift = 0.0 - 2.0 * d.kerr * n  # +0.0 rather than -0.0 when U = 0
    a = d.eps_l / complex(d.kappa, -(d.detuning - kerr_shift - d.g * x))
    delta = d.detuning - 2.0 * kerr_shift - d.g * x

    flags = []
    if len(roots) == 3:
        flags.append("bistable")
    if near:
        flags.append("near-bistable")
    if branch == "middle":
        flags.append("unstable-candidate")
    decay = -float(np.max(np.linalg.eigvals(jacobian(d, a, x)).real))
    if decay < -1e-9 * d.kappa:
        flags.append("dynamically-unstable")

    ss = SteadyState(
        n=n,
        a=a,
        x=x,
        kerr_shift=kerr_shift,
        delta=delta,
        linewidth=math.nan,
        roots=roots,
        branch=branch,
        branch_index=index,
        derived=d,
        flags=tuple(flags),
        root_residuals=tuple(cubic_residual(d, r) for r in roots),
        decay_rate=decay,
    )
    return dataclasses.replace(ss, linewidth=omit_linewidth(ss))


def jacobian(derived, a, x):
    """Jacobian of the probe-off dynamics in (Re a, Im a, x, p) at (a, x, p=0).

    A fixed point is linearly stable when every eigenvalue has a negative
    real part; the least negative one sets the slowest relaxation rate.
    """
    d = derived
    n = abs(a) ** 2
    c = complex(-d.kappa, d.detuning - d.g * x + 2.0 * d.kerr * n)
    dar = c + 4j * d.kerr * a * a.real
    dai = 1j * c + 4j * d.kerr * a * a.imag
    dx = -1j * d.g * a
    hg = d.hbar * d.g
    return np.array([
        [dar.real, dai.real, dx.real, 0.0],
        [dar.imag, dai.imag, dx.imag, 0.0],
        [0.0, 0.0, 0.0, 1.0 / d.mass],
        [-2.0 * hg * a.real, -2.0 * hg * a.imag, -d.mass * d.omega_m**2, -d.gamma_m],
    ])


def omit_linewidth(ss):
    """Gamma = gamma_m + (g x_zpf)^2 n / kappa."""
    d = ss.derived
    return d.gamma_m + (d.g * d.x_zpf) ** 2 * ss.n / d.kappa


KERR_SHIFT_COLUMNS = ("P_L_W", "U_rad_s", "n", "dw_rad_s", "Delta_rad_s", "Gamma_rad_s", "branch")


def steady_state_at(derived, pump_power=None, kerr=None, branch="lower"):
    """Steady state with the pump power (W) and/or U (rad/s) replaced."""
    changes = {}
    if pump_power is not None:
        eps_l = drive_amplitude(derived.kappa, pump_power, derived.omega_l)
        ratio = derived.eps_p / derived.eps_l if derived.eps_l else 0.0
        changes.update(eps_l=eps_l, eps_p=ratio * eps_l)
    if kerr is not None:
        changes["kerr"] = kerr
    return solve_steady_state(derived.replace(**changes) if changes else derived, branch)


def kerr_shift_curve(derived, pump_powers, kerrs, branch="lower"):
    """Kerr shift table over a (P_L [W], U [rad/s]) grid.

    One row per grid pair (P_L major), keyed by :data:`KERR_SHIFT_COLUMNS`.
    """
    pump_powers = list(pump_powers)
    kerrs = list(kerrs)
    if not pump_powers or not kerrs:
        raise ValueError("kerr_shift_curve needs non-empty grids")
    if any(p < 0 for p in pump_powers) or any(u < 0 for u in kerrs):
        raise ValueError("grid values must be non-negative")
    rows = []
    for p in pump_powers:
        for u in kerrs:
            try:
                ss = steady_state_at(derived, pump_power=p, kerr=u, branch=branch)
            except NumericalError as exc:
                raise NumericalError(f"{exc} [at P_L={p!r} W, U={u!r} rad/s]") from exc
            rows.append(
                {
                    "P_L_W": p,
                    "U_rad_s": u,
                    "n": ss.n,
                    "dw_rad_s": ss.kerr_shift,
                    "Delta_rad_s": ss.delta,
                    "Gamma_rad_s": ss.linewidth,
                    "branch": ss.branch,
                }
            )
    return rows
