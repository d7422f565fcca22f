"""Experimental inputs and the SI rate quantities derived from them.

Every formula here keeps the reduced Planck constant explicit; nothing is
expressed in natural units.  Frequencies and rates are angular (rad/s).

Kerr coefficient units
----------------------
``U`` may be given directly through ``kerr_u`` together with a unit tag:

``rad_per_s``
    value is taken as an angular rate.
``hz``
    value is multiplied by 2*pi on ingest.
``hz_tag``
    the loosely labelled "Hz" values of the reference figure set.  The tag is
    resolved to one of the two readings above by :data:`HZ_TAG_INTERPRETATION`,
    which is fixed by the calibration in :mod:`kerr_omit.calibration`.
"""

import dataclasses
import json
import math
from dataclasses import dataclass

from scipy import constants

from .errors import ConfigurationError, ValidationError

HBAR = constants.hbar
SPEED_OF_LIGHT = constants.c

KERR_UNITS = ("rad_per_s", "hz", "hz_tag")

#: Reading of the ``hz_tag`` tag selected by ``calibration.calibrate_kerr_unit``.
HZ_TAG_INTERPRETATION = "rad_per_s"


def resolve_kerr_unit(unit):
    """Map a unit tag onto ``(factor, resolved_tag)`` with U[rad/s] = factor * value."""
    if unit not in KERR_UNITS:
        raise ConfigurationError(
            f"unknown Kerr unit tag {unit!r}; expected one of {', '.join(KERR_UNITS)}"
        )
    if unit == "hz_tag":
        unit = HZ_TAG_INTERPRETATION
    return (2.0 * math.pi if unit == "hz" else 1.0), unit


@dataclass(frozen=True)
class PhysicalParams:
    """User-facing experimental inputs, SI units throughout.

    Exactly one of ``v_eff`` / ``kerr_u`` and exactly one of
    ``probe_ratio`` / ``probe_power`` must be set.
    """

    wavelength: float  # m
    mass: float  # kg
    radius: float  # m
    n0: float
    n2: float  # m^2/W
    quality_factor: float
    omega_m: float  # rad/s
    gamma_m: float  # rad/s
    pump_power: float  # W
    detuning: float  # rad/s, omega_l - omega_c
    v_eff: float | None = None  # m^3
    kerr_u: float | None = None
    kerr_u_unit: str = "rad_per_s"
    probe_ratio: float | None = None  # eps_p / eps_l
    probe_power: float | None = None  # W

    def __post_init__(self):
        validate(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


_POSITIVE = ("wavelength", "mass", "radius", "n0", "n2", "quality_factor", "omega_m", "gamma_m")
_NON_NEGATIVE = ("pump_power", "kerr_u", "probe_ratio", "probe_power")


def validate(p):
    for name in _POSITIVE + _NON_NEGATIVE + ("detuning", "v_eff"):
        value = getattr(p, name)
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(name, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ValidationError(name, f"must be finite, got {value!r}")
    for name in _POSITIVE:
        if getattr(p, name) <= 0:
            raise ValidationError(name, f"must be strictly positive, got {getattr(p, name)!r}")
    if p.v_eff is not None and p.v_eff <= 0:
        raise ValidationError("v_eff", f"must be strictly positive, got {p.v_eff!r}")
    for name in _NON_NEGATIVE:
        value = getattr(p, name)
        if value is not None and value < 0:
            raise ValidationError(name, f"must be non-negative, got {value!r}")

    if (p.v_eff is None) == (p.kerr_u is None):
        raise ConfigurationError("exactly one of 'v_eff' and 'kerr_u' must be supplied")
    if (p.probe_ratio is None) == (p.probe_power is None):
        raise ConfigurationError("exactly one of 'probe_ratio' and 'probe_power' must be supplied")
    resolve_kerr_unit(p.kerr_u_unit)


@dataclass(frozen=True)
class DerivedParams:
    """Rates consumed by the steady-state, response and oracle code.

    ``eps_l`` and ``eps_p`` are drive amplitudes in sqrt(photons)/s.
    """

    omega_c: float
    omega_l: float
    kappa: float
    g: float  # rad/(s m), negative for the -omega_c/R convention
    kerr: float  # U, rad/s
    eps_l: float
    eps_p: float
    x_zpf: float
    mass: float
    omega_m: float
    gamma_m: float
    detuning: float
    hbar: float = HBAR
    speed_of_light: float = SPEED_OF_LIGHT
    kerr_source: str = "rad_per_s"

    def probe_frequency(self, omega):
        """Absolute probe frequency for a probe-pump offset ``omega``."""
        return self.omega_l + omega

    @property
    def probe_ratio(self):
        return self.eps_p / self.eps_l if self.eps_l else math.nan

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


def kerr_coefficient(omega_c, n0, n2, v_eff, hbar=HBAR, c=SPEED_OF_LIGHT):
    """Per-photon Kerr coefficient U = hbar omega_c^2 c n2 / (n0^2 V_eff), in rad/s."""
    return hbar * omega_c**2 * c * n2 / (n0**2 * v_eff)


def drive_amplitude(kappa, power, omega):
    """sqrt(kappa P / (hbar omega)), the coupled drive rate for power ``power``."""
    return math.sqrt(kappa * power / (HBAR * omega))


def derive(params):
    """Convert :class:`PhysicalParams` into :class:`DerivedParams`."""
    validate(params)
    omega_c = 2.0 * math.pi * SPEED_OF_LIGHT / params.wavelength
    omega_l = omega_c + params.detuning
    kappa = omega_c / params.quality_factor
    g = -omega_c / params.radius

    if params.kerr_u is not None:
        factor, source = resolve_kerr_unit(params.kerr_u_unit)
        if params.kerr_u_unit == "hz_tag":
            source = f"hz_tag->{source}"
        kerr = factor * params.kerr_u
    else:
        kerr = kerr_coefficient(omega_c, params.n0, params.n2, params.v_eff)
        source = "v_eff"

    eps_l = drive_amplitude(kappa, params.pump_power, omega_l)
    if params.probe_ratio is not None:
        eps_p = params.probe_ratio * eps_l
    else:
        # evaluated once at omega_p = omega_l + omega_m
        eps_p = drive_amplitude(kappa, params.probe_power, omega_l + params.omega_m)

    return DerivedParams(
        omega_c=omega_c,
        omega_l=omega_l,
        kappa=kappa,
        g=g,
        kerr=kerr,
        eps_l=eps_l,
        eps_p=eps_p,
        x_zpf=math.sqrt(HBAR / (2.0 * params.mass * params.omega_m)),
        mass=params.mass,
        omega_m=params.omega_m,
        gamma_m=params.gamma_m,
        detuning=params.detuning,
        kerr_source=source,
    )


def quality_from_linewidth(wavelength, kappa):
    """Q = omega_c / kappa for a cavity at ``wavelength``."""
    return 2.0 * math.pi * SPEED_OF_LIGHT / wavelength / kappa


# Reference operating point (780 nm silica microsphere).
REF_WAVELENGTH = 780e-9
REF_KAPPA = 2.0 * math.pi * 22e6
REF_QUALITY_FACTOR_QUOTED = 1.7e7
REF_OMEGA_M = 2.0 * math.pi * 83.7e6


def reference_mapping(kerr_u=0.0, pump_power=10e-3, detuning_over_omega_m=-1.0):
    """Config mapping of the reference parameter set.

    Q is derived from kappa/2pi = 22 MHz (about 3% above the quoted 1.7e7);
    kappa enters every formula directly, so it is the one kept exact.
    """
    return {
        "wavelength": REF_WAVELENGTH,
        "mass": 50e-12,
        "radius": 19e-6,
        "n0": 1.47,
        "n2": 3.2e-20,
        "quality_factor": quality_from_linewidth(REF_WAVELENGTH, REF_KAPPA),
        "omega_m": REF_OMEGA_M,
        "gamma_m": 2.0 * math.pi * 20e3,
        "pump_power": pump_power,
        "detuning": detuning_over_omega_m * REF_OMEGA_M,
        "kerr_u": kerr_u,
        "kerr_u_unit": "hz_tag",
        "probe_ratio": 0.05,
    }


def reference_params(kerr_u=0.0, pump_power=10e-3, detuning_over_omega_m=-1.0):
    return PhysicalParams(**reference_mapping(kerr_u, pump_power, detuning_over_omega_m))


# --- configuration ingestion -------------------------------------------------

FIELD_NAMES = tuple(f.name for f in dataclasses.fields(PhysicalParams))
_STRING_FIELDS = ("kerr_u_unit",)
_NULLABLE = ("v_eff", "kerr_u", "probe_ratio", "probe_power")


def params_from_mapping(mapping):
    """Build :class:`PhysicalParams` from a plain mapping, rejecting unknown keys."""
    unknown = sorted(set(mapping) - set(FIELD_NAMES))
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
    required = [f.name for f in dataclasses.fields(PhysicalParams)
                if f.default is dataclasses.MISSING]
    missing = [k for k in required if k not in mapping]
    if missing:
        raise ConfigurationError(f"missing configuration keys: {', '.join(missing)}")
    return PhysicalParams(**mapping)


def load_config(path):
    """Read a JSON config object from ``path``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a JSON object")
    return data


def apply_overrides(mapping, overrides):
    """Apply ``key=value`` strings on top of ``mapping`` (returns a new dict).

    ``none``/``null`` clears an optional field, e.g. to switch from a direct
    ``kerr_u`` to a mode-volume-derived coefficient.
    """
    out = dict(mapping)
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not sep or not key:
            raise ConfigurationError(f"malformed override {item!r}; expected key=value")
        if key not in FIELD_NAMES:
            raise ConfigurationError(f"unknown parameter {key!r}")
        if raw.lower() in ("none", "null"):
            if key not in _NULLABLE:
                raise ConfigurationError(f"parameter {key!r} cannot be cleared")
            out.pop(key, None)
            continue
        if key in _STRING_FIELDS:
            out[key] = raw
        else:
            try:
                out[key] = float(raw)
            except ValueError:
                raise ConfigurationError(f"parameter {key!r}: not a number: {raw!r}") from None
    return out
