"""Calibration of the loosely labelled "Hz" Kerr values.

The reference figure set quotes U as 0.5, 3 and 8 "Hz".  This module
evaluates the figure-level trends (window shift and broadening with U, the
size of the second-order peak, and its dependence on pump detuning) under
both readings of the tag and selects one.  A reading that misses both the
Kerr-trend and the detuning checks is rejected; ties are broken by the
number of individual checks passed, then by how many of the quoted
operating points are dynamically stable, then by the summed log distance
of the three figure-read peak values from their targets, then in favour
of ``rad_per_s``.
"""

from dataclasses import dataclass, field

import math

import numpy as np

from .analysis import FeatureError, eta_features, transparency_window
from .params import reference_params, derive
from .response import spectrum, uniform_grid
from .steady import solve_steady_state

READINGS = ("rad_per_s", "hz")
KERR_TAGS = (0.0, 3.0, 8.0)

# figure-read targets and their +-40% bands
ETA_PEAK_TAG8 = 0.10
ETA_RATIO_8_TO_3 = 3.0
ETA_PEAK_TAG3_DETUNED = 0.20
BAND = 0.4


def within(value, target, band=BAND):
    return (1.0 - band) * target <= value <= (1.0 + band) * target


def operating_point(kerr_tag, unit, detuning_over_omega_m=-1.0, pump_power=10e-3):
    """Derived parameters for a quoted operating point under a given reading."""
    p = reference_params(kerr_u=kerr_tag, pump_power=pump_power,
                     detuning_over_omega_m=detuning_over_omega_m)
    return derive(p.replace(kerr_u_unit=unit))


def peak_eta(derived, count=2001):
    grid = uniform_grid(derived.omega_m, count=count)
    rows = spectrum(derived, grid)
    return eta_features(grid, [r["eta"] for r in rows], derived.omega_m).peak_max


@dataclass(frozen=True)
class TrendReport:
    unit: str
    centers: dict  # tag -> center / omega_m or None
    linewidths: dict  # tag -> linewidth / omega_m or None
    peaks: dict  # tag -> peak eta
    checks: dict  # name -> bool
    stable: dict  # tag -> bool

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return {
            "unit": self.unit,
            "centers_over_omegam": {str(k): v for k, v in self.centers.items()},
            "linewidths_over_omegam": {str(k): v for k, v in self.linewidths.items()},
            "peak_eta": {str(k): v for k, v in self.peaks.items()},
            "checks": dict(self.checks),
            "stable": {str(k): v for k, v in self.stable.items()},
            "passed": self.passed,
        }


def kerr_trends(unit, tags=KERR_TAGS):
    """Window shift/broadening and peak eta versus the Kerr tag at P_L = 10 mW."""
    centers, widths, peaks, stable = {}, {}, {}, {}
    for tag in tags:
        d = operating_point(tag, unit)
        ss = solve_steady_state(d)
        stable[tag] = "dynamically-unstable" not in ss.flags
        peaks[tag] = peak_eta(d)
        try:
            w = transparency_window(ss)
        except FeatureError:
            centers[tag] = widths[tag] = None
        else:
            centers[tag] = w.center_ratio
            widths[tag] = w.linewidth / d.omega_m

    offsets = [None if centers[t] is None else abs(centers[t] - 1.0) for t in tags]
    lw = [widths[t] for t in tags]
    checks = {
        "center_shift_grows": None not in offsets and bool(np.all(np.diff(offsets) > 0)),
        "linewidth_grows": None not in lw and bool(np.all(np.diff(lw) > 0)),
        "peak_tag8_near_10pct": within(peaks[tags[-1]], ETA_PEAK_TAG8),
        "peak_ratio_8_to_3_near_3": peaks[tags[1]] > 0
        and within(peaks[tags[-1]] / peaks[tags[1]], ETA_RATIO_8_TO_3),
    }
    return TrendReport(unit, centers, widths, peaks, checks, stable)


@dataclass(frozen=True)
class DetuningReport:
    unit: str
    peaks: dict  # detuning / omega_m -> peak eta
    checks: dict
    stable: dict

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        return {
            "unit": self.unit,
            "peak_eta": {str(k): v for k, v in self.peaks.items()},
            "checks": dict(self.checks),
            "stable": {str(k): v for k, v in self.stable.items()},
            "passed": self.passed,
        }


def detuning_trends(unit, tag=3.0, detunings=(-0.5, -1.0, -1.5)):
    """Peak eta for the Kerr tag ``tag`` at several pump detunings."""
    peaks, stable = {}, {}
    for dd in detunings:
        d = operating_point(tag, unit, detuning_over_omega_m=dd)
        stable[dd] = "dynamically-unstable" not in solve_steady_state(d).flags
        peaks[dd] = peak_eta(d)
    checks = {
        "peak_at_half_detuning_near_20pct": within(peaks[-0.5], ETA_PEAK_TAG3_DETUNED),
        "larger_detuning_gives_smaller_peak": peaks[-1.5] < peaks[-1.0],
    }
    return DetuningReport(unit, peaks, checks, stable)


def target_distance(trend, detuning):
    """Sum of |log(value / target)| over the three figure-read peak values."""
    tags = sorted(trend.peaks)
    values = (
        (trend.peaks[tags[-1]], ETA_PEAK_TAG8),
        (trend.peaks[tags[-1]] / trend.peaks[tags[1]] if trend.peaks[tags[1]] > 0 else 0.0,
         ETA_RATIO_8_TO_3),
        (detuning.peaks[-0.5], ETA_PEAK_TAG3_DETUNED),
    )
    return sum(abs(math.log(v / t)) if v > 0 else math.inf for v, t in values)


@dataclass(frozen=True)
class Calibration:
    selected: str
    reports: dict = field(repr=False)  # unit -> (TrendReport, DetuningReport)
    rejected: tuple = ()
    rule: str = ""

    def to_dict(self):
        return {
            "selected": self.selected,
            "rejected": list(self.rejected),
            "rule": self.rule,
            "readings": {u: {"kerr_trends": t.to_dict(), "detuning": d.to_dict()}
                         for u, (t, d) in self.reports.items()},
        }


def calibrate_kerr_unit():
    """Select the reading of the "Hz" Kerr tag; see the module docstring."""
    reports = {u: (kerr_trends(u), detuning_trends(u)) for u in READINGS}
    rejected = tuple(u for u, (t, d) in reports.items() if not t.passed and not d.passed)
    alive = [u for u in READINGS if u not in rejected]
    if len(alive) == 1:
        return Calibration(alive[0], reports, rejected, "only surviving reading")

    pool = alive or list(READINGS)

    def score(u):
        t, d = reports[u]
        checks = sum(t.checks.values()) + sum(d.checks.values())
        stable = sum(v for k, v in t.stable.items() if k) + sum(d.stable.values())
        return checks, stable, -target_distance(t, d)

    scores = {u: score(u) for u in pool}
    rules = ("most checks passed", "tie on checks; most stable operating points",
             "tie on checks and stability; closest to the figure-read values")
    for level, rule in enumerate(rules):
        best = max(scores[u][:level + 1] for u in pool)
        winners = [u for u in pool if scores[u][:level + 1] == best]
        if len(winners) == 1:
            return Calibration(winners[0], reports, rejected, rule)
        pool = winners
    return Calibration("rad_per_s", reports, rejected, "full tie; default reading")
