"""Spectral feature extraction: transparency window, symmetry and eta peaks.

Everything here post-processes analytic spectra.  Features are first
located on a grid and then refined on the continuous response with scipy's
scalar optimisers and root finders, so results do not depend on the grid
spacing beyond bracketing.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import find_peaks

from .errors import NumericalError
from .response import observables, uniform_grid


class FeatureError(NumericalError):
    """A requested spectral feature is absent (e.g. no transparency window)."""


def _responses(ss, omegas, method="matrix", kerr_quadratic=True):
    tp2 = np.empty(len(omegas))
    eta = np.empty(len(omegas))
    for i, w in enumerate(omegas):
        r = observables(ss, float(w), method=method, kerr_quadratic=kerr_quadratic)
        tp2[i] = r.tp_abs2
        eta[i] = r.eta
    return tp2, eta


def _refine_extremum(f, lo, hi, maximize, omega_m):
    sign = -1.0 if maximize else 1.0
    res = minimize_scalar(lambda w: sign * f(w), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * omega_m})
    return float(res.x), float(f(res.x))


@dataclass(frozen=True)
class WindowFit:
    center: float  # rad/s, refined maximum of |t_p|^2
    peak: float
    left_min: tuple  # (omega, |t_p|^2) of the flanking dips
    right_min: tuple
    half_level: float
    left_edge: float
    right_edge: float
    omega_m: float

    @property
    def linewidth(self):
        """Full width of the window at half height above the higher dip (rad/s)."""
        return self.right_edge - self.left_edge

    @property
    def center_ratio(self):
        return self.center / self.omega_m

    def to_dict(self):
        return {
            "center_over_omegam": self.center_ratio,
            "peak_tp_abs2": self.peak,
            "linewidth_rad_s": self.linewidth,
            "linewidth_over_omegam": self.linewidth / self.omega_m,
            "left_min_over_omegam": self.left_min[0] / self.omega_m,
            "right_min_over_omegam": self.right_min[0] / self.omega_m,
        }


def transparency_window(ss, omegas=None, method="matrix", kerr_quadratic=True,
                        min_prominence=0.05):
    """Locate and measure the OMIT transparency window of |t_p|^2.

    The window is the most prominent local maximum of |t_p|^2 on the grid
    (default: 2001 points over [0.8, 1.2] omega_m).  Its flanking dips are
    the minima between it and the neighbouring higher ground; the linewidth
    is the full width at the level halfway between the peak and the higher
    of the two dips.

    Raises
    ------
    FeatureError
        If no maximum with prominence >= ``min_prominence`` exists or a
        flank cannot be bracketed.
    """
    wm = ss.derived.omega_m
    omegas = uniform_grid(wm) if omegas is None else np.asarray(omegas, dtype=float)
    tp2, _ = _responses(ss, omegas, method, kerr_quadratic)

    def f(w):
        return observables(ss, float(w), method=method, kerr_quadratic=kerr_quadratic).tp_abs2

    peaks, props = find_peaks(tp2, prominence=min_prominence)
    if len(peaks) == 0:
        raise FeatureError("no transparency window: |t_p|^2 has no prominent maximum on the grid")
    k = int(np.argmax(props["prominences"]))
    ip = peaks[k]
    il, ir = props["left_bases"][k], props["right_bases"][k]
    # bases are the lowest points between the peak and higher ground
    il = il + int(np.argmin(tp2[il:ip + 1]))
    ir = ip + int(np.argmin(tp2[ip:ir + 1]))
    if il == ip or ir == ip:
        raise FeatureError("transparency window flank runs off the grid")

    center, peak = _refine_extremum(f, omegas[max(ip - 1, 0)], omegas[min(ip + 1, len(omegas) - 1)],
                                    True, wm)
    left_min = _refine_extremum(f, omegas[max(il - 1, 0)], omegas[min(il + 1, ip)], False, wm)
    right_min = _refine_extremum(f, omegas[max(ir - 1, ip)], omegas[min(ir + 1, len(omegas) - 1)],
                                 False, wm)
    half = 0.5 * (peak + max(left_min[1], right_min[1]))

    def edge(lo_idx, hi_idx, lo_w, hi_w):
        seg = tp2[lo_idx:hi_idx + 1] - half
        cross = np.nonzero(np.sign(seg[:-1]) != np.sign(seg[1:]))[0]
        if len(cross) == 0:
            raise FeatureError("half-height crossing not bracketed")
        j = lo_idx + (cross[-1] if lo_w < center else cross[0])
        a, b = omegas[j], omegas[j + 1]
        a, b = max(a, lo_w), min(b, hi_w)
        return brentq(lambda w: f(w) - half, a, b, xtol=1e-12 * wm)

    left_edge = edge(il, ip, left_min[0], center)
    right_edge = edge(ip, ir, center, right_min[0])
    return WindowFit(center, peak, left_min, right_min, half, left_edge, right_edge, wm)


def asymmetry(f, center, span, samples=500):
    """Largest mirror mismatch max |f(c+d) - f(c-d)| over 0 < d <= span.

    Measured in absolute units of ``f``; for |t_p|^2, which lives on [0, 1],
    this is a fraction of full transmission.  A relative measure is useless
    here because the OMIT dips reach |t_p|^2 ~ 1e-8.
    """
    deltas = np.linspace(span / samples, span, samples)
    return max(abs(f(center + dlt) - f(center - dlt)) for dlt in deltas)


def symmetry_center(ss, guess, span=None, search=None, samples=101, method="matrix",
                    kerr_quadratic=True):
    """Probe offset about which |t_p|^2 is most nearly mirror-symmetric.

    Minimises the root-mean-square mismatch of |t_p|^2(c + d) and
    |t_p|^2(c - d) over 0 < d <= ``span`` (default 0.05 omega_m), searching c
    within ``search`` (default 0.01 omega_m) of ``guess``.
    """
    wm = ss.derived.omega_m
    span = 0.05 * wm if span is None else span
    search = 0.01 * wm if search is None else search
    deltas = np.linspace(span / samples, span, samples)

    def f(w):
        return observables(ss, float(w), method=method, kerr_quadratic=kerr_quadratic).tp_abs2

    def cost(c):
        diff = [f(c + d) - f(c - d) for d in deltas]
        return math.sqrt(math.fsum(v * v for v in diff) / len(diff))

    res = minimize_scalar(cost, bounds=(guess - search, guess + search), method="bounded",
                          options={"xatol": 1e-9 * wm})
    return float(res.x)


@dataclass(frozen=True)
class EtaFeatures:
    peaks: tuple  # ((omega, eta), ...) ascending in omega
    dip: tuple | None  # (omega, eta) local minimum between the two main peaks
    peak_max: float
    peak_omega: float
    omega_m: float

    def to_dict(self):
        wm = self.omega_m
        return {
            "peaks": [[w / wm, e] for w, e in self.peaks],
            "dip": None if self.dip is None else [self.dip[0] / wm, self.dip[1]],
            "peak_eta": self.peak_max,
            "peak_over_omegam": self.peak_omega / wm,
        }


def eta_features(omegas, eta, omega_m, min_prominence=1e-4):
    """Peaks of eta(W) and the local minimum between the two largest.

    Grid-level extraction; the peak maximum includes the grid end points so
    a monotonic eta still reports its largest value.
    """
    omegas = np.asarray(omegas, dtype=float)
    eta = np.asarray(eta, dtype=float)
    good = np.isfinite(eta)
    if not good.any():
        raise FeatureError("eta is not finite anywhere on the grid")
    idx, props = find_peaks(np.where(good, eta, -np.inf), prominence=min_prominence)
    peaks = tuple((float(omegas[i]), float(eta[i])) for i in idx)
    imax = int(np.nanargmax(eta))
    dip = None
    if len(idx) >= 2:
        top = sorted(np.argsort(props["prominences"])[-2:])
        i0, i1 = idx[top[0]], idx[top[1]]
        j = i0 + int(np.nanargmin(eta[i0:i1 + 1]))
        dip = (float(omegas[j]), float(eta[j]))
    return EtaFeatures(peaks, dip, float(eta[imax]), float(omegas[imax]), omega_m)
