"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed at the end of the pytest run (see ``conftest.py``)
and immediately when running with ``-s``.
"""

import math
import time

import numpy as np
import pytest

from kerr_omit import calibration, oracle
from kerr_omit.analysis import asymmetry, eta_features, symmetry_center, transparency_window
from kerr_omit.errors import NumericalError
from kerr_omit.params import HZ_TAG_INTERPRETATION, derive, reference_params
from kerr_omit.response import (
    closed_form_first, closed_form_second, first_order, observables, spectrum,
    uniform_grid,
)
from kerr_omit.steady import solve_steady_state
from kerr_omit.sweep import preset_tables

LINES = {}
ORACLE_TAGS = (0.0, 3.0, 8.0)
ORACLE_RATIOS = np.linspace(0.8, 1.2, 11)


def record(number, title, passed, detail):
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    LINES[number] = line
    print(line)
    return passed


@pytest.fixture(scope="module")
def oracle_runs():
    """Oracle and analytic results on the 3 x 11 grid, shared by criteria 1 and 2."""
    runs = []
    t0 = time.perf_counter()
    for tag in ORACLE_TAGS:
        d = derive(reference_params(kerr_u=tag))
        ss = solve_steady_state(d)
        for r in ORACLE_RATIOS:
            w = float(r) * d.omega_m
            an = observables(ss, w)
            try:
                res = oracle.integrate(d, w, steady=ss)
            except NumericalError as exc:
                runs.append((tag, r, an, None, type(exc).__name__))
            else:
                runs.append((tag, r, an, res, ""))
    return runs, time.perf_counter() - t0


def _oracle_summary(runs, key, tolerance):
    bad = []
    worst = 0.0
    for tag, r, an, res, err in runs:
        if res is None:
            bad.append(f"U{tag:g}@{r:.2f}:{err}")
            continue
        dev = oracle.compare(an, res).deviations[key]
        worst = max(worst, dev)
        if not dev <= tolerance:
            bad.append(f"U{tag:g}@{r:.2f}:{dev:.2%}")
    return bad, worst


def test_criterion_01_oracle_first_order(oracle_runs):
    runs, elapsed = oracle_runs
    bad, worst = _oracle_summary(runs, "tp_abs2", 0.01)
    ok = not bad and elapsed < 120
    detail = (f"{len(runs) - len(bad)}/{len(runs)} points within 1% on |t_p|^2, "
              f"worst converged deviation {worst:.2%}, {elapsed:.0f} s; failing: {', '.join(bad) or 'none'}")
    assert record(1, "oracle equivalence, first order", ok, detail), detail


def test_criterion_02_oracle_second_order(oracle_runs):
    runs, _ = oracle_runs
    bad, worst = _oracle_summary(runs, "eta", 0.10)
    ok = not bad
    detail = (f"{len(runs) - len(bad)}/{len(runs)} points within 10% on eta, "
              f"worst converged deviation {worst:.2%}; failing: {', '.join(bad) or 'none'}")
    assert record(2, "oracle equivalence, second order", ok, detail), detail


def test_criterion_03_method_equivalence():
    rng = np.random.default_rng(3)
    worst_first = worst_corrected = 0.0
    printed = []
    for _ in range(100):
        tag = rng.choice([0.0, 3.0, 8.0])
        power = 10 ** rng.uniform(-4.3, -1.7)
        dd = rng.uniform(-1.5, -0.5)
        d = derive(reference_params(kerr_u=tag, pump_power=power, detuning_over_omega_m=dd))
        ss = solve_steady_state(d)
        w = rng.uniform(0.8, 1.2) * d.omega_m
        first = first_order(ss, w)
        a1m, x1 = closed_form_first(ss, w)
        worst_first = max(worst_first, abs(a1m - first.a1m) / abs(first.a1m),
                          abs(x1 - first.x1) / abs(first.x1))
        worst_corrected = max(worst_corrected,
                              closed_form_second(ss, first, w, variant="corrected").delta)
        printed.append(closed_form_second(ss, first, w, variant="printed").delta)
    ok = worst_first <= 1e-9 and worst_corrected <= 1e-9
    detail = (f"first order max rel {worst_first:.1e}; corrected second-order form max rel "
              f"{worst_corrected:.1e}; printed form deviates systematically "
              f"(median {np.median(printed):.2g}, max {np.max(printed):.2g})")
    assert record(3, "method equivalence", ok, detail), detail


def test_criterion_04_baseline(ref_derived, ref_steady):
    wm = ref_derived.omega_m
    fit = transparency_window(ref_steady)
    sym = symmetry_center(ref_steady, fit.center)
    offset = abs(fit.center - sym) / sym

    def f(w):
        return observables(ref_steady, w).tp_abs2

    # symmetry is judged about the asymmetry-minimising center; the window
    # center is tied to it by the 0.3% clause
    mismatch = asymmetry(f, sym, 0.05 * wm)
    mismatch_fit = asymmetry(f, fit.center, 0.05 * wm)
    grid = uniform_grid(wm)
    feats = eta_features(grid, [r["eta"] for r in spectrum(ref_derived, grid, steady=ref_steady)], wm)
    near = [p for p in feats.peaks if abs(p[0] / wm - 1) < 0.05]
    has_dip = feats.dip is not None and len(near) >= 2 and near[0][0] < feats.dip[0] < near[-1][0]
    ok = offset <= 3e-3 and mismatch <= 0.02 and has_dip and 0.005 <= feats.peak_max <= 0.03
    detail = (f"window center {fit.center_ratio:.5f} omega_m, {offset:.3%} from symmetry center; "
              f"max ||t_p|^2(c+d) - |t_p|^2(c-d)| = {mismatch:.4f} about the symmetry center "
              f"({mismatch_fit:.4f} about the window center); eta peaks "
              f"{', '.join(f'{e:.2%}@{w / wm:.4f}' for w, e in near)}, dip "
              f"{'none' if feats.dip is None else f'{feats.dip[0] / wm:.4f}'}")
    assert record(4, "U = 0 baseline", ok, detail), detail


@pytest.fixture(scope="module")
def calib():
    return calibration.calibrate_kerr_unit()


def test_criterion_05_kerr_trends(calib):
    trend, _ = calib.reports[HZ_TAG_INTERPRETATION]
    failed = [k for k, v in trend.checks.items() if not v]
    peaks = ", ".join(f"U{t:g}: {p:.2%}" for t, p in trend.peaks.items())
    centers = ", ".join(f"U{t:g}: {'none' if c is None else f'{c:.4f}'}" for t, c in trend.centers.items())
    detail = (f"reading {HZ_TAG_INTERPRETATION}; centers {centers}; peak eta {peaks}; "
              f"failed checks: {', '.join(failed) or 'none'}")
    assert record(5, "Kerr trends", trend.passed, detail), detail


def test_criterion_06_detuning_and_unit_reading(calib):
    _, det = calib.reports[HZ_TAG_INTERPRETATION]
    failed = [k for k, v in det.checks.items() if not v]
    peaks = ", ".join(f"Dc {k:g}: {v:.2%}" for k, v in det.peaks.items())
    ok = det.passed and calib.selected == HZ_TAG_INTERPRETATION and \
        HZ_TAG_INTERPRETATION not in calib.rejected
    detail = (f"reading {HZ_TAG_INTERPRETATION} ({calib.rule}); U-tag 3 peak eta {peaks}; "
              f"rejected readings: {', '.join(calib.rejected) or 'none'}; "
              f"failed checks: {', '.join(failed) or 'none'}")
    assert record(6, "detuning enhancement and unit reading", ok, detail), detail


def test_criterion_07_group_delay_trends():
    tables = {t.name: t for t in preset_tables("fig4")}
    low = [r["tau2_s"] for r in tables["fig4_U0"].rows]
    first_neg = next((i for i, v in enumerate(low) if v < 0), None)
    decreasing = first_neg is not None and all(np.diff(low[:first_neg + 1]) < 0)
    top = tables[max(tables, key=lambda n: float(n.split("_U")[1]))]
    high = [r["tau2_s"] for r in top.rows]
    mid = len(high) // 2
    recovers = high[-1] > high[mid]
    ok = low[0] > 0 and decreasing and recovers
    p_neg = tables["fig4_U0"].rows[first_neg]["P_L_W"] if first_neg is not None else math.nan
    detail = (f"U=0: tau2 {low[0]:.3g} s at the lowest power, first negative at {p_neg * 1e3:.3g} mW; "
              f"{top.name}: tau2 {high[mid]:.3g} s mid-range -> {high[-1]:.3g} s at "
              f"{top.rows[-1]['P_L_W'] * 1e3:g} mW")
    assert record(7, "group-delay trends", ok, detail), detail


def test_criterion_08_scaling_laws():
    rng = np.random.default_rng(8)
    worst1 = worst2 = 0.0
    for _ in range(50):
        d = derive(reference_params(kerr_u=rng.choice([0.0, 3.0, 8.0]),
                                detuning_over_omega_m=rng.uniform(-1.5, -0.5)))
        ss = solve_steady_state(d)
        ss10 = solve_steady_state(d.replace(eps_p=10 * d.eps_p))
        w = rng.uniform(0.8, 1.2) * d.omega_m
        r1, r10 = observables(ss, w), observables(ss10, w)
        for a, b in ((r1.a1m, r10.a1m), (r1.a1p, r10.a1p), (r1.x1, r10.x1)):
            worst1 = max(worst1, abs(b - 10 * a) / abs(10 * a))
        for a, b in ((r1.a2m, r10.a2m), (r1.a2p, r10.a2p), (r1.x2, r10.x2)):
            worst2 = max(worst2, abs(b - 100 * a) / abs(100 * a))
    ok = worst1 <= 1e-8 and worst2 <= 1e-8
    detail = f"first order max rel {worst1:.1e}, second order max rel {worst2:.1e} under x10"
    assert record(8, "scaling laws", ok, detail), detail


def _draws(count, seed=2024):
    """Random stable operating points (rejection-sampled); returns (derived, ss) and the reject count."""
    rng = np.random.default_rng(seed)
    out, rejected = [], 0
    while len(out) < count:
        power = math.exp(rng.uniform(math.log(0.05e-3), math.log(20e-3)))
        tag = math.exp(rng.uniform(math.log(1e-3), math.log(8.0)))
        dd = rng.uniform(-1.5, -0.5)
        d = derive(reference_params(kerr_u=tag, pump_power=power, detuning_over_omega_m=dd))
        ss = solve_steady_state(d)
        if "dynamically-unstable" in ss.flags:
            rejected += 1
            continue
        out.append((d, ss))
    return out, rejected


def test_criterion_09_steady_state_integrity():
    rng = np.random.default_rng(9)
    worst_root = worst_field = 0.0
    for _ in range(500):
        d = derive(reference_params(kerr_u=rng.uniform(0, 10), pump_power=10 ** rng.uniform(-6, -1.3),
                                detuning_over_omega_m=rng.uniform(-2, 0.5)))
        for branch in ("lower", "upper"):
            ss = solve_steady_state(d, branch)
            worst_root = max(worst_root, *ss.root_residuals)
            worst_field = max(worst_field, ss.field_residual / d.eps_l)
    zero_shift = solve_steady_state(derive(reference_params(kerr_u=0.0))).kerr_shift

    draws, rejected = _draws(20)
    worst_osc = 0.0
    for d, ss in draws:
        probe_off = d.replace(eps_p=0.0)
        # start 5% off the branch so the check measures relaxation onto it
        cfg = oracle.OracleConfig(initial_perturbation=0.05, burn_in=30.0 / ss.decay_rate)
        res = oracle.integrate(probe_off, d.omega_m, cfg, steady=ss)
        worst_osc = max(worst_osc, abs(res.mean_power - ss.n) / ss.n)
    ok = worst_root <= 1e-10 and worst_field <= 1e-10 and zero_shift == 0.0 and worst_osc <= 1e-3
    detail = (f"root residual {worst_root:.1e}, field residual {worst_field:.1e} |eps_l|, "
              f"dw(U=0) = {float(zero_shift)!r}; oracle <|a|^2> vs n max rel {worst_osc:.1e} over "
              f"{len(draws)} draws ({rejected} unstable draws resampled)")
    assert record(9, "steady-state integrity", ok, detail), detail


def test_criterion_10_performance(ref_derived, ref_steady):
    grid = uniform_grid(ref_derived.omega_m)
    t0 = time.perf_counter()
    spectrum(ref_derived, grid)
    t_spec = time.perf_counter() - t0
    t0 = time.perf_counter()
    oracle.integrate(ref_derived, 0.9 * ref_derived.omega_m, steady=ref_steady)
    t_oracle = time.perf_counter() - t0
    ok = t_spec < 1.0 and t_oracle < 10.0
    detail = (f"2001-point spectrum {t_spec:.2f} s, one oracle point {t_oracle:.2f} s "
              f"({oracle.BACKEND} kernel)")
    assert record(10, "performance", ok, detail), detail
