"""Compiled vs pure-Python oracle kernel.

Times the raw RK4 stepper on the reference operating point and one full
oracle integration per backend, and checks the two backends agree.

    python3 benchmarks/bench_oracle.py [--steps N] [--repeat R] [--json]
"""

import argparse
import json
import time

import numpy as np

from kerr_omit import oracle
from kerr_omit.params import derive, reference_params
from kerr_omit.steady import solve_steady_state


def time_kernel(advance, d, ss, steps, repeat):
    h, n = oracle.time_step(d, d.omega_m, 400)
    drive, rot = oracle.tables(d, n)
    pars = oracle.kernel_params(d)
    best = np.inf
    for _ in range(repeat):
        y = np.array([ss.a.real, ss.a.imag, ss.x, 0.0])
        acc = np.zeros(9, dtype=complex)
        t0 = time.perf_counter()
        advance(y, pars, drive, rot, steps, h, 0, acc, np.zeros((0, 4)), 1e30)
        best = min(best, time.perf_counter() - t0)
    return best, acc / steps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args()

    d = derive(reference_params())
    ss = solve_steady_state(d)
    results = {}
    amps = {}
    for name, advance in oracle.BACKENDS.items():
        secs, amps[name] = time_kernel(advance, d, ss, args.steps, args.repeat)
        t0 = time.perf_counter()
        res = oracle.integrate(d, d.omega_m, steady=ss, backend=name)
        full = time.perf_counter() - t0
        results[name] = {
            "kernel_s": secs,
            "steps_per_s": args.steps / secs,
            "integrate_s": full,
            "windows": res.windows,
            "tp_abs2": res.tp_abs2,
            "eta": res.eta,
        }
    if len(amps) == 2:
        diff = np.max(np.abs(amps["cython"] - amps["python"]) / np.maximum(np.abs(amps["python"]), 1e-300))
        results["max_rel_diff"] = float(diff)
        results["speedup"] = results["python"]["kernel_s"] / results["cython"]["kernel_s"]

    if args.json:
        print(json.dumps(results, indent=1))
        return
    for name in oracle.BACKENDS:
        r = results[name]
        print(f"{name:7s} kernel {r['kernel_s']:.4f} s ({r['steps_per_s']:.3g} steps/s)  "
              f"integrate {r['integrate_s']:.3f} s  windows {r['windows']}")
    if "speedup" in results:
        print(f"speedup {results['speedup']:.1f}x, max relative difference {results['max_rel_diff']:.1e}")
    else:
        print("compiled kernel not built; only the pure-Python backend was timed")


if __name__ == "__main__":
    main()
