#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy fallbacks.

The dispatch flag is read at import time, so this script runs each path in a
subprocess: once normally, once with FLOWINCENTIVES_NO_NUMBA=1.
"""

import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, time
import numpy as np
import flowincentives.kernels as kernels
from flowincentives.harness import generate_synthetic, prepare

rng = np.random.default_rng(0)
results = {"numba_enabled": kernels.NUMBA_ENABLED}

# volume prox: one call per iteration of the splitting solver
n = 200
m = rng.uniform(0.0, 20.0, n)
lam = rng.normal(0.0, 0.5, n)
t0 = rng.uniform(0.05, 0.3, n)
w = rng.uniform(0.5, 10.0, n)
kernels.gamma_solve(m, lam, 1.0, t0, w)  # warm any jit
reps = 2000
start = time.perf_counter()
for _ in range(reps):
    kernels.gamma_solve(m, lam, 1.0, t0, w)
results["gamma_solve_ms_per_call"] = (time.perf_counter() - start) / reps * 1e3

# exhaustive enumeration: the acceptance oracle's inner loop
scenario = generate_synthetic(nodes=4, richness=2, tightness=1.2, drivers=7, seed=1,
                              menu_amounts=(0.0, 2.0, 10.0))
pipe = prepare(scenario)
args = (pipe.a_matrix, pipe.background, pipe.columns, pipe.costs, 30.0)
kw = dict(objective="bpr", t0_row=pipe.t0_row, w_row=pipe.w_row)
kernels.enumerate_assignments(*args, **kw)  # warm any jit
start = time.perf_counter()
best, sel, count = kernels.enumerate_assignments(*args, **kw)
results["oracle_seconds"] = time.perf_counter() - start
results["oracle_assignments"] = int(count)
print(json.dumps(results))
"""


def run(no_numba):
    env = dict(os.environ)
    env["FLOWINCENTIVES_NO_NUMBA"] = "1" if no_numba else "0"
    out = subprocess.run(
        [sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    fast = run(no_numba=False)
    slow = run(no_numba=True)
    print(f"{'kernel':<28}{'numba':>14}{'numpy':>14}{'speedup':>10}")
    rows = [
        ("gamma_solve (ms/call)", fast["gamma_solve_ms_per_call"], slow["gamma_solve_ms_per_call"]),
        ("oracle enumeration (s)", fast["oracle_seconds"], slow["oracle_seconds"]),
    ]
    for name, f, s in rows:
        print(f"{name:<28}{f:>14.4f}{s:>14.4f}{s / f:>9.1f}x")
    print(f"assignments enumerated: {fast['oracle_assignments']}")
    if not fast["numba_enabled"]:
        print("note: numba unavailable in the fast run; both rows used numpy")


if __name__ == "__main__":
    main()
