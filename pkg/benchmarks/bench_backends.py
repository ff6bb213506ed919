"""Benchmark the compiled polynomial kernel against the pure-Python fallback.

Times the raw kernel (sparse multiply) and two end-to-end workloads (the
simplicial differential and the curvature of the nonabelian fixture) under
both backends. Run directly:

    python benchmarks/bench_backends.py [--repeat N]

The package itself is backend-agnostic; this script re-imports it in a
subprocess per backend so the selection at import time is honest.
"""

import argparse
import json
import os
import random
import subprocess
import sys
import time

_WORKLOAD = """
import json, random, sys, time
import weilcalc
from weilcalc import _kernel_py
kernel = weilcalc.backend.kernel

rng = random.Random(1234)
def rand_terms(n_terms, nvars=3):
    t = {}
    for _ in range(n_terms):
        e = tuple(rng.randint(0, 4) for _ in range(nvars))
        num = rng.randint(-9, 9)
        if num:
            t[e] = _kernel_py.rnorm(num, rng.randint(1, 7))
    return t

a, b = rand_terms(30), rand_terms(30)
t0 = time.perf_counter()
for _ in range(REPEAT * 600):
    kernel.pmul(a, b)
t_mul = time.perf_counter() - t0

from weilcalc import build_fixture, random_cochain, delta, curvature
fix = weilcalc.build_fixture("F2_semisimple_2d")
cochains = [random_cochain(fix.A, fix.rep, 2, 2, 1, seed=s) for s in range(4)]
t0 = time.perf_counter()
for _ in range(REPEAT):
    for c in cochains:
        delta(fix.A, fix.rep, delta(fix.A, fix.rep, c))
t_delta = time.perf_counter() - t0

t0 = time.perf_counter()
for _ in range(REPEAT * 3):
    weilcalc.curvature(fix.imc)
t_curv = time.perf_counter() - t0

print(json.dumps({"backend": weilcalc.BACKEND_NAME,
                  "pmul_30x30": t_mul, "delta_squared_F2": t_delta,
                  "curvature_F2": t_curv}))
"""


def run_backend(backend, repeat):
    env = dict(os.environ, WEILCALC_BACKEND=backend)
    code = _WORKLOAD.replace("REPEAT", str(repeat))
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(f"backend {backend!r} failed:\n{out.stderr}")
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    results = []
    for backend in ("py", "c"):
        try:
            results.append(run_backend(backend, args.repeat))
        except RuntimeError as exc:
            print(f"skipping backend {backend}: {exc}", file=sys.stderr)
    if not results:
        return 1
    keys = [k for k in results[0] if k != "backend"]
    width = max(len(k) for k in keys) + 2
    header = "workload".ljust(width) + "".join(r["backend"].rjust(12) for r in results)
    if len(results) == 2:
        header += "speedup".rjust(12)
    print(header)
    for k in keys:
        line = k.ljust(width) + "".join(f"{r[k]:10.3f}s" for r in results)
        if len(results) == 2 and results[1][k] > 0:
            line += f"{results[0][k] / results[1][k]:11.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
