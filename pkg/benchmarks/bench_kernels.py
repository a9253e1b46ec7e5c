"""Benchmark the compiled kernel extension against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the three hot kernels (simplex projection, categorical sampling,
dataset checksum) at several constraint counts, plus one end-to-end solver
run per backend on a 10^4-constraint stub problem. Both backends produce
bitwise-identical results; this script reports only speed.
"""

import argparse
import time

import numpy as np

from dszog._kernels import load_backend


def best_of(repeats, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(repeats):
    backends = {name: load_backend(name) for name in ("python", "compiled")}
    if backends["compiled"] is None:
        print("compiled backend not built; showing python fallback only")
        del backends["compiled"]

    rng = np.random.default_rng(0)
    print(f"\n{'kernel':<28}{'size':>10}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    print("-" * (48 + 14 * len(backends) + 10))

    for m in (1_000, 10_000, 100_000):
        v = rng.uniform(-1.0, 1.0, size=m)
        times = {name: best_of(repeats, mod.simplex_project, v) for name, mod in backends.items()}
        _print_row("simplex_project", m, times)

    for m in (1_000, 10_000, 100_000):
        p = rng.dirichlet(np.ones(m))
        cum = np.cumsum(p)
        cum[-1] = 1.0
        u = rng.random(128)
        times = {name: best_of(repeats, mod.categorical_from_uniforms, cum, u) for name, mod in backends.items()}
        _print_row("categorical (k=128)", m, times)

    for size in (10_000, 1_000_000):
        data = rng.bytes(size)
        times = {name: best_of(max(1, repeats // 2), mod.fnv1a64, data) for name, mod in backends.items()}
        _print_row("fnv1a64 (bytes)", size, times)


def _print_row(kernel, size, times):
    cells = "".join(f"{times[name] * 1e6:>12.1f}us" for name in times)
    if len(times) == 2:
        py, comp = times["python"], times["compiled"]
        speedup = f"{py / comp:>9.2f}x"
    else:
        speedup = f"{'n/a':>10}"
    print(f"{kernel:<28}{size:>10}{cells}{speedup}")


_SOLVER_SNIPPET = """
import time

import numpy as np

from dszog import BlackBoxProblem, DszogConfig, dszog_solve
from dszog._kernels import BACKEND
from dszog.metrics import HiAcc

m, iters, repeats = {m}, 50, {repeats}
cfg = DszogConfig(mu=1e-3, q=2, batch_data=3, batch_cons_w=128, batch_cons_p=128,
                  max_iters=iters, metric_every=10**6, seed=0)
best = float("inf")
for rep in range(repeats + 1):
    problem = BlackBoxProblem(5, 3, m, lambda i, w: float(w.sum()),
                              lambda j, w: float(w[j % 5] - 1.0))
    start = time.perf_counter()
    dszog_solve(problem, cfg, np.zeros(5), hi_acc=HiAcc(q_big=1))
    if rep > 0:  # first pass is warmup
        best = min(best, (time.perf_counter() - start) / iters)
print(BACKEND, best)
"""


def bench_solver(repeats, m):
    """End-to-end iteration cost per backend, each in a fresh interpreter so
    the import-time backend selection is exercised for real."""
    import os
    import subprocess
    import sys

    snippet = _SOLVER_SNIPPET.format(repeats=max(3, repeats), m=m)
    results = {}
    for name in ("compiled", "python"):
        if load_backend(name) is None:
            continue
        env = dict(os.environ)
        env.pop("DSZOG_PURE_PYTHON", None)
        if name == "python":
            env["DSZOG_PURE_PYTHON"] = "1"
        proc = subprocess.run([sys.executable, "-c", snippet], env=env, capture_output=True, text=True, check=True)
        reported, per_iter = proc.stdout.split()
        assert reported == name, f"expected backend {name}, subprocess used {reported}"
        results[name] = float(per_iter)

    print(f"\nsolver iteration at m={m}, |M2|=|M3|=128:")
    for name, per_iter in results.items():
        print(f"  {name:<10} {per_iter * 1e3:8.3f} ms/iter")
    if len(results) == 2:
        print(f"  speedup    {results['python'] / results['compiled']:8.2f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    bench_kernels(args.repeats)
    # at m=1e4 the Python oracle calls dominate each iteration; at m=1e5 the
    # per-iteration simplex work is comparable and the compiled core shows
    bench_solver(args.repeats, m=10_000)
    bench_solver(args.repeats, m=100_000)
