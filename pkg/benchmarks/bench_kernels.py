"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--n 256] [--repeat 5]

Prints per-kernel timings at the padded grid size used for the cubic
nonlinearity, then a full headline integration with each backend.
"""
import argparse
import timeit

import numpy as np

from dnls_torus import kernels
from dnls_torus.field import Field, make_grid
from dnls_torus.functionals import ProblemParams
from dnls_torus.solver import SolverConfig, integrate


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def kernel_cases(n, rng):
    m = 2 * n
    u = rng.normal(size=m) + 1j * rng.normal(size=m)
    v, k = u[:n].copy(), u[n:].copy()
    e = np.exp(-1j * rng.uniform(0, 6, size=n))
    ks = [rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(4)]
    wn = make_grid(n).wavenumbers
    return {
        "power_nonlinearity p=3": lambda b: b.power_nonlinearity(u, 3.0),
        "power_nonlinearity p=2.5": lambda b: b.power_nonlinearity(u, 2.5),
        "if_stage": lambda b: b.if_stage(e, v, e, k, 0.01),
        "ifrk4_update": lambda b: b.ifrk4_update(v, *ks, e, e, 0.01),
        "inverse_k_energy": lambda b: b.inverse_k_energy(v, wn),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = {"python": kernels.get_backend("python")}
    if kernels.compiled_available():
        backends["cython"] = kernels.get_backend("cython")
    else:
        print("compiled extension not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    cases = kernel_cases(args.n, rng)
    names = list(backends)
    print(f"{'kernel (n=%d)' % args.n:<28}" + "".join(f"{b:>14}" for b in names)
          + ("       speedup" if len(names) == 2 else ""))
    for label, fn in cases.items():
        times = [best_of(lambda b=backends[b]: fn(b), args.repeat, 2000) for b in names]
        row = f"{label:<28}" + "".join(f"{t * 1e6:>11.2f} us" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>13.2f}x"
        print(row)

    grid = make_grid(args.n)
    cfg = SolverConfig(dt_init=1e-3, dt_min=1e-12, t_max=25.0, sample_interval=1e-3)
    params = ProblemParams(3, 1)
    print()
    for b in names:
        def run(b=b):
            integrate(Field.mode(grid, 1), params, cfg, keep_states=False, backend=backends[b])
        t = best_of(run, max(1, args.repeat // 2), 1)
        print(f"headline integrate ({b}): {t:.3f} s")


if __name__ == "__main__":
    main()
