"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 18] [--repeat 5]

Both versions are imported side by side from ``qsatsim.kernels`` (the
``_nb``/``_np`` pairs), so no environment flag is needed here. Outputs are
checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from qsatsim import kernels
from qsatsim.sat import EnsembleParams, generate_instance


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(n, seed):
    inst = generate_instance(EnsembleParams.from_mu(n, 3, 4.25), seed)
    vm, nm = inst.masks
    table = kernels.cost_table_np(n, vm, nm)
    rng = np.random.default_rng(seed)
    psi = (rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)) / 2 ** (n / 2 + 0.5)
    phase = np.exp(1j * np.pi * 0.3 * np.arange(inst.m + 1))
    v, neg = inst.arrays
    ptr, occ_c, occ_neg = inst.occurrences
    start = rng.integers(0, 2, n, dtype=np.uint8)
    uniforms = rng.random(2 * n)

    def gsat(fn):
        return lambda: fn(v, neg, ptr, occ_c, occ_neg, start.copy(), uniforms, 2 * n, False)

    return {
        "cost_table": (lambda f: lambda: f(n, vm, nm)),
        "fwht": (lambda f: lambda: f(psi.copy())),
        "mul_phase": (lambda f: lambda: f(psi.copy(), phase, table)),
        "cost_hist": (lambda f: lambda: f(psi, table, inst.m)),
        "gsat_descend_all": (lambda f: lambda: f(table, n, 3, False)),
        "gsat_try": gsat,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=18)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        raise SystemExit("numba unavailable or disabled; nothing to compare")
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<18}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, make in cases(args.n, args.seed).items():
        nb, np_ = kernels.KERNELS[name]
        make(nb)()  # compile
        a, b = make(nb)(), make(np_)()
        if a is not None and b is not None:
            ok = all(np.allclose(x, y) for x, y in zip(np.atleast_1d(a), np.atleast_1d(b))) \
                if isinstance(a, tuple) else np.allclose(a, b)
            if not ok:
                raise SystemExit(f"{name}: backends disagree")
        t_nb = best_of(make(nb), args.repeat)
        t_np = best_of(make(np_), args.repeat)
        print(f"{name:<18}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
