"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--size 1e7] [--repeat 3]

Each kernel is run once to trigger compilation, then timed ``--repeat``
times; the best time is reported along with the max abs difference between
the two variants' outputs.
"""

import argparse
import time

import numpy as np

from multsums import kernels
from multsums._accel import HAVE_NUMBA
from multsums.multfun import moebius, tau_k


def best_of(fn, repeat):
    fn()  # warm-up / compile
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n):
    spf = kernels.spf_sieve(n)
    primes = np.flatnonzero(spf[: n + 1] == np.arange(n + 1)).astype(np.int64)
    primes = primes[primes >= 2]
    amax = int(np.log2(n))
    mu_tab = moebius().table(primes, amax)
    tau_tab = tau_k(3).table(primes, amax)
    mu = kernels.mult_eval(spf, primes, mu_tab)
    small = max(10**5, n // 100)
    F = kernels.mult_eval(spf[: small + 1], primes[primes <= small], tau_tab[: np.searchsorted(primes, small, "right")])
    logs = np.log(np.arange(1, 2001, dtype=np.float64))
    w = mu[1:2001].copy()
    ts = np.linspace(-50, 50, 2001)
    ds = np.array([d for d in range(1, 2000) if mu[d] != 0], dtype=np.int64)
    ws = mu[ds].real.astype(np.int64)
    return {
        "spf_sieve": (lambda k: (lambda: k(n)), (kernels._spf_sieve_nb, kernels._spf_sieve_np)),
        "mult_eval": (lambda k: (lambda: k(spf, primes, mu_tab)), (kernels._mult_eval_nb, kernels._mult_eval_np)),
        "convolve": (lambda k: (lambda: k(F, F)), (kernels._convolve_nb, kernels._convolve_np)),
        "dirichlet_sum": (lambda k: (lambda: k(mu, 1.0, 5.0, n)), (kernels._dirichlet_sum_nb, kernels._dirichlet_sum_np)),
        "sparse_poly": (lambda k: (lambda: k(w, logs, 1.0, ts)), (kernels._sparse_poly_nb, kernels._sparse_poly_np)),
        "log_moments": (lambda k: (lambda: k(mu, 1 / 50, int(np.log(n) * 50) + 1, 18)),
                        (kernels._log_moments_nb, kernels._log_moments_np)),
        "divisor_scatter": (lambda k: (lambda: k(ds, ws, n // 10)), (kernels._divisor_scatter_nb, kernels._divisor_scatter_np)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=float, default=1e7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    n = int(args.size)
    if not HAVE_NUMBA:
        print("numba unavailable (or MULTSUMS_PURE_NUMPY set); numba column runs uncompiled")
    print(f"{'kernel':<16}{'numba s':>12}{'numpy s':>12}{'speedup':>10}{'max diff':>12}")
    for name, (bind, (nb, npv)) in cases(n).items():
        t_nb, o_nb = best_of(bind(nb), args.repeat)
        t_np, o_np = best_of(bind(npv), args.repeat)
        diff = float(np.max(np.abs(np.asarray(o_nb) - np.asarray(o_np))))
        print(f"{name:<16}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
