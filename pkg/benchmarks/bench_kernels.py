"""Time one SVRG epoch with the compiled and the numpy kernels.

Usage: python benchmarks/bench_kernels.py [--n 2000] [--d 50] [--K 10] [--repeat 5]
"""
import argparse
import time

import numpy as np

from macroauc import _backend
from macroauc.risk import Objective
from macroauc.synthetic import imbalanced


def epoch_args(obj, rng, m):
    X = np.ascontiguousarray(obj._X, dtype=np.float64)
    Ws = 0.01 * rng.standard_normal((obj.data.K, obj.data.d))
    mu = np.ascontiguousarray(obj.risk_gradient(Ws) + 2 * obj.lam * Ws)
    if obj.algorithm.value == "pa":
        ks, ps, qs = obj.sample(m, rng)
        return Ws, (Ws, mu, X, ks.astype(np.int64), ps.astype(np.int64), qs.astype(np.int64),
                    1e-3, obj.lam, obj.base.code)
    idx = obj.sample(m, rng).astype(np.int64)
    Y = np.ascontiguousarray(obj._Y)
    Cn = np.ascontiguousarray(obj.data.n * obj.instance_weights())
    return Ws, (Ws, mu, X, Y, Cn, np.ascontiguousarray(X @ Ws.T), idx, 1e-3, obj.lam, obj.base.code)


def bench(algo, n, d, K, repeat):
    obj = Objective(algo, 1e-2, "logistic2", imbalanced(n=n, d=d, K=K, seed=0))
    Ws, args = epoch_args(obj, np.random.default_rng(0), 2 * n)
    fn = "svrg_epoch_pairwise" if algo == "pa" else "svrg_epoch_univariate"
    out, times = {}, {}
    for name in ("python", "cython"):
        kern = getattr(_backend.get_kernels(name), fn)
        best = np.inf
        for _ in range(repeat):
            W = Ws.copy()
            t0 = time.perf_counter()
            kern(W, *args)
            best = min(best, time.perf_counter() - t0)
        out[name], times[name] = W, best
    diff = float(np.max(np.abs(out["python"] - out["cython"])))
    return times["python"], times["cython"], diff


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=50)
    ap.add_argument("--K", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args(argv)
    try:
        _backend.get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    print(f"n={a.n} d={a.d} K={a.K} inner=2n, best of {a.repeat}")
    print(f"{'algo':<5}{'python s':>12}{'cython s':>12}{'speedup':>10}{'max |dW|':>12}")
    for algo in ("pa", "u1", "u2"):
        tp, tc, diff = bench(algo, a.n, a.d, a.K, a.repeat)
        print(f"{algo:<5}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
