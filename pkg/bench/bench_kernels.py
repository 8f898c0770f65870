"""Compare the compiled kernels against the numpy fallback.

    python bench/bench_kernels.py [--repeat 5]

Reports the best wall time per kernel for each backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from tiltgap import _backend


def cases(k=10, n=6, m=4, seed=0):
    rng = np.random.default_rng(seed)
    loss = rng.uniform(0, 5, (m, k))
    pz = rng.dirichlet(np.ones(k))
    log_q = np.log(np.full(m, 1.0 / m))
    py = _backend.python_kernels
    risk = py.risk_table(loss, n)
    table, _ = py.gibbs_table(risk, log_q, 1.0)
    weights = py.product_weights(pz, n)
    marginal, _ = py.audit_sums(table, weights, risk, loss @ pz)
    small_p = rng.dirichlet(np.ones(8))
    small_q = rng.dirichlet(np.ones(8))
    row = rng.uniform(0, 5, 8)

    def many_small(kern):
        for _ in range(2000):
            kern.kl_sum(small_p, small_q)
            kern.log_partition(small_q, row, 0.7)

    return {
        f"risk_table k={k} n={n} m={m}": lambda kern: kern.risk_table(loss, n),
        f"product_weights k={k} n={n}": lambda kern: kern.product_weights(pz, n),
        f"gibbs_table {k**n}x{m}": lambda kern: kern.gibbs_table(risk, log_q, 1.0),
        f"audit_sums {k**n}x{m}": lambda kern: kern.audit_sums(table, weights, risk, loss @ pz),
        f"info_sums {k**n}x{m}": lambda kern: kern.info_sums(table, weights, marginal),
        "2000 x (kl_sum + log_partition), k=8": many_small,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _backend.python_kernels}
    if _backend.compiled_kernels is not None:
        backends["cython"] = _backend.compiled_kernels
    else:
        print("compiled extension not built; timing the fallback only")
    width = 40
    print(f"{'kernel':<{width}}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        best = {b: min(timeit.repeat(lambda: fn(kern), number=1, repeat=args.repeat))
                for b, kern in backends.items()}
        cells = "".join(f"{best[b] * 1e3:>10.2f}ms" for b in backends)
        speed = f"{best['python'] / best['cython']:>9.1f}x" if "cython" in best else ""
        print(f"{name:<{width}}{cells}{speed}")


if __name__ == "__main__":
    main()
