"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from rankone_lyap import _pykernels
from rankone_lyap.ensemble import cost_matrix, make_rng, random_ensemble

try:
    from rankone_lyap import _kernels
except ImportError:
    _kernels = None


def cases():
    E = random_ensemble(4, 3, seed=0)
    S = np.ascontiguousarray(cost_matrix(E).sym)
    A = np.einsum("ki,kj->kij", E.U, E.V)
    rng = make_rng(1)
    idx = rng.integers(0, 4, size=(8, 20_000))
    Q = rng.dirichlet(np.ones(4), size=4)
    cum = np.cumsum(Q, axis=1)
    cum[:, -1] = 1.0
    starts = rng.integers(0, 4, size=8)
    u = rng.random((8, 20_000))
    p0 = np.full(4, 0.25)
    return {
        "grid_search n=4 k=100": lambda K: K.grid_search(S, 100),
        "projected_gradient n=4": lambda K: K.projected_gradient(S, p0, 10_000, 1e-10),
        "dense_products 8x20000 d=3": lambda K: K.dense_products(A, idx),
        "markov_paths 8x20000": lambda K: K.markov_paths(cum, starts, u),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'kernel':32s} {'python (s)':>12s} {'compiled (s)':>13s} {'speedup':>8s}")
    for name, fn in cases().items():
        py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:32s} {py:12.4f} {'-':>13s} {'-':>8s}")
            continue
        cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        print(f"{name:32s} {py:12.4f} {cy:13.4f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
