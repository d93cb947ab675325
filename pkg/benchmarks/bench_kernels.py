"""Time the compiled clustering kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends are checked for identical outputs before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from crave.clustering import _pykernels

try:
    from crave.clustering import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(rng: np.random.Generator) -> dict[str, tuple]:
    X = rng.standard_normal((2000, 384))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    C = X[rng.choice(len(X), 8, replace=False)].copy()
    labels = rng.integers(0, 8, len(X)).astype(np.int64)
    small = X[:200]
    D = np.sqrt(np.maximum(_pykernels.pairwise_sq_euclidean(small), 0.0))
    return {
        "assign_labels n=2000 k=8": ("assign_labels", (X, C)),
        "update_centroids n=2000 k=8": ("update_centroids", (X, labels, 8)),
        "pairwise_sq_euclidean n=200": ("pairwise_sq_euclidean", (small,)),
        "average_linkage n=200": ("average_linkage", (D,)),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=0, atol=1e-9)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; only the numpy fallback is available")
        return
    cases = _cases(np.random.default_rng(args.seed))
    print(f"{'kernel':32} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, (fn, fargs) in cases.items():
        py, cy = getattr(_pykernels, fn), getattr(_ckernels, fn)
        if not _same(py(*fargs), cy(*fargs)):
            raise SystemExit(f"{name}: backends disagree")
        t_py = min(timeit.repeat(lambda: py(*fargs), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: cy(*fargs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:32} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
