"""Time the numba kernels against their numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeat R]
"""
import argparse
import timeit

import numpy as np

from polyformer import _kernels


def cases(rng):
    v = rng.random((2000, 3, 6))
    x = rng.random((5000, 6))
    exps = rng.integers(0, 4, size=(40, 6))
    coefs = rng.normal(size=40)
    grid = np.linspace(0.0, 1.0, 200_001)
    return {
        "injective_product_sum (B=2000, r=3, n=6)": (
            lambda: _kernels.injective_product_sum_numpy(v),
            lambda: _kernels.injective_product_sum_numba(v),
        ),
        "eval_terms (B=5000, 40 terms)": (
            lambda: _kernels.eval_terms_numpy(x, exps, coefs),
            lambda: _kernels.eval_terms_numba(x, exps, coefs),
        ),
        "sawtooth_closed (k=8, 200k points)": (
            lambda: _kernels.sawtooth_closed_numpy(8, grid),
            lambda: _kernels.sawtooth_closed_numba(8, grid),
        ),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, (np_fn, nb_fn) in cases(rng).items():
        t_np = min(timeit.repeat(np_fn, number=1, repeat=args.repeat)) * 1e3
        if _kernels.HAVE_NUMBA:
            nb_fn()  # compile outside the timed region
            np.testing.assert_allclose(nb_fn(), np_fn(), rtol=1e-10, atol=1e-12)
            t_nb = min(timeit.repeat(nb_fn, number=1, repeat=args.repeat)) * 1e3
            print(f"{name:44s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:44s} {t_np:10.2f} {'n/a':>10s} {'':>8s}")


if __name__ == "__main__":
    main()
