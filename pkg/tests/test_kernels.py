"""The numba kernels and their numpy fallbacks must agree."""
import itertools
import os
import subprocess
import sys

import numpy as np
import pytest

from polyformer import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def brute_injective(v):
    batch, r, n = v.shape
    out = np.zeros(batch)
    for sigma in itertools.permutations(range(n), r):
        out += np.prod([v[:, i, sigma[i]] for i in range(r)], axis=0) if r else 1.0
    return out


class TestInjectiveProductSum:
    @pytest.mark.parametrize("r,n", [(0, 3), (1, 4), (2, 4), (3, 5), (4, 4), (5, 3)])
    def test_numpy_vs_brute(self, r, n):
        v = np.random.default_rng(r * 10 + n).random((7, r, n))
        expect = brute_injective(v) if r <= n else np.zeros(7)
        np.testing.assert_allclose(_kernels.injective_product_sum_numpy(v), expect, rtol=1e-12)

    @needs_numba
    @pytest.mark.parametrize("r,n", [(0, 2), (1, 5), (2, 3), (3, 6), (6, 6), (4, 2)])
    def test_numba_vs_numpy(self, r, n):
        v = np.random.default_rng(r + 7 * n).random((9, r, n))
        np.testing.assert_allclose(
            _kernels.injective_product_sum_numba(v), _kernels.injective_product_sum_numpy(v), rtol=1e-12
        )


class TestEvalTerms:
    @needs_numba
    def test_numba_vs_numpy(self):
        rng = np.random.default_rng(0)
        x = rng.random((40, 6))
        exps = rng.integers(0, 4, size=(15, 6))
        coefs = rng.normal(size=15)
        np.testing.assert_allclose(
            _kernels.eval_terms_numba(x, exps, coefs), _kernels.eval_terms_numpy(x, exps, coefs), rtol=1e-12
        )

    def test_empty(self):
        out = _kernels.eval_terms(np.ones((3, 2)), np.zeros((0, 2), dtype=np.int64), np.zeros(0))
        np.testing.assert_array_equal(out, 0.0)


class TestSawtooth:
    @needs_numba
    @pytest.mark.parametrize("k", [1, 2, 5, 9])
    def test_numba_vs_numpy(self, k):
        x = np.linspace(0, 1, 2 ** (k + 3) + 1)
        np.testing.assert_allclose(
            _kernels.sawtooth_closed_numba(k, x), _kernels.sawtooth_closed_numpy(k, x), atol=1e-15
        )


def test_env_flag_selects_numpy():
    code = "from polyformer import _kernels; print(_kernels.backend())"
    env = dict(os.environ, POLYFORMER_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
