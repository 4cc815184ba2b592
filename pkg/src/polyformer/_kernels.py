"""Inner loops of the polynomial oracle and the sawtooth reference.

Each kernel has a numba-compiled implementation and a pure-numpy one with
identical semantics. The numba path is used when numba imports and the
environment variable ``POLYFORMER_DISABLE_NUMBA`` is unset (or falsy).
"""
from __future__ import annotations

import itertools
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    flag = os.environ.get("POLYFORMER_DISABLE_NUMBA", "")
    return flag.strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


# ---------------------------------------------------------------------------
# sum over injective maps  {0..r-1} -> {0..n-1}  of  prod_i v[b, i, sigma(i)]
# ---------------------------------------------------------------------------

def injective_product_sum_numpy(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    batch, r, n = v.shape
    if r > n:
        return np.zeros(batch)
    if r == 0:
        return np.ones(batch)
    idx = np.array(list(itertools.permutations(range(n), r)), dtype=np.int64)
    prod = np.ones((batch, idx.shape[0]))
    for i in range(r):
        prod *= v[:, i, idx[:, i]]
    return prod.sum(axis=1)


if HAVE_NUMBA:

    @njit(cache=True)
    def injective_product_sum_numba(v):
        batch, r, n = v.shape
        out = np.zeros(batch)
        if r > n:
            return out
        if r == 0:
            out[:] = 1.0
            return out
        choice = np.empty(r, np.int64)
        used = np.zeros(n, np.bool_)
        partial = np.empty(r + 1)
        for b in range(batch):
            total = 0.0
            depth = 0
            choice[0] = -1
            partial[0] = 1.0
            while depth >= 0:
                c = choice[depth]
                if c >= 0:
                    used[c] = False
                c += 1
                while c < n and used[c]:
                    c += 1
                if c == n:
                    depth -= 1
                    continue
                choice[depth] = c
                used[c] = True
                p = partial[depth] * v[b, depth, c]
                if depth == r - 1:
                    total += p
                else:
                    partial[depth + 1] = p
                    depth += 1
                    choice[depth] = -1
            out[b] = total
        return out

else:  # pragma: no cover
    injective_product_sum_numba = None


# ---------------------------------------------------------------------------
# polynomial term evaluation:  out[b] = sum_t coefs[t] * prod_m x[b, m]**exps[t, m]
# ---------------------------------------------------------------------------

def eval_terms_numpy(x: np.ndarray, exps: np.ndarray, coefs: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if exps.shape[0] == 0:
        return np.zeros(x.shape[0])
    powers = np.ones((x.shape[0], exps.shape[0]))
    for m in range(exps.shape[1]):
        col = exps[:, m]
        if col.any():
            powers *= x[:, m][:, None] ** col[None, :]
    return powers @ coefs


if HAVE_NUMBA:

    @njit(cache=True)
    def eval_terms_numba(x, exps, coefs):
        batch = x.shape[0]
        nterms, nvars = exps.shape
        out = np.zeros(batch)
        for b in range(batch):
            acc = 0.0
            for t in range(nterms):
                p = coefs[t]
                for m in range(nvars):
                    e = exps[t, m]
                    for _ in range(e):
                        p *= x[b, m]
                acc += p
            out[b] = acc
        return out

else:  # pragma: no cover
    eval_terms_numba = None


# ---------------------------------------------------------------------------
# closed-form sawtooth  T_k(x) = T_1(2^{k-1} (x - i / 2^{k-1}))
# ---------------------------------------------------------------------------

def sawtooth_closed_numpy(k: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    scale = float(2 ** (k - 1))
    seg = np.clip(np.floor(x * scale), 0, 2 ** (k - 1) - 1)
    u = scale * x - seg
    return np.where(u <= 0.5, 2.0 * u, 2.0 * (1.0 - u))


if HAVE_NUMBA:

    @njit(cache=True)
    def sawtooth_closed_numba(k, x):
        out = np.empty_like(x)
        scale = 2.0 ** (k - 1)
        top = 2 ** (k - 1) - 1
        for idx in range(x.size):
            seg = np.floor(x.flat[idx] * scale)
            if seg < 0:
                seg = 0.0
            elif seg > top:
                seg = float(top)
            u = scale * x.flat[idx] - seg
            out.flat[idx] = 2.0 * u if u <= 0.5 else 2.0 * (1.0 - u)
        return out

else:  # pragma: no cover
    sawtooth_closed_numba = None


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def injective_product_sum(v):
    v = np.ascontiguousarray(v, dtype=np.float64)
    if USE_NUMBA:
        return injective_product_sum_numba(v)
    return injective_product_sum_numpy(v)


def eval_terms(x, exps, coefs):
    x = np.ascontiguousarray(x, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    coefs = np.ascontiguousarray(coefs, dtype=np.float64)
    if USE_NUMBA:
        return eval_terms_numba(x, exps, coefs)
    return eval_terms_numpy(x, exps, coefs)


def sawtooth_closed(k, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    if USE_NUMBA:
        return sawtooth_closed_numba(int(k), x)
    return sawtooth_closed_numpy(int(k), x)
