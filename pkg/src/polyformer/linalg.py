"""Dense matrix helpers: product, ReLU and the column-wise softmax.

Matrices are plain ``float64`` numpy arrays. Functions that take a single
matrix also accept a stack of them (leading batch axes), which is how the
network evaluators push many samples through at once.
"""
from __future__ import annotations

import numpy as np


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(
            f"matmul dimension mismatch: {a.shape} @ {b.shape} "
            f"(left has {a.shape[-1]} columns, right has {b.shape[-2]} rows)"
        )
    return a @ b


def relu(a) -> np.ndarray:
    return np.maximum(np.asarray(a, dtype=np.float64), 0.0)


def softmax_columns(a) -> np.ndarray:
    """Column-wise softmax with negated exponents.

    Entry ``(i, j)`` becomes ``exp(-a[i, j]) / sum_k exp(-a[k, j])``; every
    column of the result sums to one. The normaliser runs over all rows of
    the column.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"softmax_columns expects square matrices, got shape {a.shape}")
    z = -a
    z = z - z.max(axis=-2, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-2, keepdims=True)
