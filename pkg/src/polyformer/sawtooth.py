"""Sawtooth maps, the piecewise-linear square and the product gadgets.

``T_1`` is the tent map on [0, 1] and ``T_i`` its i-fold composition.
The square approximation ``x - sum_i T_i(x) / 4^i`` interpolates ``x^2``
at the dyadic points ``j / 2^k``; polarization turns three of them into an
approximate product.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .networks import (
    FfnLayer,
    FfnNetwork,
    compose_ffn,
    parallel_ffn,
    postcompose_affine,
    precompose_affine,
    relu_ffn,
)


@dataclass(frozen=True)
class GadgetParams:
    """Width budget ``N`` and depth budget ``L``; ``k`` satisfies 2^k <= N < 2^(k+1)."""

    n_width: int
    l_depth: int

    def __post_init__(self):
        if int(self.n_width) != self.n_width or self.n_width < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.n_width}")
        if int(self.l_depth) != self.l_depth or self.l_depth < 1:
            raise ValueError(f"L must be an integer >= 1, got {self.l_depth}")

    @property
    def k(self) -> int:
        return int(self.n_width).bit_length() - 1

    @property
    def order(self) -> int:
        """Index of the square approximation the gadgets realize (``L * k``)."""
        return self.l_depth * self.k


def _unit_interval(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x >= 0.0) | ~(x <= 1.0)):
        raise ValueError("sawtooth inputs must lie in [0, 1]")
    return x


def _check_order(i: int) -> int:
    if int(i) != i or i < 1:
        raise ValueError(f"sawtooth index must be a positive integer, got {i}")
    return int(i)


def tent(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x <= 0.5, 2.0 * x, 2.0 * (1.0 - x))


def sawtooth_exact(i: int, x):
    """``T_i(x)`` by applying the tent map ``i`` times."""
    i = _check_order(i)
    y = _unit_interval(x)
    for _ in range(i):
        y = tent(y)
    return y[()] if y.ndim == 0 else y


def sawtooth_closed_form(k: int, x):
    """``T_k(x)`` from the segment formula, no iteration."""
    k = _check_order(k)
    x = _unit_interval(x)
    out = _kernels.sawtooth_closed(k, np.atleast_1d(x)).reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def square_ref(k: int, x):
    """``x - sum_{i<=k} T_i(x) / 4^i``, built with ``T_{i+1} = T_1(T_i)``."""
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a nonnegative integer, got {k}")
    x = _unit_interval(x)
    acc = x.copy()
    t = x
    for i in range(1, int(k) + 1):
        t = tent(t)
        acc = acc - t / 4.0 ** i
    return acc[()] if acc.ndim == 0 else acc


def square_error_form(k: int, x):
    """``-(x - j/2^k)(x - (j+1)/2^k)`` on the segment of ``x``: the exact value of ``f_k(x) - x^2``."""
    x = _unit_interval(x)
    scale = 2.0 ** k
    j = np.clip(np.floor(x * scale), 0, scale - 1)
    return -(x - j / scale) * (x - (j + 1) / scale)


# ---------------------------------------------------------------------------
# network builders
# ---------------------------------------------------------------------------

def _sawtooth_units(i: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and output weights of the ``2^i`` ReLU units summing to ``T_i`` on [0, 1]."""
    count = 2 ** i
    offsets = np.arange(count) / count
    weights = np.where(np.arange(count) % 2 == 1, -2.0 ** (i + 1), 2.0 ** (i + 1))
    weights[0] = 2.0 ** i
    return offsets, weights


def build_square_ffn(p: GadgetParams) -> FfnNetwork:
    """Depth-``L`` network computing ``f_{Lk}`` on [0, 1].

    Every hidden layer holds the ReLU units of ``T_1..T_k`` evaluated at the
    current sawtooth input ``y`` plus one accumulator unit. Layer ``l``
    sees ``y = T_{(l-1)k}(x)`` and the accumulator ``f_{(l-1)k}(x)``; the
    next layer reads ``T_k(y)`` and the updated accumulator off these units.
    """
    k, depth = p.k, p.l_depth
    units = [_sawtooth_units(i) for i in range(1, k + 1)]
    offsets = np.concatenate([u[0] for u in units])
    width = offsets.size + 1
    acc = width - 1
    starts = np.cumsum([0] + [u[0].size for u in units])

    # readout rows: T_k(y) and the accumulator update, as functions of a hidden layer
    tk_row = np.zeros(width)
    tk_row[starts[k - 1]:starts[k]] = units[k - 1][1]

    def acc_row(layer: int) -> np.ndarray:
        row = np.zeros(width)
        row[acc] = 1.0
        for i in range(1, k + 1):
            row[starts[i - 1]:starts[i]] = -units[i - 1][1] / 4.0 ** ((layer - 1) * k + i)
        return row

    layers = []
    first_w = np.ones((width, 1))
    first_b = np.concatenate([-offsets, [0.0]])
    layers.append(FfnLayer(first_w, first_b))
    for layer in range(1, depth):
        w = np.empty((width, width))
        w[:acc] = tk_row
        w[acc] = acc_row(layer)
        layers.append(FfnLayer(w, first_b))
    layers.append(FfnLayer(acc_row(depth)[None, :], np.zeros(1)))
    return FfnNetwork(tuple(layers))


_POLARIZE_IN = np.array([[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]])
_POLARIZE_OUT = np.array([[2.0, -0.5, -0.5]])


def build_product_ffn(p: GadgetParams) -> FfnNetwork:
    """``2 f((x+y)/2) - f(x)/2 - f(y)/2`` with ``f = f_{Lk}``; width ``3(2^{k+1} - 1)``."""
    sq = build_square_ffn(p)
    net = parallel_ffn([sq, sq, sq])
    return postcompose_affine(precompose_affine(net, _POLARIZE_IN), _POLARIZE_OUT)


def build_clamped_product_ffn(p: GadgetParams) -> FfnNetwork:
    """ReLU of the product gadget; one layer deeper, output in [0, 1]."""
    return compose_ffn(build_product_ffn(p), relu_ffn(1))


def product_ref(p: GadgetParams, x, y):
    """Reference values of the product gadget from :func:`square_ref`."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k = p.order
    return 2.0 * square_ref(k, (x + y) / 2.0) - 0.5 * square_ref(k, x) - 0.5 * square_ref(k, y)


def square_width(p: GadgetParams) -> int:
    return 2 ** (p.k + 1) - 1


def product_width(p: GadgetParams) -> int:
    return 3 * square_width(p)
