"""Explicit-weight ReLU feed-forward networks and single-head Transformers.

A :class:`FfnNetwork` is a chain of affine layers with a ReLU after every
layer but the last; its depth is the number of hidden layers (one less
than the number of affine maps) and its width the largest hidden size.

A :class:`TransformerNetwork` carries a ``state_dim x n`` matrix through a
sequence of blocks, each an attention layer followed by a residual
feed-forward layer. Depth is the number of blocks, width the state
dimension.

All evaluators accept either a single input or a batch stacked along a
leading axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import relu, softmax_columns


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if ndim == 1 and arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# feed-forward networks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FfnLayer:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weight, 2, "weight")
        b = _frozen(self.bias, 1, "bias")
        if w.shape[0] != b.shape[0]:
            raise ValueError(f"weight has {w.shape[0]} rows but bias has length {b.shape[0]}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class FfnNetwork:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("an FFN needs at least one affine layer")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise ValueError(
                    f"layer {i} outputs {layers[i].out_dim} values but layer {i + 1} "
                    f"expects {layers[i + 1].in_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    @property
    def hidden_dims(self) -> list[int]:
        return [layer.out_dim for layer in self.layers[:-1]]

    @property
    def dims(self) -> list[int]:
        """Every vector size along the chain: input, hidden layers, output."""
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    @property
    def width(self) -> int:
        return max(self.hidden_dims, default=self.output_dim)


def eval_ffn(net: FfnNetwork, x) -> np.ndarray:
    h = np.asarray(x, dtype=np.float64)
    if h.shape[-1] != net.input_dim:
        raise ValueError(f"FFN expects inputs of length {net.input_dim}, got {h.shape[-1]}")
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        h = h @ layer.weight.T + layer.bias
        if i < last:
            h = relu(h)
    return h


def identity_ffn(dim: int, depth: int = 0) -> FfnNetwork:
    """Identity map with ``depth`` hidden layers; exact on nonnegative inputs."""
    eye = np.eye(dim)
    zero = np.zeros(dim)
    return FfnNetwork(tuple(FfnLayer(eye, zero) for _ in range(depth + 1)))


def relu_ffn(dim: int) -> FfnNetwork:
    """Entrywise ReLU as a depth-1 network."""
    return identity_ffn(dim, 1)


def affine_ffn(weight, bias=None) -> FfnNetwork:
    weight = np.asarray(weight, dtype=np.float64)
    if bias is None:
        bias = np.zeros(weight.shape[0])
    return FfnNetwork((FfnLayer(weight, bias),))


def compose_ffn(f: FfnNetwork, g: FfnNetwork) -> FfnNetwork:
    """Network for ``g(f(x))`` with f's output map fused into g's input map."""
    if f.output_dim != g.input_dim:
        raise ValueError(f"cannot compose: f outputs {f.output_dim}, g expects {g.input_dim}")
    last, first = f.layers[-1], g.layers[0]
    fused = FfnLayer(first.weight @ last.weight, first.weight @ last.bias + first.bias)
    return FfnNetwork(f.layers[:-1] + (fused,) + g.layers[1:])


def precompose_affine(net: FfnNetwork, weight, bias=None) -> FfnNetwork:
    """Network for ``net(weight @ x + bias)``."""
    return compose_ffn(affine_ffn(weight, bias), net)


def postcompose_affine(net: FfnNetwork, weight, bias=None) -> FfnNetwork:
    """Network for ``weight @ net(x) + bias``."""
    return compose_ffn(net, affine_ffn(weight, bias))


def pad_depth(net: FfnNetwork, depth: int) -> FfnNetwork:
    """Deepen ``net`` with identity hidden layers.

    The extra layers repeat the first hidden layer, whose values are already
    nonnegative, so the function is unchanged. A depth-0 network has no
    hidden layer to repeat; its padding acts on the input, which must then
    be nonnegative.
    """
    if depth < net.depth:
        raise ValueError(f"cannot pad a depth-{net.depth} network down to depth {depth}")
    extra = depth - net.depth
    if extra == 0:
        return net
    if net.depth == 0:
        return compose_ffn(identity_ffn(net.input_dim, extra), net)
    dim = net.layers[0].out_dim
    eye = FfnLayer(np.eye(dim), np.zeros(dim))
    return FfnNetwork(net.layers[:1] + (eye,) * extra + net.layers[1:])


def _block_diag(mats: Sequence[np.ndarray]) -> np.ndarray:
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def parallel_ffn(nets: Sequence[FfnNetwork]) -> FfnNetwork:
    """Stack networks side by side: inputs and outputs are concatenated."""
    nets = list(nets)
    if not nets:
        raise ValueError("parallel_ffn needs at least one network")
    if len(nets) == 1:
        return nets[0]
    depth = max(net.depth for net in nets)
    nets = [pad_depth(net, depth) for net in nets]
    layers = []
    for i in range(depth + 1):
        layers.append(FfnLayer(
            _block_diag([net.layers[i].weight for net in nets]),
            np.concatenate([net.layers[i].bias for net in nets]),
        ))
    return FfnNetwork(tuple(layers))


# ---------------------------------------------------------------------------
# transformers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttentionParams:
    w_o: np.ndarray
    w_v: np.ndarray
    w_k: np.ndarray
    w_q: np.ndarray
    inert: bool = field(init=False, repr=False, compare=False)
    zero_logits: bool = field(init=False, repr=False, compare=False)

    heads = 1

    def __post_init__(self):
        w_o = _frozen(self.w_o, 2, "w_o")
        d, m = w_o.shape
        for name in ("w_v", "w_k", "w_q"):
            w = _frozen(getattr(self, name), 2, name)
            if w.shape != (m, d):
                raise ValueError(f"{name} must be {m}x{d} to match w_o {d}x{m}, got {w.shape}")
            object.__setattr__(self, name, w)
        object.__setattr__(self, "w_o", w_o)
        object.__setattr__(self, "inert", not np.any(w_o))
        object.__setattr__(self, "zero_logits", not (np.any(self.w_k) and np.any(self.w_q)))

    @property
    def state_dim(self) -> int:
        return self.w_o.shape[0]

    @property
    def key_dim(self) -> int:
        return self.w_o.shape[1]

    @property
    def parameter_count(self) -> int:
        return 4 * self.w_o.size


@dataclass(frozen=True)
class FeedForwardParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        w1 = _frozen(self.w1, 2, "w1")
        b1 = _frozen(self.b1, 1, "b1")
        w2 = _frozen(self.w2, 2, "w2")
        b2 = _frozen(self.b2, 1, "b2")
        r, d = w1.shape
        if b1.shape != (r,) or w2.shape != (d, r) or b2.shape != (d,):
            raise ValueError(
                f"inconsistent feed-forward shapes: w1 {w1.shape}, b1 {b1.shape}, "
                f"w2 {w2.shape}, b2 {b2.shape}"
            )
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", b2)
        # state rows the layer reads and writes; the rest pass through untouched
        cols = np.flatnonzero(w1.any(axis=0))
        rows = np.flatnonzero(w2.any(axis=1))
        object.__setattr__(self, "_read", (cols, np.ascontiguousarray(w1[:, cols])))
        object.__setattr__(self, "_write", (rows, np.ascontiguousarray(w2[rows])))
        object.__setattr__(self, "_has_b2", bool(b2.any()))

    @property
    def state_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def inert(self) -> bool:
        return not (np.any(self.w2) or np.any(self.b2))

    @property
    def parameter_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size


class Block(NamedTuple):
    attn: AttentionParams
    ff: FeedForwardParams


@dataclass(frozen=True)
class TransformerNetwork:
    blocks: tuple
    state_dim: int

    def __post_init__(self):
        blocks = tuple(Block(*b) for b in self.blocks)
        for i, (attn, ff) in enumerate(blocks):
            if attn.state_dim != self.state_dim or ff.state_dim != self.state_dim:
                raise ValueError(
                    f"block {i} has state dims {attn.state_dim}/{ff.state_dim}, "
                    f"network state_dim is {self.state_dim}"
                )
        object.__setattr__(self, "blocks", blocks)

    @property
    def depth(self) -> int:
        return len(self.blocks)

    @property
    def width(self) -> int:
        return self.state_dim


@lru_cache(maxsize=64)
def inert_attention(state_dim: int, key_dim: int | None = None) -> AttentionParams:
    """Attention layer with ``w_o = 0``; it maps every input to itself.

    Cached: the parameters are read-only, so blocks can share one instance.
    """
    zero = np.zeros((state_dim, key_dim or state_dim))
    zero.setflags(write=False)
    return AttentionParams(zero, zero.T, zero.T, zero.T)


def identity_ff(state_dim: int) -> FeedForwardParams:
    return FeedForwardParams(
        np.zeros((1, state_dim)), np.zeros(1), np.zeros((state_dim, 1)), np.zeros(state_dim)
    )


def _check_state(x, state_dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2 or x.shape[-2] != state_dim:
        raise ValueError(f"expected a state with {state_dim} rows, got shape {x.shape}")
    return x


def eval_attention(p: AttentionParams, x) -> np.ndarray:
    x = _check_state(x, p.state_dim)
    if p.inert:
        return x.copy()
    values = _left_multiply(p.w_v, x)
    if p.zero_logits:
        n = x.shape[-1]
        logits = np.zeros(x.shape[:-2] + (n, n))
    else:
        logits = np.swapaxes(_left_multiply(p.w_k, x), -1, -2) @ _left_multiply(p.w_q, x)
    return x + _left_multiply(p.w_o, values @ softmax_columns(logits))


def _left_multiply(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``w @ x`` for a stack ``x``, done as one matrix product over all columns."""
    if x.ndim == 2:
        return w @ x
    shape = x.shape
    columns = int(np.prod(shape[:-2])) * shape[-1]
    flat = np.moveaxis(x, -2, 0).reshape(shape[-2], columns)
    out = (w @ flat).reshape((w.shape[0],) + shape[:-2] + shape[-1:])
    return np.moveaxis(out, 0, -2)


def eval_ff_layer(p: FeedForwardParams, x) -> np.ndarray:
    x = _check_state(x, p.state_dim)
    cols, w1 = p._read
    rows, w2 = p._write
    hidden = relu(_left_multiply(w1, x[..., cols, :]) + p.b1[:, None])
    out = x.copy()
    out[..., rows, :] += _left_multiply(w2, hidden)
    if p._has_b2:
        out += p.b2[:, None]
    return out


def eval_transformer(net: TransformerNetwork, x, trace: bool = False):
    """Apply every block in order; with ``trace`` also return each block's output."""
    h = _check_state(x, net.state_dim)
    states = []
    for attn, ff in net.blocks:
        h = eval_ff_layer(ff, eval_attention(attn, h))
        if trace:
            states.append(h)
    return (h, states) if trace else h


def eval_transformer_column(net: TransformerNetwork, x, column: int) -> np.ndarray:
    """Output column ``column`` of ``eval_transformer(net, x)``.

    Once no attention layer that mixes columns remains, the other columns
    cannot influence the result, so they are dropped from the computation.
    """
    h = _check_state(x, net.state_dim)
    active = [i for i, (attn, _) in enumerate(net.blocks) if not attn.inert]
    cut = active[-1] + 1 if active else 0
    for attn, ff in net.blocks[:cut]:
        h = eval_ff_layer(ff, eval_attention(attn, h))
    h = h[..., column:column + 1]
    for _, ff in net.blocks[cut:]:
        h = eval_ff_layer(ff, h)
    return h[..., 0]


def concat_transformers(*nets: TransformerNetwork, fuse: bool = True) -> TransformerNetwork:
    """Run networks one after another.

    With ``fuse``, a block whose feed-forward layer is the identity is merged
    with a following block whose attention is the identity.
    """
    nets = [net for net in nets if net.depth]
    if not nets:
        raise ValueError("nothing to concatenate")
    dim = nets[0].state_dim
    blocks: list[Block] = []
    for net in nets:
        if net.state_dim != dim:
            raise ValueError(f"state dims differ: {dim} vs {net.state_dim}")
        for blk in net.blocks:
            if fuse and blocks and blocks[-1].ff.inert and blk.attn.inert:
                blocks[-1] = Block(blocks[-1].attn, blk.ff)
            else:
                blocks.append(blk)
    return TransformerNetwork(tuple(blocks), dim)


# ---------------------------------------------------------------------------
# size accounting
# ---------------------------------------------------------------------------

class SizeReport(NamedTuple):
    width: int
    depth: int
    parameter_count: int


def size_report(net) -> SizeReport:
    if isinstance(net, FfnNetwork):
        params = sum(layer.weight.size + layer.bias.size for layer in net.layers)
        return SizeReport(net.width, net.depth, params)
    if isinstance(net, TransformerNetwork):
        params = sum(a.parameter_count + f.parameter_count for a, f in net.blocks)
        return SizeReport(net.width, net.depth, params)
    raise TypeError(f"no size report for {type(net).__name__}")
