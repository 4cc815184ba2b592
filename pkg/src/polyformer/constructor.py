"""Compile a column-symmetric polynomial into explicit Transformer weights.

Pipeline, each stage acting on a ``D x (n+1)`` state whose top-left
``d x n`` block holds the input matrix and whose last column starts at 0:

1. monomial bank: a per-column ReLU network appending approximations of
   every monomial ``x^p`` (``1 <= |p| <= s``) below the inputs, built from
   clamped product gadgets and embedded block by block;
2. summation attention: one attention layer with zero logits that writes
   the row sums of the first ``n`` columns into the last column, turning
   ``x^p`` rows into rank-1 sums ``m_p``;
3. rank recursion: per-column ReLU network forming rank ``r+1`` sums from
   rank ``r`` ones through ``m_{t,q} = m_t m_q - sum_i m_{t with t_i + q}``,
   clamping every new value to ``[0, P(n, r+1)]``;
4. readout: a final affine row holding ``sum_t c_t m_t``; the constant term
   of the polynomial is the readout bias.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .combinatorics import (
    MultiIndex,
    RankTuple,
    canonical_tuple,
    enumerate_multi_indices,
    enumerate_rank_tuples,
    falling_factorial,
)
from .networks import (
    AttentionParams,
    Block,
    FeedForwardParams,
    FfnLayer,
    FfnNetwork,
    TransformerNetwork,
    affine_ffn,
    compose_ffn,
    concat_transformers,
    eval_transformer_column,
    identity_ff,
    inert_attention,
    identity_ffn,
    parallel_ffn,
    postcompose_affine,
    precompose_affine,
    size_report,
)
from .polyoracle import Polynomial, decompose, normalize_check
from .sawtooth import GadgetParams, build_clamped_product_ffn, build_product_ffn, product_width


@dataclass(frozen=True)
class BuildBudget:
    d: int
    n: int
    s: int
    N: int
    L: int

    def __post_init__(self):
        for name in ("d", "n", "s", "L"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")

    @property
    def gadget(self) -> GadgetParams:
        return GadgetParams(self.N, self.L)

    @property
    def unit_error(self) -> float:
        return float(self.N) ** -self.L

    # size bounds
    def bank_width_bound(self) -> int:
        return 12 * self.s * self.d ** self.s * self.N

    def bank_depth_bound(self) -> int:
        return (self.s - 1) * (self.L + 1)

    def rank1_width_bound(self) -> int:
        return self.bank_width_bound()

    def rank1_depth_bound(self) -> int:
        return (self.s - 1) * (self.L + 1) + 1

    def recursion_width_bound(self) -> int:
        return 12 * (2 * self.d) ** self.s * self.N

    def recursion_depth_bound(self) -> int:
        return (self.s - 1) * (self.L + 2)

    def theorem_width_bound(self) -> int:
        return 12 * (2 * self.d) ** self.s * self.N

    def theorem_depth_bound(self) -> int:
        return 2 * self.s * self.L + 3 * self.s

    # error bounds
    def bank_error_bound(self, j: int) -> float:
        return (j - 1) * self.unit_error

    def rank1_error_bound(self, p: MultiIndex) -> float:
        return self.n * (sum(p) - 1) * self.unit_error

    def recursion_error_bound(self, t: RankTuple) -> float:
        r = len(t)
        factor = falling_factorial(self.n + r - 1, r) * prod(sum(p) + 1 for p in t) - self.n ** r
        return factor * self.unit_error

    def theorem_error_bound(self, f_at_ones: float) -> float:
        return 8 ** self.s * self.unit_error * f_at_ones


@dataclass(frozen=True)
class RowMap:
    """State row of every tracked quantity (0-based)."""

    monomials: dict
    tuples: dict
    state_dim: int

    def input_rows(self, d: int) -> list[int]:
        return [self.monomials[tuple(int(i == j) for j in range(d))] for i in range(d)]

    def to_dict(self) -> dict:
        return {
            "state_dim": self.state_dim,
            "monomials": [{"p": list(p), "row": r} for p, r in self.monomials.items()],
            "tuples": [{"parts": [list(p) for p in t], "row": r} for t, r in self.tuples.items()],
        }


@dataclass(frozen=True)
class ReadOut:
    row: int
    column: int
    bias: float

    def to_dict(self) -> dict:
        return {"row": self.row, "column": self.column, "bias": self.bias}


# ---------------------------------------------------------------------------
# per-column ReLU networks
# ---------------------------------------------------------------------------

def _unit(d: int, i: int) -> MultiIndex:
    return tuple(int(j == i) for j in range(d))


def bank_job(p: MultiIndex) -> tuple[MultiIndex, int]:
    """Prefix monomial and variable index whose product gives ``x^p``."""
    i = next(j for j, e in enumerate(p) if e > 0)
    prefix = tuple(e - (j == i) for j, e in enumerate(p))
    return prefix, i


def recursion_job(t: RankTuple) -> tuple[RankTuple, MultiIndex, list[RankTuple]]:
    """Base tuple, extra part and merged tuples for a rank ``r+1`` tuple."""
    base, extra = t[:-1], t[-1]
    merged = []
    for i in range(len(base)):
        parts = list(base)
        parts[i] = tuple(a + b for a, b in zip(base[i], extra))
        merged.append(canonical_tuple(parts))
    return base, extra, merged


def _round_sizes(live: int, jobs: int, job_width: int, width_limit: int | None) -> list[int]:
    """Split ``jobs`` into rounds whose widest layer ``live + J * job_width`` fits the limit."""
    if width_limit is None:
        return [jobs] if jobs else []
    sizes = []
    remaining = jobs
    while remaining:
        fit = (width_limit - live) // job_width
        if fit < 1:
            raise ValueError(
                f"width limit {width_limit} cannot hold a single gadget of width {job_width} "
                f"next to {live} carried rows"
            )
        take = min(fit, remaining)
        sizes.append(take)
        remaining -= take
        live += take
    return sizes


def _selection(rows: int, picks: list[tuple[int, float]]) -> np.ndarray:
    out = np.zeros((len(picks), rows))
    for q, (row, scale) in enumerate(picks):
        out[q, row] = scale
    return out


@dataclass(frozen=True)
class StagedFfn:
    """A per-column network plus the order of the quantities it outputs."""

    net: FfnNetwork
    outputs: list
    rounds: list = field(default_factory=list)


def build_bank_ffn(b: BuildBudget, width_limit: int | None = None) -> StagedFfn:
    """Input: the ``d`` entries of a column. Output: every ``x^p`` in graded order."""
    d, s = b.d, b.s
    monomials = enumerate_multi_indices(d, s)
    hprod = build_clamped_product_ffn(b.gadget)
    live = [m for m in monomials if sum(m) == 1]
    stages: list[FfnNetwork] = []
    rounds = []
    for j in range(2, s + 1):
        todo = [m for m in monomials if sum(m) == j]
        for size in _round_sizes(len(live), len(todo), product_width(b.gadget), width_limit):
            batch, todo = todo[:size], todo[size:]
            pos = {m: r for r, m in enumerate(live)}
            picks = [(r, 1.0) for r in range(len(live))]
            for m in batch:
                prefix, i = bank_job(m)
                picks += [(pos[prefix], 1.0), (pos[_unit(d, i)], 1.0)]
            body = parallel_ffn([identity_ffn(len(live), b.L + 1)] + [hprod] * len(batch))
            stages.append(precompose_affine(body, _selection(len(live), picks)))
            rounds.append({"degree": j, "jobs": len(batch), "carried": len(live)})
            live = live + batch
    net = identity_ffn(d, 0)
    for stage in stages:
        net = compose_ffn(net, stage)
    return StagedFfn(net, live, rounds)


def _clamp_ffn(ceiling: float) -> FfnNetwork:
    """``ReLU(v) - ReLU(v - ceiling)``: clips a scalar to ``[0, ceiling]``."""
    return FfnNetwork((
        FfnLayer(np.array([[1.0], [1.0]]), np.array([0.0, -ceiling])),
        FfnLayer(np.array([[1.0, -1.0]]), np.zeros(1)),
    ))


def build_recursion_ffn(b: BuildBudget, width_limit: int | None = None) -> StagedFfn:
    """Input: rank-1 values ``m_p`` in bank order. Output: every basis tuple's value."""
    n, s = b.n, b.s
    tuples = enumerate_rank_tuples(b.d, s)
    gprod = build_product_ffn(b.gadget)
    live: list[RankTuple] = [t for t in tuples if len(t) == 1]
    net = identity_ffn(len(live), 0)
    rounds = []
    for r in range(1, s):
        todo = [t for t in tuples if len(t) == r + 1]
        p_r = falling_factorial(n, r)
        p_next = falling_factorial(n, r + 1)
        base_scale = 1.0 / p_r if p_r else 0.0
        for size in _round_sizes(len(live), len(todo), product_width(b.gadget), width_limit):
            batch, todo = todo[:size], todo[size:]
            width = len(live)
            pos = {t: q for q, t in enumerate(live)}
            picks = [(q, 1.0) for q in range(width)]
            combine = np.zeros((width + len(batch), width + len(batch)))
            combine[:width, :width] = np.eye(width)
            for q, t in enumerate(batch):
                base, extra, merged = recursion_job(t)
                picks += [(pos[base], base_scale), (pos[(extra,)], 1.0 / n)]
                combine[width + q, width + q] = n * p_r
                for m in merged:
                    combine[width + q, pos[m]] -= 1.0
            body = parallel_ffn([identity_ffn(width, b.L)] + [gprod] * len(batch))
            stage = precompose_affine(body, _selection(width, picks))
            stage = postcompose_affine(stage, combine)
            clamp = parallel_ffn([identity_ffn(width, 1)] + [_clamp_ffn(float(p_next))] * len(batch))
            net = compose_ffn(net, compose_ffn(stage, clamp))
            rounds.append({"rank": r + 1, "jobs": len(batch), "carried": width})
            live = live + batch
    return StagedFfn(net, live, rounds)


# ---------------------------------------------------------------------------
# embedding per-column networks into Transformer blocks
# ---------------------------------------------------------------------------

def embed_ffn_in_transformer(f: FfnNetwork, layout: str = "doubled", state_dim: int | None = None) -> TransformerNetwork:
    """Transformer with inert attention that applies ``f`` to every column.

    Block ``t`` hides two groups of ReLU units: copies of the previous
    activation (all nonnegative, so the copies are exact) whose output
    weights subtract it from the state, and the next layer's activation,
    added into its rows. The input occupies the top ``f.input_dim`` rows;
    the output lands in the top ``f.output_dim`` rows.

    ``layout="doubled"`` alternates hidden activations between the top and
    bottom halves of a ``2W`` state (``W`` the widest vector of ``f``);
    ``"inplace"`` keeps everything at offset 0 in a ``W``-row state.
    Inputs and hidden values must be nonnegative.
    """
    dims = f.dims
    wide = max(dims)
    if layout == "doubled":
        need = 2 * wide
        offsets = [0 if t % 2 == 0 else wide for t in range(f.depth + 1)]
    elif layout == "inplace":
        need = wide
        offsets = [0] * (f.depth + 1)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    D = need if state_dim is None else state_dim
    if D < need:
        raise ValueError(f"state_dim {D} is smaller than the {need} rows the layout needs")
    attn = inert_attention(D)
    blocks = []
    for t in range(1, f.depth + 2) if f.depth == 0 else range(1, f.depth + 1):
        last = t == max(f.depth, 1)
        a, src = dims[t - 1], offsets[t - 1]
        layer_in = f.layers[t - 1]
        if f.depth == 0:
            new_units = 0
        else:
            new_units = layer_in.out_dim
        w1 = np.zeros((a + new_units, D))
        b1 = np.zeros(a + new_units)
        w2 = np.zeros((D, a + new_units))
        b2 = np.zeros(D)
        w1[:a, src:src + a] = np.eye(a)
        w2[src:src + a, :a] = -np.eye(a)
        if f.depth == 0:
            out = f.layers[0]
            w2[:out.out_dim, :a] += out.weight
            b2[:out.out_dim] += out.bias
        else:
            w1[a:, src:src + a] = layer_in.weight
            b1[a:] = layer_in.bias
            if last:
                out = f.layers[t]
                w2[:out.out_dim, a:] += out.weight
                b2[:out.out_dim] += out.bias
            else:
                dst = offsets[t]
                w2[dst:dst + new_units, a:] += np.eye(new_units)
        blocks.append(Block(attn, FeedForwardParams(w1, b1, w2, b2)))
    return TransformerNetwork(tuple(blocks), D)


def build_summation_attention(d_state: int, n: int) -> AttentionParams:
    """Zero logits and ``W_V = (n+1) I``: every column gains the row sums of the state.

    On an ``n+1``-column state whose last column is zero, that column ends up
    holding the sums of the first ``n`` columns.
    """
    eye = np.eye(d_state)
    zero = np.zeros((d_state, d_state))
    return AttentionParams(eye, (n + 1) * eye, zero, zero)


def _attention_block(D: int, n: int) -> TransformerNetwork:
    return TransformerNetwork((Block(build_summation_attention(D, n), identity_ff(D)),), D)


# ---------------------------------------------------------------------------
# staged Transformers
# ---------------------------------------------------------------------------

def _max_dim(net: FfnNetwork) -> int:
    return max(net.dims)


def pad_input(x, state_dim: int) -> np.ndarray:
    """Place ``X`` (``d x n`` or a stack) in the top-left of a zero ``state_dim x (n+1)`` state."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (2, 3):
        raise ValueError(f"expected a d x n matrix or a stack of them, got shape {x.shape}")
    if np.any(~(x >= 0.0) | ~(x <= 1.0)):
        raise ValueError("input entries must lie in [0, 1]")
    d, n = x.shape[-2:]
    if d > state_dim:
        raise ValueError(f"{d} input rows do not fit in a {state_dim}-row state")
    out = np.zeros(x.shape[:-2] + (state_dim, n + 1))
    out[..., :d, :n] = x
    return out


def check_input_layout(state, d: int, n: int) -> None:
    """Raise unless ``state`` is a padded input: data only in the top-left ``d x n`` block."""
    state = np.asarray(state, dtype=np.float64)
    if state.shape[-1] != n + 1:
        raise ValueError(f"expected {n + 1} columns, got {state.shape[-1]}")
    rest = state.copy()
    rest[..., :d, :n] = 0.0
    if np.any(rest):
        raise ValueError("input layout violation: nonzero entries outside the top-left d x n block")
    block = state[..., :d, :n]
    if np.any(block < 0) or np.any(block > 1):
        raise ValueError("input layout violation: entries outside [0, 1]")


def _rank1_rowmap(bank: StagedFfn, D: int) -> RowMap:
    monomials = {p: r for r, p in enumerate(bank.outputs)}
    return RowMap(monomials, {(p,): r for p, r in monomials.items()}, D)


def build_monomial_bank(b: BuildBudget, width_limit: int | None = None) -> tuple[FfnNetwork, RowMap]:
    bank = build_bank_ffn(b, width_limit)
    return bank.net, RowMap({p: r for r, p in enumerate(bank.outputs)}, {}, bank.net.output_dim)


def build_rank1_network(b: BuildBudget, state_dim: int | None = None,
                        width_limit: int | None = None) -> tuple[TransformerNetwork, RowMap]:
    """Bank blocks followed by the summation block; rank-1 sums land in column ``n``."""
    bank = build_bank_ffn(b, width_limit)
    D = state_dim or _max_dim(bank.net)
    parts = []
    if bank.net.depth:
        parts.append(embed_ffn_in_transformer(bank.net, "inplace", D))
    parts.append(_attention_block(D, b.n))
    return concat_transformers(*parts, fuse=False), _rank1_rowmap(bank, D)


def build_rank_recursion(b: BuildBudget, state_dim: int | None = None,
                         width_limit: int | None = None) -> tuple[TransformerNetwork, RowMap]:
    """Blocks turning rank-1 rows into every basis tuple's row."""
    rec = build_recursion_ffn(b, width_limit)
    bank_order = [t[0] for t in rec.outputs if len(t) == 1]
    D = state_dim or _max_dim(rec.net)
    net = embed_ffn_in_transformer(rec.net, "inplace", D)
    rows = RowMap({p: r for r, p in enumerate(bank_order)}, {t: r for r, t in enumerate(rec.outputs)}, D)
    return net, rows


def common_state_dim(b: BuildBudget, width_limit: int | None = None) -> int:
    """Rows needed to run the bank and the recursion (with a readout row) on one state."""
    bank = build_bank_ffn(b, width_limit)
    rec = build_recursion_ffn(b, width_limit)
    live = rec.net.output_dim
    with_readout = postcompose_affine(rec.net, np.vstack([np.eye(live), np.zeros((1, live))]))
    return max(_max_dim(bank.net), _max_dim(with_readout))


@dataclass(frozen=True)
class Theorem1Build:
    net: TransformerNetwork
    readout: ReadOut
    row_map: RowMap
    budget: BuildBudget
    coefficients: dict
    constant: float
    f_at_ones: float
    width_limit: int | None
    bank_rounds: list
    recursion_rounds: list

    @property
    def state_dim(self) -> int:
        return self.net.state_dim

    def pad(self, x) -> np.ndarray:
        return pad_input(x, self.state_dim)

    def evaluate(self, x):
        """Readout value ``TF(X)[row, column] + bias`` for one matrix or a stack."""
        col = eval_transformer_column(self.net, self.pad(x), self.readout.column)
        return col[..., self.readout.row] + self.readout.bias

    def manifest(self) -> dict:
        b = self.budget
        rep = size_report(self.net)
        return {
            "budget": {"d": b.d, "n": b.n, "s": b.s, "N": b.N, "L": b.L},
            "width_limit": self.width_limit,
            "readout": self.readout.to_dict(),
            "row_map": self.row_map.to_dict(),
            "coefficients": [
                {"parts": [list(p) for p in t], "value": float(c)} for t, c in self.coefficients.items()
            ],
            "f_at_ones": self.f_at_ones,
            "size": {"width": rep.width, "depth": rep.depth, "parameter_count": rep.parameter_count},
            "bounds": {
                "width": b.theorem_width_bound(),
                "depth": b.theorem_depth_bound(),
                "error": b.theorem_error_bound(self.f_at_ones),
            },
            "rounds": {"bank": self.bank_rounds, "recursion": self.recursion_rounds},
        }


def _coefficients(f: Polynomial, b: BuildBudget) -> tuple[dict, float]:
    coefs: dict = {}
    constant = 0.0
    for c, t in decompose(f):
        if t:
            coefs[t] = c
        else:
            constant = float(c)
    basis = set(enumerate_rank_tuples(b.d, b.s))
    extra = [t for t in coefs if t not in basis]
    if extra:
        raise ValueError(f"polynomial needs tuples beyond degree {b.s}: {extra[:3]}")
    return coefs, constant


def build_theorem1(f: Polynomial, b: BuildBudget, width_limit: int | None = None,
                   check_norm: bool = True) -> Theorem1Build:
    """Compile ``f`` into a Transformer; the readout approximates ``f(X)``."""
    if (f.d, f.n) != (b.d, b.n):
        raise ValueError(f"polynomial is {f.d}x{f.n} but the budget says {b.d}x{b.n}")
    if f.degree > b.s:
        raise ValueError(f"polynomial has degree {f.degree} > s = {b.s}")
    f_at_ones = normalize_check(f, strict=check_norm)
    coefs, constant = _coefficients(f, b)

    bank = build_bank_ffn(b, width_limit)
    rec = build_recursion_ffn(b, width_limit)
    weights = np.array([float(coefs.get(t, 0)) for t in rec.outputs])
    live = len(rec.outputs)
    readout_map = np.vstack([np.eye(live), weights[None, :]])
    rec_net = postcompose_affine(rec.net, readout_map)
    D = max(_max_dim(bank.net), _max_dim(rec_net))
    if width_limit is not None and D > width_limit:
        raise ValueError(f"state needs {D} rows, above the width limit {width_limit}")

    parts = []
    if bank.net.depth:
        parts.append(embed_ffn_in_transformer(bank.net, "inplace", D))
    parts.append(_attention_block(D, b.n))
    parts.append(embed_ffn_in_transformer(rec_net, "inplace", D))
    net = concat_transformers(*parts, fuse=True)

    rows = RowMap(
        {p: r for r, p in enumerate(bank.outputs)},
        {t: r for r, t in enumerate(rec.outputs)},
        D,
    )
    readout = ReadOut(row=live, column=b.n, bias=constant)
    return Theorem1Build(
        net, readout, rows, b, coefs, constant, f_at_ones, width_limit, bank.rounds, rec.rounds,
    )


def assemble_theorem1(f: Polynomial, b: BuildBudget, width_limit: int | None = None) -> tuple[TransformerNetwork, ReadOut]:
    build = build_theorem1(f, b, width_limit)
    return build.net, build.readout


# ---------------------------------------------------------------------------
# parameter-count comparison
# ---------------------------------------------------------------------------

def build_flat_ffn(b: BuildBudget, weights: dict | None = None) -> FfnNetwork:
    """A plain ReLU network over all ``d*n`` inputs doing the same job.

    It runs ``n`` copies of the monomial bank side by side, sums the copies
    with an affine map, then applies the rank recursion. Its size grows
    with ``n`` because every column needs its own bank.
    """
    bank = build_bank_ffn(b)
    rec = build_recursion_ffn(b)
    m = bank.net.output_dim
    copies = parallel_ffn([bank.net] * b.n)
    summed = postcompose_affine(copies, np.hstack([np.eye(m)] * b.n))
    net = compose_ffn(summed, rec.net)
    if weights is not None:
        w = np.array([float(weights.get(t, 0)) for t in rec.outputs])
        net = postcompose_affine(net, w[None, :])
    return net


def flat_ffn_parameter_count(b: BuildBudget) -> int:
    return size_report(build_flat_ffn(b)).parameter_count
