"""Measure construction errors against the exact oracle and audit sizes.

Every claim compares a measured quantity with a bound. Error claims use a
maximum over a deterministic sample set, which bounds the true supremum
from below, so a violation is always a real construction defect.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .combinatorics import enumerate_multi_indices, enumerate_rank_tuples, falling_factorial
from .constructor import (
    BuildBudget,
    ReadOut,
    Theorem1Build,
    bank_job,
    build_bank_ffn,
    build_rank1_network,
    build_rank_recursion,
    build_theorem1,
    common_state_dim,
    flat_ffn_parameter_count,
    pad_input,
    recursion_job,
)
from .networks import (
    Block,
    FeedForwardParams,
    TransformerNetwork,
    concat_transformers,
    eval_ffn,
    eval_transformer_column,
    size_report,
)
from .polyoracle import Polynomial, eval_monomial_sym, eval_polynomial, normalize_check, recompose
from .sawtooth import product_ref

DEFAULT_SEED = 20240917
CSV_SCHEMA = "polyformer-sweep/1"
REPORT_SCHEMA = "polyformer-report/1"
FP_RELATIVE = 1e-9
EXACT_TOL = 1e-10
CHUNK = 256


def default_seed() -> int:
    env = os.environ.get("POLYFORMER_SEED")
    return int(env) if env not in (None, "") else DEFAULT_SEED


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sampler:
    """Deterministic sample sets in ``[0, 1]^{d x n}``.

    ``uniform`` draws ``count`` matrices and adds the all-zeros and all-ones
    corners, plus a ``resolution``-level grid over every entry when
    ``d * n`` is at most ``grid_max_entries``. ``grid`` is the full grid only.
    """

    kind: str = "uniform"
    count: int = 2000
    resolution: int = 3
    seed: int | None = None
    grid_max_entries: int = 6

    def __post_init__(self):
        if self.kind not in ("uniform", "grid"):
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.count < 0:
            raise ValueError("sample count must be nonnegative")

    @property
    def effective_seed(self) -> int:
        return default_seed() if self.seed is None else int(self.seed)

    def _grid(self, d: int, n: int) -> np.ndarray:
        levels = np.linspace(0.0, 1.0, self.resolution)
        pts = np.array(list(itertools.product(levels, repeat=d * n)))
        return pts.reshape(-1, d, n)

    def draw(self, d: int, n: int) -> np.ndarray:
        if self.kind == "grid":
            if self.resolution ** (d * n) > 2_000_000:
                raise ValueError("grid too large")
            return self._grid(d, n)
        rng = np.random.default_rng(self.effective_seed)
        parts = [rng.random((self.count, d, n)), np.zeros((1, d, n)), np.ones((1, d, n))]
        if d * n <= self.grid_max_entries:
            parts.append(self._grid(d, n))
        return np.concatenate(parts)


@dataclass(frozen=True)
class ErrorStats:
    max_abs_error: float
    argmax_point: np.ndarray
    sample_count: int


def _stats(errors: np.ndarray, points: np.ndarray) -> ErrorStats:
    i = int(np.argmax(errors))
    return ErrorStats(float(errors[i]), points[i], int(errors.size))


def _chunks(x: np.ndarray):
    for start in range(0, x.shape[0], CHUNK):
        yield x[start:start + CHUNK]


def readout_values(net: TransformerNetwork, readout: ReadOut, xs: np.ndarray) -> np.ndarray:
    out = []
    for chunk in _chunks(xs):
        col = eval_transformer_column(net, pad_input(chunk, net.state_dim), readout.column)
        out.append(col[:, readout.row] + readout.bias)
    return np.concatenate(out)


def last_column(net: TransformerNetwork, xs: np.ndarray) -> np.ndarray:
    """Final state of the last column for every sample, shape ``(B, state_dim)``."""
    n = xs.shape[-1]
    return np.concatenate([
        eval_transformer_column(net, pad_input(chunk, net.state_dim), n) for chunk in _chunks(xs)
    ])


def measure_error(net: TransformerNetwork, readout: ReadOut, f: Polynomial, s: Sampler) -> ErrorStats:
    xs = s.draw(f.d, f.n)
    if readout.column != f.n:
        raise ValueError(f"readout column {readout.column} does not match n = {f.n}")
    errors = np.abs(readout_values(net, readout, xs) - eval_polynomial(f, xs))
    return _stats(errors, xs)


# ---------------------------------------------------------------------------
# reference pipeline (no network code involved)
# ---------------------------------------------------------------------------

def _clamped_product(b: BuildBudget, x, y):
    return np.maximum(product_ref(b.gadget, x, y), 0.0)


def reference_pipeline(b: BuildBudget, xs: np.ndarray) -> dict:
    """Values every stage should carry, computed from the gadget formulas directly.

    Returns monomial values per column (``"bank"``), rank-1 sums and every
    higher tuple (``"tuples"``), and the range of all product-gadget inputs.
    """
    xs = np.asarray(xs, dtype=np.float64)
    lo, hi = np.inf, -np.inf

    def track(*vals):
        nonlocal lo, hi
        for v in vals:
            lo = min(lo, float(np.min(v)))
            hi = max(hi, float(np.max(v)))

    bank = {}
    for p in enumerate_multi_indices(b.d, b.s):
        if sum(p) == 1:
            bank[p] = xs[:, p.index(1), :]
        else:
            prefix, i = bank_job(p)
            a, c = bank[prefix], xs[:, i, :]
            track(a, c)
            bank[p] = _clamped_product(b, np.clip(a, 0, 1), c)
    tuples = {(p,): v.sum(axis=1) for p, v in bank.items()}
    for t in enumerate_rank_tuples(b.d, b.s):
        if len(t) == 1:
            continue
        r = len(t) - 1
        base, extra, merged = recursion_job(t)
        p_r, p_next = falling_factorial(b.n, r), falling_factorial(b.n, r + 1)
        a = tuples[base] / p_r if p_r else np.zeros(xs.shape[0])
        c = tuples[(extra,)] / b.n
        track(a, c)
        v = b.n * p_r * product_ref(b.gadget, np.clip(a, 0, 1), np.clip(c, 0, 1))
        for m in merged:
            v = v - tuples[m]
        tuples[t] = np.clip(v, 0.0, float(p_next))
    return {"bank": bank, "tuples": tuples, "gadget_input_range": (lo, hi)}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class Claim:
    claim_id: str
    bound: float
    measured: float
    kind: str = "error"
    tol: float = 0.0
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.measured < self.bound * (1 + FP_RELATIVE) + self.tol)

    def to_dict(self) -> dict:
        return {
            "id": self.claim_id,
            "kind": self.kind,
            "bound": self.bound,
            "measured": self.measured,
            "pass": self.passed,
        }


@dataclass
class SizeAudit:
    audit_id: str
    actual: int
    bound: int
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.actual <= self.bound

    def to_dict(self) -> dict:
        return {"id": self.audit_id, "actual": self.actual, "bound": self.bound, "pass": self.passed}


@dataclass
class BoundReport:
    claims: list = field(default_factory=list)
    sizes: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.claims) and all(a.passed for a in self.sizes)

    def failures(self) -> list:
        return [c for c in self.claims if not c.passed] + [a for a in self.sizes if not a.passed]

    def claim(self, claim_id: str) -> Claim:
        return next(c for c in self.claims if c.claim_id == claim_id)

    def extend(self, other: "BoundReport") -> None:
        self.claims.extend(other.claims)
        self.sizes.extend(other.sizes)
        self.info.update(other.info)

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "pass": self.passed,
            "info": self.info,
            "claims": [c.to_dict() for c in self.claims],
            "sizes": [a.to_dict() for a in self.sizes],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(t) -> str:
    return "(" + ",".join("".join(str(e) for e in p) for p in t) + ")"


def _max_err(values: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(values - exact))) if values.size else 0.0


def _scaled_tol(exact: np.ndarray) -> float:
    return EXACT_TOL * max(1.0, float(np.max(np.abs(exact))) if exact.size else 1.0)


# ---------------------------------------------------------------------------
# stage checks
# ---------------------------------------------------------------------------

def check_bank(b: BuildBudget, xs: np.ndarray, width_limit: int | None = None) -> BoundReport:
    staged = build_bank_ffn(b, width_limit)
    cols = np.swapaxes(xs, 1, 2).reshape(-1, b.d)
    out = np.concatenate([eval_ffn(staged.net, c) for c in np.array_split(cols, max(1, cols.shape[0] // 4096))])
    rep = BoundReport()
    for row, p in enumerate(staged.outputs):
        exact = np.prod(cols ** np.array(p), axis=1)
        j = sum(p)
        tol = _scaled_tol(exact) if j == 1 else 0.0
        rep.claims.append(Claim(f"bank.monomial{_fmt((p,))}", b.bank_error_bound(j), _max_err(out[:, row], exact), tol=tol))
    size = size_report(staged.net)
    rep.sizes += [
        SizeAudit("bank.width", size.width, b.bank_width_bound()),
        SizeAudit("bank.depth", size.depth, b.bank_depth_bound()),
    ]
    return rep


def check_rank1(b: BuildBudget, xs: np.ndarray, width_limit: int | None = None) -> BoundReport:
    net, rows = build_rank1_network(b, width_limit=width_limit)
    col = last_column(net, xs)
    rep = BoundReport()
    for p, row in rows.monomials.items():
        exact = eval_monomial_sym((p,), xs)
        tol = _scaled_tol(exact) if sum(p) == 1 else 0.0
        rep.claims.append(Claim(f"rank1.m{_fmt((p,))}", b.rank1_error_bound(p), _max_err(col[:, row], exact), tol=tol))
    size = size_report(net)
    rep.sizes += [
        SizeAudit("rank1.width", size.width, b.rank1_width_bound()),
        SizeAudit("rank1.depth", size.depth, b.rank1_depth_bound()),
    ]
    return rep


def check_recursion(b: BuildBudget, xs: np.ndarray, width_limit: int | None = None) -> BoundReport:
    D = common_state_dim(b, width_limit)
    first, _ = build_rank1_network(b, state_dim=D, width_limit=width_limit)
    rec, rows = build_rank_recursion(b, state_dim=D, width_limit=width_limit)
    col = last_column(concat_transformers(first, rec, fuse=False), xs)
    rep = BoundReport()
    worst_clamp = 0.0
    for t, row in rows.tuples.items():
        if len(t) == 1:
            continue
        exact = eval_monomial_sym(t, xs)
        rep.claims.append(Claim(f"recursion.m{_fmt(t)}", b.recursion_error_bound(t), _max_err(col[:, row], exact)))
        ceiling = falling_factorial(b.n, len(t))
        worst_clamp = max(worst_clamp, float(np.max(np.maximum(-col[:, row], col[:, row] - ceiling))))
    rep.claims.append(Claim("recursion.clamp_range", 0.0, worst_clamp, kind="exact", tol=EXACT_TOL))
    size = size_report(rec)
    rep.sizes += [
        SizeAudit("recursion.width", size.width, b.recursion_width_bound()),
        SizeAudit("recursion.depth", size.depth, b.recursion_depth_bound()),
    ]
    return rep


def reference_readout(build: Theorem1Build, xs: np.ndarray) -> tuple[np.ndarray, tuple]:
    ref = reference_pipeline(build.budget, xs)
    total = np.full(xs.shape[0], build.constant)
    for t, c in build.coefficients.items():
        total = total + float(c) * ref["tuples"][t]
    return total, ref["gadget_input_range"]


def check_theorem(build: Theorem1Build, f: Polynomial, xs: np.ndarray, prefix: str = "theorem",
                  scale: float = 1.0) -> BoundReport:
    """End-to-end claims for a compiled build; ``scale`` multiplies target and output."""
    b = build.budget
    got = readout_values(build.net, build.readout, xs)
    exact = eval_polynomial(f, xs)
    rep = BoundReport()
    rep.claims.append(Claim(
        f"{prefix}.error", b.theorem_error_bound(build.f_at_ones) * scale, _max_err(got, exact) * scale,
    ))
    reference, (lo, hi) = reference_readout(build, xs)
    rep.claims.append(Claim(f"{prefix}.matches_reference", 0.0, _max_err(got, reference),
                            kind="exact", tol=FP_RELATIVE * max(1.0, float(np.max(np.abs(reference))))))
    spill = max(0.0, -lo, hi - 1.0) if np.isfinite(lo) else 0.0
    rep.claims.append(Claim(f"{prefix}.gadget_inputs_in_unit_interval", 0.0, spill, kind="exact", tol=EXACT_TOL))
    rng = np.random.default_rng(0)
    perm = rng.permutation(b.n)
    sub = xs[: min(200, xs.shape[0])]
    moved = readout_values(build.net, build.readout, sub[:, :, perm])
    rep.claims.append(Claim(f"{prefix}.column_permutation_invariance", 0.0,
                            _max_err(moved, got[: sub.shape[0]]), kind="exact", tol=EXACT_TOL))
    size = size_report(build.net)
    rep.sizes += [
        SizeAudit(f"{prefix}.width", size.width, b.theorem_width_bound()),
        SizeAudit(f"{prefix}.depth", size.depth, b.theorem_depth_bound()),
    ]
    rep.info[f"{prefix}.parameter_count"] = size.parameter_count
    return rep


def check_bounds(f: Polynomial, b: BuildBudget, s: Sampler | None = None,
                 width_limit: int | None = None, stages: bool = True) -> BoundReport:
    """Build every stage for ``f`` and compare each measured error and size with its bound."""
    s = s or Sampler()
    normalize_check(f, strict=True)
    xs = s.draw(b.d, b.n)
    rep = BoundReport(info={
        "budget": {"d": b.d, "n": b.n, "s": b.s, "N": b.N, "L": b.L},
        "sampler": {"kind": s.kind, "count": s.count, "resolution": s.resolution, "seed": s.effective_seed},
        "samples": int(xs.shape[0]),
        "width_limit": width_limit,
    })
    if stages:
        for stage, check in (("bank", check_bank), ("rank1", check_rank1), ("recursion", check_recursion)):
            try:
                rep.extend(check(b, xs, width_limit))
            except Exception as exc:
                raise RuntimeError(f"{stage} stage failed: {exc}") from exc
    try:
        build = build_theorem1(f, b, width_limit)
    except Exception as exc:
        raise RuntimeError(f"end-to-end assembly failed: {exc}") from exc
    rep.extend(check_theorem(build, f, xs))
    return rep


# ---------------------------------------------------------------------------
# fault injection
# ---------------------------------------------------------------------------

def perturb_bank_gadget(build: Theorem1Build, factor: float = 1.01) -> Theorem1Build:
    """Copy of ``build`` with one input weight of the first bank product gadget scaled by ``factor``."""
    b = build.budget
    if b.s < 2:
        raise ValueError("no product gadget in a degree-1 build")
    blocks = list(build.net.blocks)
    attn, ff = blocks[0]
    # first block hides [copies of the d inputs, d carried inputs, gadget units...]
    unit = 2 * b.d
    w1 = np.array(ff.w1)
    if not np.any(w1[unit]):
        raise AssertionError("expected a live gadget unit")
    w1[unit] *= factor
    blocks[0] = Block(attn, FeedForwardParams(w1, ff.b1, ff.w2, ff.b2))
    net = TransformerNetwork(tuple(blocks), build.net.state_dim)
    return replace(build, net=net)


def fault_injection_selftest(f: Polynomial, b: BuildBudget, s: Sampler | None = None) -> BoundReport:
    s = s or Sampler()
    xs = s.draw(b.d, b.n)
    return check_theorem(perturb_bank_gadget(build_theorem1(f, b)), f, xs, prefix="faulty")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

CSV_COLUMNS = ["schema", "d", "n", "s", "N", "L", "measured", "bound", "width", "depth", "params"]


def sweep(f: Polynomial, n_values, l_values, s: Sampler | None = None, degree: int | None = None) -> list[dict]:
    """One row per ``(N, L)``: measured end-to-end error, bound and size."""
    s = s or Sampler()
    deg = degree or f.degree
    xs = s.draw(f.d, f.n)
    exact = eval_polynomial(f, xs)
    rows = []
    for N in n_values:
        for L in l_values:
            b = BuildBudget(f.d, f.n, deg, int(N), int(L))
            build = build_theorem1(f, b)
            got = readout_values(build.net, build.readout, xs)
            size = size_report(build.net)
            rows.append({
                "schema": CSV_SCHEMA, "d": b.d, "n": b.n, "s": b.s, "N": b.N, "L": b.L,
                "measured": _max_err(got, exact),
                "bound": b.theorem_error_bound(build.f_at_ones),
                "width": size.width, "depth": size.depth, "params": size.parameter_count,
            })
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def parameter_audit(d: int, s: int, N: int, L: int, n_values=(3, 5, 8)) -> dict:
    """Transformer parameter counts (constant in ``n``) next to the flat FNN counts."""
    f_counts, flat = {}, {}
    for n in n_values:
        b = BuildBudget(d, n, s, N, L)
        f = uniform_target(d, n, s)
        f_counts[n] = size_report(build_theorem1(f, b).net).parameter_count
        flat[n] = flat_ffn_parameter_count(b)
    return {"transformer": f_counts, "flat_ffn": flat}


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------

def uniform_target(d: int, n: int, s: int) -> Polynomial:
    """Sum of every basis element ``m_t`` (``|t| <= s``), normalized so ``f(1) = 1``."""
    parts = [(Fraction(1), t) for t in enumerate_rank_tuples(d, s)]
    f = recompose(parts, d, n)
    return f.scale(1 / f.coefficient_sum())


def random_symmetric_target(d: int, n: int, s: int, seed: int, terms: int | None = None) -> Polynomial:
    """Random positive combination of basis elements with exactly degree ``s``, normalized to ``f(1) = 1``."""
    rng = np.random.default_rng(seed)
    basis = [t for t in enumerate_rank_tuples(d, s) if len(t) <= n]
    top = [t for t in basis if sum(map(sum, t)) == s]
    k = terms or max(2, len(basis) // 2)
    chosen = {top[int(rng.integers(len(top)))]}
    while len(chosen) < min(k, len(basis)):
        chosen.add(basis[int(rng.integers(len(basis)))])
    parts = [(Fraction(int(rng.integers(1, 10))), t) for t in sorted(chosen)]
    f = recompose(parts, d, n)
    return f.scale(1 / f.coefficient_sum())


def example1_polynomial() -> Polynomial:
    """All 14 unit-coefficient terms of degree 1 and 2 in a 2x2 matrix."""
    d = n = 2
    terms = {}
    for total in (1, 2):
        for exps in itertools.product(range(total + 1), repeat=d * n):
            if sum(exps) == total:
                key = tuple(tuple(exps[j * d + i] for i in range(d)) for j in range(n))
                terms[key] = Fraction(1)
    return Polynomial(d, n, terms)


def example2_polynomial() -> Polynomial:
    """``(m_{(2,0),(1,1)} + m_{(1,0)}) / 9`` on a 2x3 matrix."""
    return recompose([(Fraction(1, 9), ((2, 0), (1, 1))), (Fraction(1, 9), ((1, 0),))], 2, 3)


def reproduce_examples(N: int, L: int, s: Sampler | None = None) -> dict:
    """Build both worked examples and return their size and error reports."""
    s = s or Sampler()
    out = {}

    f1 = example1_polynomial()
    total = normalize_check(f1)
    b1 = BuildBudget(2, 2, 2, N, L)
    build1 = build_theorem1(f1.scale(Fraction(1) / Fraction(total).limit_denominator()), b1, width_limit=16 * N)
    xs = s.draw(2, 2)
    got = readout_values(build1.net, build1.readout, xs) * total
    size = size_report(build1.net)
    out["example1"] = {
        "width": size.width, "width_bound": 16 * N,
        "depth": size.depth, "depth_bound": 4 * L + 6,
        "error": _max_err(got, eval_polynomial(f1, xs)), "error_bound": 1600 * b1.unit_error,
        "normalized_error_bound": b1.theorem_error_bound(1.0),
    }

    f2 = example2_polynomial()
    b2 = BuildBudget(2, 3, 4, N, L)
    build2 = build_theorem1(f2, b2)
    xs = s.draw(2, 3)
    size = size_report(build2.net)
    out["example2"] = {
        "width": size.width, "width_bound": 3072 * N,
        "depth": size.depth, "depth_bound": 8 * L + 12,
        "error": _max_err(readout_values(build2.net, build2.readout, xs), eval_polynomial(f2, xs)),
        "error_bound": 4096 * b2.unit_error,
    }
    return out


# ---------------------------------------------------------------------------
# oracle self-test
# ---------------------------------------------------------------------------

def run_selftest(seed: int | None = None) -> list[Claim]:
    """Identity checks between independent oracles; every claim has bound 0 and a tolerance."""
    from .combinatorics import enumerate_rank_tuples as tuples_of
    from .constructor import embed_ffn_in_transformer
    from .networks import eval_transformer
    from .polyoracle import decompose, eval_monomial_sym_permsum, expand_monomial_sym, lemma6_residual
    from .sawtooth import (
        GadgetParams, build_square_ffn, sawtooth_closed_form, sawtooth_exact, square_error_form, square_ref,
    )

    rng = np.random.default_rng(default_seed() if seed is None else seed)
    claims = []

    worst = 0.0
    for k in range(1, 11):
        x = np.linspace(0.0, 1.0, 2 ** (k + 3) + 1)
        worst = max(worst, _max_err(sawtooth_closed_form(k, x), sawtooth_exact(k, x)))
    claims.append(Claim("sawtooth.closed_form_vs_recursion", 0.0, worst, kind="exact", tol=1e-12))

    worst = 0.0
    for k in range(1, 13):
        x = np.linspace(0.0, 1.0, 2 ** (k + 2) + 1)
        worst = max(worst, _max_err(square_ref(k, x) - x * x, square_error_form(k, x)))
    claims.append(Claim("square.error_quadratic_form", 0.0, worst, kind="exact", tol=1e-12))

    worst = 0.0
    for _ in range(120):
        d, n, r = int(rng.integers(1, 4)), int(rng.integers(1, 7)), int(rng.integers(1, 4))
        parts = tuple(tuple(int(v) for v in rng.integers(0, 3, d)) for _ in range(r))
        parts = tuple(p if any(p) else (1,) + p[1:] for p in parts)
        extra = tuple(int(v) for v in rng.integers(0, 3, d))
        extra = extra if any(extra) else (1,) + extra[1:]
        x = rng.random((d, n))
        ref = max(1.0, abs(eval_monomial_sym(parts + (extra,), x)))
        worst = max(worst, abs(lemma6_residual(parts, extra, x)) / ref)
    claims.append(Claim("monomial.merge_identity", 0.0, worst, kind="exact", tol=1e-9))

    worst = 0.0
    for _ in range(60):
        d, n = int(rng.integers(1, 3)), int(rng.integers(1, 7))
        basis = tuples_of(d, 3)
        t = basis[int(rng.integers(len(basis)))]
        x = rng.random((d, n))
        a, b = eval_monomial_sym(t, x), eval_monomial_sym_permsum(t, x)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    claims.append(Claim("monomial.injective_vs_permutation_sum", 0.0, worst, kind="exact", tol=1e-9))

    mismatches = 0
    for d, n, s in ((1, 3, 3), (2, 3, 3), (2, 2, 4)):
        basis = [t for t in tuples_of(d, s) if len(t) <= n]
        picks = rng.choice(len(basis), size=min(5, len(basis)), replace=False)
        parts = [(Fraction(int(rng.integers(1, 7)), int(rng.integers(1, 5))), basis[i]) for i in sorted(picks)]
        f = recompose(parts, d, n) + Polynomial.constant(d, n, Fraction(1, 3))
        if not recompose(decompose(f), d, n).equals(f):
            mismatches += 1
    claims.append(Claim("decompose.round_trip", 0.0, float(mismatches), kind="exact", tol=0.5))

    worst = 0.0
    for N, L in ((2, 2), (4, 2), (8, 1)):
        sq = build_square_ffn(GadgetParams(N, L))
        tf = embed_ffn_in_transformer(sq)
        x = np.linspace(0.0, 1.0, 1025)
        state = np.zeros((x.size, tf.state_dim, 1))
        state[:, 0, 0] = x
        got = eval_transformer(tf, state)[:, 0, 0]
        worst = max(worst, _max_err(got, eval_ffn(sq, x[:, None])[:, 0]))
    claims.append(Claim("embedding.matches_ffn", 0.0, worst, kind="exact", tol=1e-12))

    b = BuildBudget(2, 3, 2, 4, 2)
    faulty = fault_injection_selftest(uniform_target(2, 3, 2), b, Sampler(count=200))
    claims.append(Claim("harness.detects_perturbed_gadget", 0.0, 0.0 if faulty.failures() else 1.0, kind="exact", tol=0.5))
    return claims
