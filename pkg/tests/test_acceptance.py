"""Acceptance criteria, one test per criterion.

Each test stores a one-line verdict that conftest prints after the run.
Tolerances and grids are pinned; runtime limits are wall-clock.
"""
import itertools
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from polyformer.combinatorics import enumerate_multi_indices, enumerate_rank_tuples
from polyformer.constructor import (
    BuildBudget,
    build_bank_ffn,
    build_monomial_bank,
    build_rank1_network,
    build_rank_recursion,
    build_theorem1,
    embed_ffn_in_transformer,
    flat_ffn_parameter_count,
    pad_input,
)
from polyformer.harness import (
    example1_polynomial,
    example2_polynomial,
    random_symmetric_target,
    uniform_target,
)
from polyformer.networks import eval_ffn, eval_transformer, size_report
from polyformer.polyoracle import (
    decompose,
    eval_monomial_sym,
    eval_monomial_sym_permsum,
    eval_polynomial,
    lemma6_residual,
    recompose,
)
from polyformer.sawtooth import (
    GadgetParams,
    build_clamped_product_ffn,
    build_product_ffn,
    build_square_ffn,
    sawtooth_closed_form,
    sawtooth_exact,
    square_error_form,
)

pytestmark = pytest.mark.acceptance

GADGET_GRID = [(N, L) for N in (2, 4, 8) for L in (1, 2, 3)]


@contextmanager
def criterion(store, number, name):
    """Record a verdict for ``number``; a raised exception records a failure."""
    verdict = {"ok": False, "detail": ""}
    start = time.perf_counter()
    try:
        yield verdict
    except BaseException as exc:
        verdict["ok"] = False
        verdict["detail"] = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        elapsed = time.perf_counter() - start
        store[number] = (name, verdict["ok"], f"{verdict['detail']} ({elapsed:.2f}s)")
        verdict["elapsed"] = elapsed


def monomials(x, ps):
    """``x^p`` for columns stacked as rows of ``x`` (shape ``(m, d)``)."""
    return np.stack([np.prod(x ** np.array(p), axis=1) for p in ps], axis=1)


def test_01_square_gadget(acceptance):
    with criterion(acceptance, 1, "squaring gadget") as v:
        x = np.linspace(0.0, 1.0, 4097)
        worst_ratio = worst_form = 0.0
        for N, L in GADGET_GRID:
            p = GadgetParams(N, L)
            out = eval_ffn(build_square_ffn(p), x[:, None])[:, 0]
            err = out - x ** 2
            worst_ratio = max(worst_ratio, np.max(np.abs(err)) * 4.0 ** (p.order + 1))
            worst_form = max(worst_form, np.max(np.abs(err - square_error_form(p.order, x))))
        v["ok"] = worst_ratio <= 1.0 and worst_form <= 1e-10
        v["detail"] = f"max err / 4^-(Lk+1) = {worst_ratio:.4f}, signed-form deviation {worst_form:.2e}"
    assert v["ok"], v["detail"]
    assert v["elapsed"] < 5.0


def test_02_product_gadget(acceptance):
    with criterion(acceptance, 2, "product gadget") as v:
        g = np.linspace(0.0, 1.0, 129)
        xy = np.array(list(itertools.product(g, g)))
        target = xy[:, 0] * xy[:, 1]
        worst_g = worst_h = 0.0
        in_range = True
        for N, L in GADGET_GRID:
            p = GadgetParams(N, L)
            gv = eval_ffn(build_product_ffn(p), xy)[:, 0]
            hv = eval_ffn(build_clamped_product_ffn(p), xy)[:, 0]
            worst_g = max(worst_g, np.max(np.abs(gv - target)) * float(N) ** L)
            worst_h = max(worst_h, np.max(np.abs(hv - target)) * float(N) ** L)
            in_range &= bool(hv.min() >= 0.0 and hv.max() <= 1.0)
        v["ok"] = worst_g < 1.0 and worst_h < 1.0 and in_range
        v["detail"] = f"max |g-xy| N^L = {worst_g:.4f}, max |h-xy| N^L = {worst_h:.4f}, h in [0,1]: {in_range}"
    assert v["ok"], v["detail"]
    assert v["elapsed"] < 5.0


def test_03_monomial_bank(acceptance):
    with criterion(acceptance, 3, "monomial bank") as v:
        rng = np.random.default_rng(3)
        worst = degree_one = 0.0
        sizes_ok = True
        for d, s, (N, L) in itertools.product((1, 2), (1, 2, 3), ((2, 1), (4, 2), (8, 3))):
            b = BuildBudget(d, 1, s, N, L)
            net, rows = build_monomial_bank(b)
            rep = size_report(net)
            sizes_ok &= rep.width <= 12 * s * d ** s * N and rep.depth <= (s - 1) * (L + 1)
            cols = rng.random((1000, d))
            ps = enumerate_multi_indices(d, s)
            out = eval_ffn(net, cols)[:, [rows.monomials[p] for p in ps]]
            err = np.max(np.abs(out - monomials(cols, ps)), axis=0)
            for p, e in zip(ps, err):
                if sum(p) == 1:
                    degree_one = max(degree_one, e)
                else:
                    worst = max(worst, e / ((sum(p) - 1) * b.unit_error))
        v["ok"] = worst <= 1.0 and degree_one <= 1e-12 and sizes_ok
        v["detail"] = (f"max err / (j-1)N^-L = {worst:.4f}, degree-1 err {degree_one:.1e}, "
                       f"sizes within bound: {sizes_ok}")
    assert v["ok"], v["detail"]
    assert v["elapsed"] < 10.0


def test_04_embedding(acceptance):
    with criterion(acceptance, 4, "FNN-to-Transformer embedding") as v:
        rng = np.random.default_rng(4)
        sources = [
            build_bank_ffn(BuildBudget(2, 1, 3, 4, 2)).net,
            build_square_ffn(GadgetParams(8, 2)),
            build_product_ffn(GadgetParams(4, 3)),
        ]
        worst = 0.0
        shape_ok = True
        for f in sources:
            tf = embed_ffn_in_transformer(f)
            shape_ok &= size_report(tf).width == 2 * f.width and tf.depth == f.depth
            x = 2.0 * rng.random((1000, f.input_dim))
            state = np.zeros((1000, tf.state_dim, 1))
            state[:, :f.input_dim, 0] = x
            got = eval_transformer(tf, state)[:, :f.output_dim, 0]
            worst = max(worst, float(np.max(np.abs(got - eval_ffn(f, x)))))
        v["ok"] = worst <= 1e-12 and shape_ok
        v["detail"] = f"max deviation {worst:.2e}, width doubled and depth kept: {shape_ok}"
    assert v["ok"], v["detail"]


def test_05_rank1(acceptance):
    with criterion(acceptance, 5, "rank-1 sums") as v:
        b = BuildBudget(2, 4, 3, 4, 2)
        net, rows = build_rank1_network(b)
        xs = np.random.default_rng(5).random((1000, 2, 4))
        out = eval_transformer(net, pad_input(xs, net.state_dim))[..., b.n]
        worst = 0.0
        exact_rows = 0.0
        for p in enumerate_multi_indices(2, 3):
            exact = np.sum(np.prod(xs ** np.array(p)[None, :, None], axis=1), axis=1)
            err = float(np.max(np.abs(out[:, rows.tuples[(p,)]] - exact)))
            if sum(p) == 1:
                exact_rows = max(exact_rows, err)
            else:
                worst = max(worst, err / (b.n * (sum(p) - 1) * b.unit_error))
        rep = size_report(net)
        size_ok = rep.width <= 12 * b.s * b.d ** b.s * b.N and rep.depth <= (b.s - 1) * (b.L + 1) + 1
        v["ok"] = worst <= 1.0 and exact_rows <= 1e-10 and size_ok
        v["detail"] = (f"max err / n(|p|-1)N^-L = {worst:.4f}, degree-1 err {exact_rows:.1e}, "
                       f"width {rep.width}, depth {rep.depth}")
    assert v["ok"], v["detail"]


def test_06_rank_recursion(acceptance):
    with criterion(acceptance, 6, "rank recursion") as v:
        xs = np.random.default_rng(6).random((500, 2, 4))
        lines, ok = [], True
        for N, L in [(4, 2), (2, 1)]:
            b = BuildBudget(2, 4, 3, N, L)
            rank1, rows1 = build_rank1_network(b)
            rec, rows = build_rank_recursion(b)
            first = eval_transformer(rank1, pad_input(xs, rank1.state_dim))[..., b.n]
            state = np.zeros((500, rec.state_dim, 1))
            state[:, :len(rows.monomials), 0] = np.stack(
                [first[:, rows1.tuples[(p,)]] for p in rows.monomials], axis=1)
            out = eval_transformer(rec, state)[..., 0]
            worst = 0.0
            for t in enumerate_rank_tuples(2, 3):
                if len(t) < 2:
                    continue
                exact = np.array([eval_monomial_sym(t, x) for x in xs])
                err = float(np.max(np.abs(out[:, rows.tuples[t]] - exact)))
                worst = max(worst, err / b.recursion_error_bound(t))
            rep = size_report(rec)
            ok &= worst < 1.0
            ok &= rep.width <= 12 * (2 * b.d) ** b.s * b.N and rep.depth <= (b.s - 1) * (b.L + 2)
            lines.append(f"(N,L)=({N},{L}) max err / bound {worst:.4f}, width {rep.width}, depth {rep.depth}")
        v["ok"] = bool(ok)
        v["detail"] = "; ".join(lines)
    assert v["ok"], v["detail"]


def test_07_end_to_end(acceptance):
    with criterion(acceptance, 7, "end-to-end approximation") as v:
        d, n, s = 2, 3, 3
        f = random_symmetric_target(d, n, s, seed=7)
        assert f.coefficient_sum() == 1 and all(c > 0 for c in f.terms.values())
        rng = np.random.default_rng(7)
        xs = np.concatenate([rng.random((2000, d, n)), np.zeros((1, d, n)), np.ones((1, d, n))])
        exact = eval_polynomial(f, xs)
        perm = rng.permutation(n)
        ratios, errors, sizes_ok, invariance = {}, {}, True, 0.0
        for N, L in [(4, 2), (8, 2), (4, 3)]:
            b = BuildBudget(d, n, s, N, L)
            build = build_theorem1(f, b)
            vals = build.evaluate(xs)
            errors[(N, L)] = float(np.max(np.abs(vals - exact)))
            ratios[(N, L)] = errors[(N, L)] / (8 ** s * b.unit_error)
            rep = size_report(build.net)
            sizes_ok &= rep.width <= 12 * (2 * d) ** s * N and rep.depth <= 2 * s * L + 3 * s
            invariance = max(invariance, float(np.max(np.abs(build.evaluate(xs[:, :, perm]) - vals))))
        decays = errors[(4, 3)] < errors[(4, 2)] and errors[(8, 2)] < errors[(4, 2)]
        v["ok"] = max(ratios.values()) < 1.0 and sizes_ok and invariance <= 1e-10 and decays
        v["detail"] = (f"max err / 8^s N^-L = {max(ratios.values()):.4f}, sizes ok: {sizes_ok}, "
                       f"permutation drift {invariance:.1e}, error shrinks with N and L: {decays}")
    assert v["ok"], v["detail"]
    assert v["elapsed"] < 60.0


def test_08_examples(acceptance):
    with criterion(acceptance, 8, "worked examples") as v:
        rng = np.random.default_rng(8)
        lines, ok = [], True
        f1, f2 = example1_polynomial(), example2_polynomial()
        total = float(f1.coefficient_sum())
        for N, L in [(2, 2), (4, 2), (8, 2)]:
            b1 = BuildBudget(2, 2, 2, N, L)
            build1 = build_theorem1(f1.scale(Fraction(1, 14)), b1, width_limit=16 * N)
            xs = rng.random((2000, 2, 2))
            err1 = float(np.max(np.abs(total * build1.evaluate(xs) - eval_polynomial(f1, xs))))
            r1 = size_report(build1.net)
            ok &= r1.width <= 16 * N and r1.depth <= 4 * L + 6 and err1 < 1600 * b1.unit_error

            b2 = BuildBudget(2, 3, 4, N, L)
            build2 = build_theorem1(f2, b2)
            xs = rng.random((500, 2, 3))
            err2 = float(np.max(np.abs(build2.evaluate(xs) - eval_polynomial(f2, xs))))
            r2 = size_report(build2.net)
            ok &= r2.width <= 3072 * N and r2.depth <= 8 * L + 12 and err2 < 4096 * b2.unit_error
            lines.append(f"N={N}: ex1 {r1.width}x{r1.depth} err {err1:.2e}, ex2 {r2.width}x{r2.depth} err {err2:.2e}")
        v["ok"] = bool(ok)
        v["detail"] = "; ".join(lines)
    assert v["ok"], v["detail"]


def test_09_oracles(acceptance):
    with criterion(acceptance, 9, "oracle suite") as v:
        rng = np.random.default_rng(9)
        merge, branches = 0.0, set()
        for case in range(150):
            d, n = int(rng.integers(1, 4)), int(rng.integers(1, 7))
            r = [n, n + 1][case % 2] if case < 20 else int(rng.integers(1, 4))
            parts = tuple(tuple(int(e) for e in rng.integers(0, 3, d)) for _ in range(r))
            parts = tuple(p if any(p) else (1,) + p[1:] for p in parts)
            extra = tuple(int(e) for e in rng.integers(0, 3, d))
            extra = extra if any(extra) else (1,) + extra[1:]
            x = rng.random((d, n))
            scale = max(1.0, abs(eval_monomial_sym(parts, x) * eval_monomial_sym((extra,), x)))
            merge = max(merge, abs(lemma6_residual(parts, extra, x)) / scale)
            branches.add("r<n" if r < n else "r=n" if r == n else "r>n")

        cross = 0.0
        for _ in range(100):
            d, n = int(rng.integers(1, 4)), int(rng.integers(1, 7))
            basis = enumerate_rank_tuples(d, 3)
            t = basis[int(rng.integers(len(basis)))]
            x = rng.random((d, n))
            a, b = eval_monomial_sym(t, x), eval_monomial_sym_permsum(t, x)
            cross = max(cross, abs(a - b) / max(1.0, abs(b)))

        round_trip = True
        for d, n, s in [(1, 3, 3), (2, 3, 3), (2, 2, 4), (3, 2, 2)]:
            basis = [t for t in enumerate_rank_tuples(d, s) if len(t) <= n]
            picks = rng.choice(len(basis), size=min(6, len(basis)), replace=False)
            parts = [(Fraction(int(rng.integers(1, 9)), int(rng.integers(1, 7))), basis[i]) for i in picks]
            f = recompose(parts, d, n)
            round_trip &= recompose(decompose(f), d, n).terms == f.terms
        round_trip &= recompose(decompose(example2_polynomial()), 2, 3).terms == example2_polynomial().terms

        closed = 0.0
        for k in range(1, 11):
            x = np.linspace(0.0, 1.0, 2 ** (k + 3) + 1)
            closed = max(closed, float(np.max(np.abs(sawtooth_closed_form(k, x) - sawtooth_exact(k, x)))))

        v["ok"] = (merge <= 1e-9 and branches == {"r<n", "r=n", "r>n"} and cross <= 1e-9
                   and round_trip and closed <= 1e-12)
        v["detail"] = (f"merge residual {merge:.1e} over {sorted(branches)}, cross-oracle {cross:.1e}, "
                       f"round trip exact: {round_trip}, closed form {closed:.1e}")
    assert v["ok"], v["detail"]


def test_10_parameter_audit(acceptance):
    with criterion(acceptance, 10, "parameter-count audit") as v:
        counts, flat = {}, {}
        for n in (3, 5, 8):
            b = BuildBudget(2, n, 2, 4, 2)
            counts[n] = size_report(build_theorem1(uniform_target(2, n, 2), b).net).parameter_count
            flat[n] = flat_ffn_parameter_count(b)
        grows = flat[3] < flat[5] < flat[8]
        v["ok"] = len(set(counts.values())) == 1 and grows
        v["detail"] = f"transformer {counts}, flat FNN {flat}"
    assert v["ok"], v["detail"]


def test_11_determinism(acceptance, tmp_path):
    with criterion(acceptance, 11, "deterministic verify") as v:
        poly = tmp_path / "f.txt"
        poly.write_text("1/9 * x[1][1]^2 * x[2][2]\n1/9 * x[1][1]^2 * x[2][3]\n1/9 * x[1][2]^2 * x[2][1]\n"
                        "1/9 * x[1][2]^2 * x[2][3]\n1/9 * x[1][3]^2 * x[2][1]\n1/9 * x[1][3]^2 * x[2][2]\n"
                        "1/9 * x[1][1]\n1/9 * x[1][2]\n1/9 * x[1][3]\n")
        cmd = [sys.executable, "-m", "polyformer", "verify", "--poly", str(poly),
               "--N", "4", "--L", "2", "--seed", "11", "--samples", "300"]
        runs = [subprocess.run(cmd, capture_output=True, check=False) for _ in range(2)]
        same = runs[0].stdout == runs[1].stdout and len(runs[0].stdout) > 0
        v["ok"] = same and all(r.returncode == 0 for r in runs)
        v["detail"] = f"byte-identical reports: {same}, exit codes {[r.returncode for r in runs]}"
    assert v["ok"], v["detail"]
