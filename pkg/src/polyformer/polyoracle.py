"""Exact polynomials over the entries of a ``d x n`` matrix.

A term is keyed by its exponent matrix stored column-major: a tuple of
``n`` columns, each a ``d``-tuple of exponents. Python's tuple comparison
on these keys is the lexicographic term order used by :func:`decompose`.

Coefficients are :class:`fractions.Fraction` when the polynomial comes
from text or JSON, which makes symbolic comparisons exact; float
coefficients are accepted and compared with a small tolerance.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from numbers import Real
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .combinatorics import RankTuple, canonical_tuple, symmetry_coefficient

Key = tuple  # tuple of n columns, each a tuple of d exponents

FLOAT_TOL = 1e-9


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def _is_zero(c) -> bool:
    return c == 0 if _is_exact(c) else abs(c) <= 1e-15


@dataclass(frozen=True, eq=False)
class Polynomial:
    d: int
    n: int
    terms: dict

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError(f"need d >= 1 and n >= 1, got d={self.d}, n={self.n}")
        clean = {}
        for key, coef in self.terms.items():
            key = tuple(tuple(int(e) for e in col) for col in key)
            if len(key) != self.n or any(len(col) != self.d for col in key):
                raise ValueError(f"term exponents {key} do not match a {self.d}x{self.n} matrix")
            if any(e < 0 for col in key for e in col):
                raise ValueError(f"negative exponent in term {key}")
            if isinstance(coef, int):
                coef = Fraction(coef)
            if not isinstance(coef, (Fraction, Real)):
                raise TypeError(f"unsupported coefficient type {type(coef).__name__}")
            if not _is_zero(coef):
                clean[key] = clean.get(key, 0) + coef
        object.__setattr__(self, "terms", {k: v for k, v in clean.items() if not _is_zero(v)})

    # -- construction helpers ------------------------------------------------
    @classmethod
    def zero(cls, d: int, n: int) -> "Polynomial":
        return cls(d, n, {})

    @classmethod
    def constant(cls, d: int, n: int, value) -> "Polynomial":
        return cls(d, n, {cls.zero_key(d, n): value})

    @staticmethod
    def zero_key(d: int, n: int) -> Key:
        return ((0,) * d,) * n

    @classmethod
    def from_matrices(cls, pairs: Iterable, d: int | None = None, n: int | None = None) -> "Polynomial":
        """Build from ``(coefficient, exponent matrix d x n)`` pairs."""
        terms: dict = {}
        for coef, exps in pairs:
            e = np.asarray(exps, dtype=np.int64)
            d, n = e.shape if d is None else (d, n)
            key = tuple(tuple(int(v) for v in e[:, j]) for j in range(e.shape[1]))
            terms[key] = terms.get(key, 0) + coef
        if d is None:
            raise ValueError("cannot infer dimensions of an empty polynomial")
        return cls(d, n, terms)

    # -- properties ------------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((sum(sum(c) for c in key) for key in self.terms), default=0)

    @property
    def exact(self) -> bool:
        return all(_is_exact(c) for c in self.terms.values())

    def __len__(self) -> int:
        return len(self.terms)

    def leading_key(self) -> Key:
        return max(self.terms)

    def coefficient_sum(self):
        return sum(self.terms.values(), Fraction(0))

    def exponent_matrix(self, key: Key) -> np.ndarray:
        return np.array(key, dtype=np.int64).T.reshape(self.d, self.n)

    # -- algebra ---------------------------------------------------------------
    def _check_same_shape(self, other: "Polynomial"):
        if (self.d, self.n) != (other.d, other.n):
            raise ValueError(f"shape mismatch: {self.d}x{self.n} vs {other.d}x{other.n}")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_same_shape(other)
        terms = dict(self.terms)
        for key, coef in other.terms.items():
            terms[key] = terms.get(key, 0) + coef
        return Polynomial(self.d, self.n, terms)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.d, self.n, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def scale(self, c) -> "Polynomial":
        return Polynomial(self.d, self.n, {k: c * v for k, v in self.terms.items()})

    def permute_columns(self, perm) -> "Polynomial":
        """Polynomial ``g`` with ``g(X) = f(X[:, perm])``."""
        perm = list(perm)
        inv = np.argsort(perm)
        return Polynomial(self.d, self.n, {tuple(key[i] for i in inv): v for key, v in self.terms.items()})

    def equals(self, other: "Polynomial", tol: float = FLOAT_TOL) -> bool:
        """Term-for-term equality; exact for rational coefficients."""
        if (self.d, self.n) != (other.d, other.n):
            return False
        if self.exact and other.exact:
            return self.terms == other.terms
        keys = set(self.terms) | set(other.terms)
        scale = max([1.0] + [abs(float(v)) for v in self.terms.values()])
        return all(
            abs(float(self.terms.get(k, 0)) - float(other.terms.get(k, 0))) <= tol * scale
            for k in keys
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.equals(other)

    __hash__ = None

    # -- evaluation arrays -----------------------------------------------------
    def term_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Exponents flattened column-major (T, d*n) and float coefficients (T,)."""
        keys = sorted(self.terms)
        exps = np.array([[e for col in key for e in col] for key in keys], dtype=np.int64)
        exps = exps.reshape(len(keys), self.d * self.n)
        coefs = np.array([float(self.terms[k]) for k in keys], dtype=np.float64)
        return exps, coefs


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _as_batch(x, d: int, n: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (d, n):
        raise ValueError(f"expected a {d}x{n} matrix (or a stack of them), got shape {x.shape}")
    return x, single


def eval_polynomial(f: Polynomial, x):
    """``f(X)`` for one ``d x n`` matrix or a stack of them."""
    xb, single = _as_batch(x, f.d, f.n)
    exps, coefs = f.term_arrays()
    flat = np.swapaxes(xb, 1, 2).reshape(xb.shape[0], f.d * f.n)
    out = _kernels.eval_terms(flat, exps, coefs)
    return float(out[0]) if single else out


def _column_powers(t: RankTuple, xb: np.ndarray) -> np.ndarray:
    """``v[b, i, j] = prod_l x[b, l, j] ** t[i][l]``."""
    p = np.array(t, dtype=np.int64).reshape(len(t), xb.shape[1])
    v = np.ones((xb.shape[0], len(t), xb.shape[2]))
    for i in range(len(t)):
        for l in range(xb.shape[1]):
            if p[i, l]:
                v[:, i, :] *= xb[:, l, :] ** p[i, l]
    return v


def _check_tuple(t, d: int) -> RankTuple:
    t = tuple(tuple(int(e) for e in p) for p in t)
    if any(len(p) != d for p in t):
        raise ValueError(f"tuple parts must have length {d}, got {t}")
    return t


def eval_monomial_sym(t: RankTuple, x):
    """``m_t(X)``: sum over ordered choices of distinct columns; zero when ``r > n``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (2, 3):
        raise ValueError(f"expected a matrix or a stack of matrices, got shape {x.shape}")
    d, n = x.shape[-2:]
    t = _check_tuple(t, d)
    xb, single = _as_batch(x, d, n)
    out = _kernels.injective_product_sum(_column_powers(t, xb))
    return float(out[0]) if single else out


MAX_PERMSUM_COLUMNS = 8


def eval_monomial_sym_permsum(t: RankTuple, x) -> float:
    """``m_t(X)`` as ``sum over S_n`` divided by ``(n - r)!``; slow second opinion."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a single matrix, got shape {x.shape}")
    d, n = x.shape
    if n > MAX_PERMSUM_COLUMNS:
        raise ValueError(f"permutation sum over {n} columns is too large (limit {MAX_PERMSUM_COLUMNS})")
    t = _check_tuple(t, d)
    r = len(t)
    if r > n:
        return 0.0
    total = 0.0
    for sigma in itertools.permutations(range(n)):
        prod = 1.0
        for i in range(r):
            prod *= float(np.prod(x[:, sigma[i]] ** np.array(t[i])))
        total += prod
    return total / factorial(n - r)


def expand_monomial_sym(t: RankTuple, d: int, n: int) -> Polynomial:
    """Explicit term list of ``m_t`` (integer coefficients)."""
    t = _check_tuple(t, d)
    zero = (0,) * d
    terms: dict = {}
    if len(t) > n:
        return Polynomial.zero(d, n)
    for cols in itertools.permutations(range(n), len(t)):
        key = [zero] * n
        for part, j in zip(t, cols):
            key[j] = part
        key = tuple(key)
        terms[key] = terms.get(key, 0) + 1
    return Polynomial(d, n, terms)


# ---------------------------------------------------------------------------
# symmetry and decomposition
# ---------------------------------------------------------------------------

def find_asymmetry(f: Polynomial, tol: float = FLOAT_TOL) -> tuple[int, int] | None:
    """First adjacent column pair whose swap changes ``f`` (0-based), or None."""
    for j in range(f.n - 1):
        perm = list(range(f.n))
        perm[j], perm[j + 1] = perm[j + 1], perm[j]
        if not f.permute_columns(perm).equals(f, tol):
            return (j, j + 1)
    return None


def is_column_symmetric(f: Polynomial) -> bool:
    return find_asymmetry(f) is None


def _leading_tuple(key: Key) -> RankTuple:
    return tuple(col for col in key if any(col))


def decompose(f: Polynomial) -> list[tuple[object, RankTuple]]:
    """Coefficients ``c_t`` with ``f = sum_t c_t m_t``, by leading-term elimination.

    The constant part is reported under the empty tuple. The leading term
    of the remainder strictly decreases at every step.
    """
    bad = find_asymmetry(f)
    if bad is not None:
        raise ValueError(
            f"polynomial is not column-symmetric: swapping columns {bad[0] + 1} and {bad[1] + 1} changes it"
        )
    exact = f.exact
    scale = max([1.0] + [abs(float(v)) for v in f.terms.values()])
    rest = f
    out = []
    previous = None
    while rest.terms:
        key = rest.leading_key()
        if previous is not None and not key < previous:
            raise AssertionError(f"leading term did not decrease: {key} after {previous}")
        t = _leading_tuple(key)
        if t != canonical_tuple(t) or any(any(col) for col in key[len(t):]):
            raise AssertionError(f"leading term {key} is not in sorted column order")
        coef = rest.terms[key]
        c = coef / symmetry_coefficient(t, f.n)
        terms = dict((rest - expand_monomial_sym(t, f.d, f.n).scale(c)).terms)
        terms.pop(key, None)
        if not exact:
            terms = {k: v for k, v in terms.items() if abs(float(v)) > FLOAT_TOL * scale}
        rest = Polynomial(f.d, f.n, terms)
        out.append((c, t))
        previous = key
    return out


def recompose(parts, d: int, n: int) -> Polynomial:
    """``sum c_t m_t`` as an explicit polynomial."""
    total = Polynomial.zero(d, n)
    for c, t in parts:
        total = total + expand_monomial_sym(t, d, n).scale(c)
    return total


def lemma6_residual(p_tuple: RankTuple, p_extra, x):
    """``m_{p, q}(X) - (m_p(X) m_q(X) - sum_i m_{p with p_i + q}(X))``."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-2]
    p_tuple = _check_tuple(p_tuple, d)
    q = tuple(int(e) for e in p_extra)
    if len(q) != d:
        raise ValueError(f"extra multi-index must have length {d}, got {q}")
    lhs = eval_monomial_sym(p_tuple + (q,), x)
    rhs = eval_monomial_sym(p_tuple, x) * eval_monomial_sym((q,), x)
    for i in range(len(p_tuple)):
        merged = list(p_tuple)
        merged[i] = tuple(a + b for a, b in zip(p_tuple[i], q))
        rhs = rhs - eval_monomial_sym(tuple(merged), x)
    return lhs - rhs


def normalize_check(f: Polynomial, strict: bool = False) -> float:
    """``f(1)``, the sup norm of a positive-coefficient ``f`` on the unit cube."""
    if not f.terms:
        raise ValueError("polynomial has no positive coefficients")
    for key, coef in f.terms.items():
        if not coef > 0:
            raise ValueError(f"coefficient {coef} of term {key} is not positive")
    value = float(f.coefficient_sum())
    if strict and value > 1.0 + 1e-12:
        raise ValueError(f"sup norm f(1) = {value} exceeds 1")
    return value


# ---------------------------------------------------------------------------
# text and JSON formats
# ---------------------------------------------------------------------------

_VAR = re.compile(r"^x\[(\d+)\]\[(\d+)\](?:\^(\d+))?$")


def _parse_coefficient(text: str) -> Fraction:
    try:
        return Fraction(text.replace(" ", ""))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad coefficient {text!r}") from exc


def parse_polynomial(text: str, d: int | None = None, n: int | None = None) -> Polynomial:
    """Parse lines like ``1/9 * x[1][1]^2 * x[2][3]`` (1-based row, column).

    A line may omit the coefficient (meaning 1) or consist of a coefficient
    alone (a constant). Blank lines and ``#`` comments are ignored.
    """
    raw = []
    max_i = max_j = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        coef = Fraction(1)
        powers: dict = {}
        for token in (tok.strip() for tok in line.split("*")):
            if not token:
                raise ValueError(f"line {lineno}: empty factor")
            m = _VAR.match(token.replace(" ", ""))
            if m:
                i, j = int(m.group(1)), int(m.group(2))
                if i < 1 or j < 1:
                    raise ValueError(f"line {lineno}: indices are 1-based, got {token!r}")
                e = int(m.group(3)) if m.group(3) else 1
                powers[(i, j)] = powers.get((i, j), 0) + e
                max_i, max_j = max(max_i, i), max(max_j, j)
            else:
                try:
                    coef *= _parse_coefficient(token)
                except ValueError as exc:
                    raise ValueError(f"line {lineno}: {exc}") from None
        raw.append((coef, powers))
    d = d or max_i
    n = n or max_j
    if not d or not n:
        raise ValueError("cannot infer matrix dimensions; pass d and n")
    if max_i > d or max_j > n:
        raise ValueError(f"term indices exceed the declared {d}x{n} shape")
    terms: dict = {}
    for coef, powers in raw:
        key = tuple(tuple(powers.get((i + 1, j + 1), 0) for i in range(d)) for j in range(n))
        terms[key] = terms.get(key, 0) + coef
    return Polynomial(d, n, terms)


def _format_coefficient(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return repr(float(c))


def format_polynomial(f: Polynomial) -> str:
    lines = []
    for key in sorted(f.terms, reverse=True):
        factors = [_format_coefficient(f.terms[key])]
        for j, col in enumerate(key):
            for i, e in enumerate(col):
                if e:
                    factors.append(f"x[{i + 1}][{j + 1}]" + (f"^{e}" if e > 1 else ""))
        lines.append(" * ".join(factors))
    return "\n".join(lines) + ("\n" if lines else "")


def polynomial_to_dict(f: Polynomial) -> dict:
    return {
        "d": f.d,
        "n": f.n,
        "terms": [
            {"coefficient": _format_coefficient(f.terms[key]), "exponents": f.exponent_matrix(key).tolist()}
            for key in sorted(f.terms, reverse=True)
        ],
    }


def polynomial_from_dict(obj: dict) -> Polynomial:
    d, n = int(obj["d"]), int(obj["n"])
    pairs = []
    for term in obj["terms"]:
        c = term["coefficient"]
        coef = _parse_coefficient(c) if isinstance(c, str) else Fraction(c) if isinstance(c, int) else float(c)
        pairs.append((coef, term["exponents"]))
    if not pairs:
        return Polynomial.zero(d, n)
    return Polynomial.from_matrices(pairs, d, n)


def load_polynomial(path, d: int | None = None, n: int | None = None) -> Polynomial:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        f = polynomial_from_dict(json.loads(text))
        if (d and d != f.d) or (n and n != f.n):
            raise ValueError(f"file holds a {f.d}x{f.n} polynomial, flags ask for {d}x{n}")
        return f
    return parse_polynomial(text, d, n)
