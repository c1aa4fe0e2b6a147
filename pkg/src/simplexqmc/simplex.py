"""Geometry, sampling and exact polynomial arithmetic on the unit simplex.

The simplex is ``T^d = {x in R^d : x_i >= 0, sum(x) <= 1}``.  Points are
stored by their first ``d`` coordinates; the barycentric remainder
``1 - sum(x)`` is always derived.

Polynomials carry exact :class:`fractions.Fraction` coefficients keyed by
exponent tuples.  Floats appear only when a polynomial is evaluated.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Mapping

import numpy as np

SIMPLEX_TOL = 1e-12

MultiIndex = tuple[int, ...]


def graded_lex(d: int, degree: int) -> list[MultiIndex]:
    """All multi-indices in ``d`` variables of total ``degree``, graded-lex order.

    Within one degree the order is lexicographically *decreasing* in the
    exponent tuple, so for ``d=2, degree=2`` the result is
    ``[(2, 0), (1, 1), (0, 2)]``.
    """
    if d < 1 or degree < 0:
        raise ValueError(f"need d >= 1 and degree >= 0, got d={d}, degree={degree}")
    out = []
    for combo in combinations_with_replacement(range(d), degree):
        alpha = [0] * d
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    out.sort(reverse=True)
    return out


def graded_lex_upto(d: int, max_degree: int) -> list[MultiIndex]:
    return [a for k in range(max_degree + 1) for a in graded_lex(d, k)]


def graded_key(alpha: MultiIndex):
    """Sort key implementing graded-lex order (degree first)."""
    return (sum(alpha), tuple(-a for a in alpha))


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def check_simplex_points(x, d: int | None = None, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and return ``x`` as a float array of shape ``(n, d)``.

    A single point may be passed as a 1-D sequence; it is returned with a
    leading axis of length one.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"expected points of shape (n, d), got {arr.shape}")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"points have dimension {arr.shape[1]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points contain non-finite values")
    if np.any(arr < -tol):
        raise ValueError("point coordinate below zero")
    if np.any(arr.sum(axis=1) > 1.0 + tol):
        raise ValueError("point coordinates sum to more than one")
    return arr


def barycentric(x: np.ndarray) -> np.ndarray:
    """Append the remainder ``1 - |x|`` (clipped at 0) as a last column."""
    x = np.asarray(x, dtype=float)
    rest = np.clip(1.0 - x.sum(axis=-1, keepdims=True), 0.0, None)
    return np.concatenate([np.clip(x, 0.0, None), rest], axis=-1)


def uniform_sample(d: int, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` i.i.d. uniform points on ``T^d``.

    Uses the spacings of ``d`` sorted uniforms on ``[0, 1]``: the first ``d``
    gaps are exactly uniform on the simplex and need no rejection.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence` or a
    :class:`numpy.random.Generator`.
    """
    if d < 1 or count < 1:
        raise ValueError(f"need d >= 1 and count >= 1, got d={d}, count={count}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = np.sort(rng.random((count, d)), axis=1)
    x = np.diff(u, axis=1, prepend=0.0)
    # guard the last ulp so sum(x) <= 1 holds exactly
    over = x.sum(axis=1) > 1.0
    if np.any(over):
        x[over] /= x[over].sum(axis=1, keepdims=True) * (1 + 2 ** -52)
    return x


# ---------------------------------------------------------------------------
# exact moments
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _factorial(k: int) -> int:
    return math.factorial(k)


def monomial_integral(alpha: Iterable[int], d: int) -> Fraction:
    """Exact ``int_{T^d} x^alpha dx = prod(alpha_i!) / (|alpha| + d)!``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != d:
        raise ValueError(f"multi-index {alpha} does not have dimension {d}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    num = 1
    for a in alpha:
        num *= _factorial(a)
    return Fraction(num, _factorial(sum(alpha) + d))


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

class Polynomial:
    """Sparse polynomial in ``dim`` variables with exact rational coefficients.

    Instances are treated as immutable.  Zero coefficients are never stored.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, terms: Mapping[MultiIndex, object], dim: int):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        clean: dict[MultiIndex, Fraction] = {}
        for alpha, c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha} for dimension {dim}")
            c = Fraction(c)
            if c:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
        self.dim = dim
        self.terms = {a: c for a, c in sorted(clean.items(), key=lambda t: graded_key(t[0])) if c}

    @classmethod
    def constant(cls, value, dim: int) -> "Polynomial":
        return cls({(0,) * dim: value}, dim)

    @classmethod
    def monomial(cls, alpha: MultiIndex, dim: int, coef=1) -> "Polynomial":
        return cls({tuple(alpha): coef}, dim)

    @classmethod
    def variable(cls, i: int, dim: int) -> "Polynomial":
        alpha = [0] * dim
        alpha[i] = 1
        return cls({tuple(alpha): 1}, dim)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return Polynomial.constant(other, self.dim)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return Polynomial(terms, self.dim)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({a: -c for a, c in self.terms.items()}, self.dim)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = Fraction(other)
            return Polynomial({a: c * v for a, v in self.terms.items()}, self.dim)
        other = self._coerce(other)
        terms: dict[MultiIndex, Fraction] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                key = tuple(i + j for i, j in zip(a, b))
                terms[key] = terms.get(key, 0) + ca * cb
        return Polynomial(terms, self.dim)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(other, self.dim)
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, tuple(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return f"Polynomial(0, dim={self.dim})"
        parts = []
        for a, c in self.terms.items():
            mono = "*".join(f"x{i + 1}^{e}" if e > 1 else f"x{i + 1}" for i, e in enumerate(a) if e)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return f"Polynomial({' + '.join(parts)}, dim={self.dim})"

    def diff(self, i: int, times: int = 1) -> "Polynomial":
        """Exact partial derivative ``d^times / dx_i^times``."""
        terms = {}
        for a, c in self.terms.items():
            if a[i] < times:
                continue
            factor = math.perm(a[i], times)
            b = list(a)
            b[i] -= times
            terms[tuple(b)] = c * factor
        return Polynomial(terms, self.dim)

    def evaluate(self, x) -> float:
        """Float value at one point by term summation in graded-lex order."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"point has dimension {x.shape[0]}, polynomial has {self.dim}")
        total = 0.0
        for a, c in self.terms.items():
            total += float(c) * math.prod(float(xi) ** e for xi, e in zip(x, a))
        return total

    def evaluate_exact(self, x) -> Fraction:
        """Exact rational value; float inputs are converted without rounding."""
        x = [Fraction(v) for v in x]
        if len(x) != self.dim:
            raise ValueError(f"point has dimension {len(x)}, polynomial has {self.dim}")
        total = Fraction(0)
        for a, c in self.terms.items():
            term = c
            for xi, e in zip(x, a):
                if e:
                    term *= xi ** e
            total += term
        return total

    def integral(self) -> Fraction:
        """Exact ``int_{T^d} f dx``."""
        return sum((c * monomial_integral(a, self.dim) for a, c in self.terms.items()), Fraction(0))


def poly_eval(f: Polynomial, x) -> float:
    return f.evaluate(x)


def poly_inner_product(f: Polynomial, g: Polynomial) -> Fraction:
    """Exact ``d! * int_{T^d} f g dx``."""
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    d = f.dim
    total = Fraction(0)
    for a, ca in f.terms.items():
        for b, cb in g.terms.items():
            total += ca * cb * monomial_integral(tuple(i + j for i, j in zip(a, b)), d)
    return total * _factorial(d)


def gram_matrix(polys: list[Polynomial]) -> list[list[Fraction]]:
    """Exact matrix of pairwise :func:`poly_inner_product` values.

    Same arithmetic as :func:`poly_inner_product`, batched: coefficients are
    brought to a common integer scale and the products run through numpy
    object arrays (Python integers, so nothing is rounded).
    """
    if not polys:
        return []
    d = polys[0].dim
    if any(p.dim != d for p in polys):
        raise ValueError("all polynomials must share a dimension")
    monos = sorted({a for p in polys for a in p.terms}, key=graded_key)
    index = {a: i for i, a in enumerate(monos)}
    top = 2 * max(sum(a) for a in monos) + d if monos else d

    # integer coefficient rows with one denominator per polynomial
    rows = np.zeros((len(polys), len(monos)), dtype=object)
    denoms = []
    for r, p in enumerate(polys):
        den = math.lcm(*(c.denominator for c in p.terms.values())) if p.terms else 1
        denoms.append(den)
        for a, c in p.terms.items():
            rows[r, index[a]] = c.numerator * (den // c.denominator)

    # moments scaled by top! so every entry is an integer
    scale = _factorial(top)
    moments = np.empty((len(monos), len(monos)), dtype=object)
    for i, a in enumerate(monos):
        for j in range(i, len(monos)):
            b = monos[j]
            s = tuple(x + y for x, y in zip(a, b))
            num = 1
            for e in s:
                num *= _factorial(e)
            val = num * (scale // _factorial(sum(s) + d))
            moments[i, j] = moments[j, i] = val

    raw = rows.dot(moments).dot(rows.T)
    fd = _factorial(d)
    return [
        [Fraction(int(raw[i, j]) * fd, scale * denoms[i] * denoms[j]) for j in range(len(polys))]
        for i in range(len(polys))
    ]
