"""Orthonormal polynomials on the simplex and their degree kernels.

The basis of each degree-``l`` space is obtained from the Rodrigues family

    P_n(x) = d^{|n|}/dx^n [ x^n (1 - |x|)^{|n|} ],   |n| = l,

by exact Gram-Schmidt in graded-lex order.  Each orthogonal polynomial is
kept as an exact rational combination of Rodrigues polynomials together
with its exact squared norm; the ``1/sqrt(norm)`` factor is applied only
when evaluating in floating point.

Float evaluation goes through the homogeneous form in barycentric
coordinates ``(x_1, ..., x_d, 1 - |x|)``, where all monomials are bounded
by one and the expansion stays well conditioned.  The monomial form in
``x`` is available for exact work but is never evaluated numerically in
the hot paths.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from pathlib import Path

import numpy as np

from .simplex import MultiIndex, Polynomial, barycentric, check_simplex_points, graded_lex

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CACHE_ENV = "SIMPLEXQMC_CACHE"


def dim_space(d: int, ell: int) -> int:
    """``r_l^d = binom(l + d - 1, l)``, the dimension of the degree-``l`` space."""
    return math.comb(ell + d - 1, ell)


# ---------------------------------------------------------------------------
# Rodrigues polynomials
# ---------------------------------------------------------------------------

def rodrigues(n_tilde: MultiIndex) -> Polynomial:
    """Expand ``d^{|n|}/dx^n [x^n (1-|x|)^{|n|}]`` symbolically."""
    n_tilde = tuple(int(v) for v in n_tilde)
    d = len(n_tilde)
    if d < 1 or any(v < 0 for v in n_tilde):
        raise ValueError(f"invalid multi-index {n_tilde}")
    ell = sum(n_tilde)
    one_minus = Polynomial.constant(1, d)
    for i in range(d):
        one_minus = one_minus - Polynomial.variable(i, d)
    w = Polynomial.monomial(n_tilde, d)
    for _ in range(ell):
        w = w * one_minus
    for i, k in enumerate(n_tilde):
        if k:
            w = w.diff(i, k)
    return w


def _rodrigues_monomial_coeffs(n_tilde: MultiIndex) -> dict[MultiIndex, int]:
    # expand (1-|x|)^l by multinomials, then differentiate x^{n+beta} termwise
    d = len(n_tilde)
    ell = sum(n_tilde)
    out = {}
    for k in range(ell + 1):
        for beta in graded_lex(d, k):
            c = math.factorial(ell) // (math.prod(math.factorial(b) for b in beta) * math.factorial(ell - k))
            for ni, bi in zip(n_tilde, beta):
                c *= math.factorial(ni + bi) // math.factorial(bi)
            out[beta] = -c if k % 2 else c
    return out


def _rodrigues_barycentric_coeffs(n_tilde: MultiIndex) -> dict[MultiIndex, int]:
    # homogeneous degree-l form in (x_1..x_d, x_{d+1}); d/dx_i acts as (D_i - D_{d+1})
    ell = sum(n_tilde)
    out = {}
    for j in product(*(range(v + 1) for v in n_tilde)):
        big_j = sum(j)
        c = math.factorial(ell) // math.factorial(ell - big_j)
        for ni, ji in zip(n_tilde, j):
            c *= math.comb(ni, ji) * (math.factorial(ni) // math.factorial(ji))
        if big_j % 2:
            c = -c
        out[tuple(j) + (ell - big_j,)] = c
    return out


def _rodrigues_gram(indices: list[MultiIndex], d: int) -> list[list[Fraction]]:
    # <P_n, P_m> = d! (l!)^2 / (2l+d)! * prod_i (n_i + m_i)!   for |n| = |m| = l
    if not indices:
        return []
    ell = sum(indices[0])
    scale = Fraction(math.factorial(d) * math.factorial(ell) ** 2, math.factorial(2 * ell + d))
    return [
        [scale * math.prod(math.factorial(a + b) for a, b in zip(n, m)) for m in indices]
        for n in indices
    ]


# ---------------------------------------------------------------------------
# basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DegreeBlock:
    """Orthogonal (not yet normalized) polynomials of one degree.

    ``coords[k][j]`` is the coefficient of the ``j``-th Rodrigues polynomial
    ``indices[j]`` in the ``k``-th orthogonal polynomial.
    """

    degree: int
    indices: tuple[MultiIndex, ...]
    coords: tuple[tuple[Fraction, ...], ...]
    sq_norms: tuple[Fraction, ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.indices)

    def polynomials(self) -> list[Polynomial]:
        """Monomial form of the orthogonal polynomials (unnormalized)."""
        if "poly" not in self._cache:
            d = len(self.indices[0])
            rod = [_rodrigues_monomial_coeffs(n) for n in self.indices]
            polys = []
            for row in self.coords:
                terms: dict = {}
                for c, coeffs in zip(row, rod):
                    if c:
                        for a, v in coeffs.items():
                            terms[a] = terms.get(a, 0) + c * v
                polys.append(Polynomial(terms, d))
            self._cache["poly"] = polys
        return self._cache["poly"]

    def barycentric_table(self) -> tuple[np.ndarray, np.ndarray]:
        """``(exponents, coefficients)`` for float evaluation of the orthonormal set.

        ``exponents`` has shape ``(N, d+1)``; ``coefficients`` has shape
        ``(r, N)`` and already includes the ``1/sqrt(norm)`` factor.
        """
        if "bary" not in self._cache:
            rod = [_rodrigues_barycentric_coeffs(n) for n in self.indices]
            exps = sorted({a for c in rod for a in c}, reverse=True)
            col = {a: i for i, a in enumerate(exps)}
            coef = np.zeros((len(self.coords), len(exps)))
            for k, row in enumerate(self.coords):
                acc = [Fraction(0)] * len(exps)
                for c, coeffs in zip(row, rod):
                    if c:
                        for a, v in coeffs.items():
                            acc[col[a]] += c * v
                sq = self.sq_norms[k]
                coef[k] = [math.copysign(math.sqrt(v * v / sq), v) for v in acc]
            self._cache["bary"] = (np.array(exps, dtype=int).reshape(len(exps), -1), coef)
        return self._cache["bary"]


def _gram_schmidt(indices: list[MultiIndex], d: int) -> DegreeBlock:
    ell = sum(indices[0])
    gram = _rodrigues_gram(indices, d)
    r = len(indices)
    coords: list[list[Fraction]] = []
    images: list[list[Fraction]] = []  # G @ coords[j]
    norms: list[Fraction] = []
    for k in range(r):
        v = [Fraction(int(i == k)) for i in range(r)]
        for q, gq, nq in zip(coords, images, norms):
            proj = gq[k] / nq
            if proj:
                v = [a - proj * b for a, b in zip(v, q)]
        gv = [sum((gram[i][j] * v[j] for j in range(r) if v[j]), Fraction(0)) for i in range(r)]
        nv = sum((a * b for a, b in zip(v, gv)), Fraction(0))
        if nv == 0:
            raise RuntimeError(f"Gram-Schmidt hit a zero vector at degree {ell}, index {indices[k]}")
        coords.append(v)
        images.append(gv)
        norms.append(nv)
    return DegreeBlock(
        degree=ell,
        indices=tuple(indices),
        coords=tuple(tuple(c) for c in coords),
        sq_norms=tuple(norms),
    )


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal basis ``{P_{l,k}}`` of polynomials on ``T^d`` up to degree ``L``."""

    d: int
    max_degree: int
    blocks: tuple[DegreeBlock, ...]

    @property
    def L(self) -> int:
        return self.max_degree

    def block(self, ell: int) -> DegreeBlock:
        if not 0 <= ell <= self.max_degree:
            raise IndexError(f"degree {ell} outside basis range 0..{self.max_degree}")
        return self.blocks[ell]

    def size(self, ell: int) -> int:
        return len(self.block(ell))

    def polynomial(self, ell: int, k: int) -> Polynomial:
        """Unnormalized ``P_{l,k}`` (0-based ``k``); divide by ``sqrt(sq_norm)``."""
        return self.block(ell).polynomials()[k]

    def sq_norm(self, ell: int, k: int) -> Fraction:
        return self.block(ell).sq_norms[k]

    def evaluate(self, x, degrees=None) -> list[np.ndarray]:
        """Orthonormal values at points ``x`` (shape ``(n, d)``).

        Returns one array of shape ``(n, r_l)`` per requested degree
        (default: all degrees ``0..L``).
        """
        x = check_simplex_points(x, self.d)
        lam = barycentric(x)
        degrees = range(self.max_degree + 1) if degrees is None else degrees
        top = max(degrees, default=0)
        powers = lam[:, :, None] ** np.arange(top + 1)  # (n, d+1, top+1)
        cols = np.arange(self.d + 1)
        out = []
        for ell in degrees:
            exps, coef = self.block(ell).barycentric_table()
            mono = np.prod(powers[:, cols, exps], axis=-1)  # (n, N)
            out.append(mono @ coef.T)
        return out

    def evaluate_one(self, ell: int, k: int, x) -> np.ndarray:
        return self.evaluate(x, degrees=[ell])[0][:, k]

    def to_dict(self) -> dict:
        def q(v: Fraction) -> list[str]:
            return [str(v.numerator), str(v.denominator)]

        degrees = []
        for b in self.blocks:
            polys = b.polynomials()
            degrees.append({
                "degree": b.degree,
                "indices": [list(n) for n in b.indices],
                "rodrigues_coords": [[q(c) for c in row] for row in b.coords],
                "sq_norms": [q(v) for v in b.sq_norms],
                "polynomials": [
                    {"exponents": [list(a) for a in p.terms], "coefficients": [q(c) for c in p.terms.values()]}
                    for p in polys
                ],
            })
        return {"schema": SCHEMA_VERSION, "kind": "orthonormal-basis", "d": self.d, "L": self.max_degree, "degrees": degrees}

    @classmethod
    def from_dict(cls, data: dict) -> "OrthonormalBasis":
        if data.get("schema") != SCHEMA_VERSION or data.get("kind") != "orthonormal-basis":
            raise ValueError("not a basis document of a supported schema")
        d = int(data["d"])

        def q(pair) -> Fraction:
            return Fraction(int(pair[0]), int(pair[1]))

        blocks = []
        for entry in data["degrees"]:
            block = DegreeBlock(
                degree=int(entry["degree"]),
                indices=tuple(tuple(n) for n in entry["indices"]),
                coords=tuple(tuple(q(c) for c in row) for row in entry["rodrigues_coords"]),
                sq_norms=tuple(q(v) for v in entry["sq_norms"]),
            )
            if "polynomials" in entry:
                block._cache["poly"] = [
                    Polynomial({tuple(a): q(c) for a, c in zip(p["exponents"], p["coefficients"])}, d)
                    for p in entry["polynomials"]
                ]
            blocks.append(block)
        return cls(d=d, max_degree=int(data["L"]), blocks=tuple(blocks))


def default_max_degree(d: int) -> int:
    return 12 if d <= 2 else 8


def build_basis(d: int, L: int, order: str = "graded-lex") -> OrthonormalBasis:
    """Exact orthonormal basis on ``T^d`` for degrees ``0..L``.

    ``order="reversed"`` runs Gram-Schmidt over the reversed within-degree
    ordering; it gives a different basis spanning the same spaces.
    """
    if d < 1 or L < 0:
        raise ValueError(f"need d >= 1 and L >= 0, got d={d}, L={L}")
    if order not in ("graded-lex", "reversed"):
        raise ValueError(f"unknown order {order!r}")
    return _build_basis(d, L, order)


@lru_cache(maxsize=16)
def _build_basis(d: int, L: int, order: str) -> OrthonormalBasis:
    blocks = []
    for ell in range(L + 1):
        idx = graded_lex(d, ell)
        if order == "reversed":
            idx = idx[::-1]
        blocks.append(_gram_schmidt(idx, d))
    return OrthonormalBasis(d=d, max_degree=L, blocks=tuple(blocks))


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "simplexqmc"))


def cache_key(d: int, L: int) -> str:
    blob = json.dumps({"schema": SCHEMA_VERSION, "d": d, "L": L}, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_or_build_basis(d: int, L: int, directory: str | os.PathLike | None = None) -> OrthonormalBasis:
    """Build the basis, reusing a JSON table from the cache directory if present."""
    directory = Path(directory) if directory is not None else cache_dir()
    path = directory / f"basis-d{d}-L{L}-{cache_key(d, L)}.json"
    if path.exists():
        try:
            return OrthonormalBasis.from_dict(json.loads(path.read_text()))
        except (ValueError, KeyError, json.JSONDecodeError):
            log.warning("ignoring unreadable basis cache %s", path)
    basis = build_basis(d, L)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(basis.to_dict()))
        tmp.replace(path)
    except OSError as exc:
        log.warning("could not write basis cache %s: %s", path, exc)
    return basis


# ---------------------------------------------------------------------------
# degree kernels
# ---------------------------------------------------------------------------

def gegenbauer(n: int, lam: float, u):
    """Gegenbauer polynomial ``C_n^(lam)(u)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    if lam <= 0:
        raise ValueError("parameter lambda must be positive")
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.abs(u_arr) > 1 + 1e-12):
        raise ValueError("argument outside [-1, 1]")
    prev = np.ones_like(u_arr)
    if n == 0:
        return prev if u_arr.ndim else float(prev)
    cur = 2.0 * lam * u_arr
    for k in range(2, n + 1):
        prev, cur = cur, (2.0 * (k + lam - 1) * u_arr * cur - (k + 2 * lam - 2) * prev) / k
    return cur if u_arr.ndim else float(cur)


def _pairs(x, y, d):
    x = check_simplex_points(x, d)
    y = check_simplex_points(y, d)
    if x.shape[0] != y.shape[0]:
        if x.shape[0] == 1:
            x = np.repeat(x, y.shape[0], axis=0)
        elif y.shape[0] == 1:
            y = np.repeat(y, x.shape[0], axis=0)
        else:
            raise ValueError("x and y must hold the same number of points")
    return x, y


def _scalar_or_array(values: np.ndarray, x):
    return float(values[0]) if np.ndim(x) == 1 else values


def degree_kernel_direct(basis: OrthonormalBasis, ell: int, x, y):
    """``P_l(x, y) = sum_k P_{l,k}(x) P_{l,k}(y)`` from the basis.

    ``x`` and ``y`` are single points or equal-length stacks of points.
    """
    if ell > basis.max_degree or ell < 0:
        raise IndexError(f"degree {ell} outside basis range 0..{basis.max_degree}")
    xs, ys = _pairs(x, y, basis.d)
    vx = basis.evaluate(xs, degrees=[ell])[0]
    vy = basis.evaluate(ys, degrees=[ell])[0]
    return _scalar_or_array(np.sum(vx * vy, axis=1), x)


@lru_cache(maxsize=64)
def _chebyshev_grid(n_nodes: int, dims: int) -> np.ndarray:
    k = np.arange(1, n_nodes + 1)
    t = np.cos((2 * k - 1) * np.pi / (2 * n_nodes))
    mesh = np.meshgrid(*([t] * dims), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def degree_kernel_closed(d: int, ell: int, x, y):
    """``P_l(x, y)`` from the Gegenbauer integral representation.

    The integrand is a polynomial of degree ``2l`` in each ``t_i``, so a
    tensor Gauss-Chebyshev rule with ``l+1`` nodes per axis is exact.  The
    Chebyshev measure on ``[-1, 1]`` has mass ``pi``, so the normalized
    form is ``(2l + d)/d`` times the node average.
    """
    if ell < 1:
        raise ValueError("closed form requires l >= 1; use degree_kernel_direct for l = 0")
    xs, ys = _pairs(x, y, d)
    root = np.sqrt(barycentric(xs) * barycentric(ys))  # (pairs, d+1)
    grid = _chebyshev_grid(ell + 1, d + 1)  # (nodes, d+1)
    out = np.empty(root.shape[0])
    chunk = max(1, 2_000_000 // grid.shape[0])
    for s in range(0, root.shape[0], chunk):
        u = np.clip(root[s:s + chunk] @ grid.T, -1.0, 1.0)
        out[s:s + chunk] = gegenbauer(2 * ell, d, u).mean(axis=1)
    out *= (2 * ell + d) / d
    return _scalar_or_array(out, x)


def degree_kernel_bound(d: int, ell: int) -> Fraction:
    """Exact ``b_l = (2l + d)/d * binom(2l + 2d - 1, 2l)`` with ``P_l(x, y) <= b_l``.

    Follows from ``|C_{2l}^(d)(u)| <= C_{2l}^(d)(1)`` in the Gegenbauer
    representation used by :func:`degree_kernel_closed`.
    """
    if ell < 1:
        raise ValueError("bound defined for l >= 1")
    return Fraction((2 * ell + d) * math.comb(2 * ell + 2 * d - 1, 2 * ell), d)


def apply_nabla(f: Polynomial, mixed: str = "strict") -> Polynomial:
    """Apply the simplex Laplacian-type operator whose eigenvalues are ``-l(l+d)``.

        sum_i x_i (1 - x_i) D_ii  -  2 sum_{i<j} x_i x_j D_ij  +  sum_i (1 - (d+1) x_i) D_i

    ``mixed="inclusive"`` lets the mixed sum run over ``i <= j`` instead; it
    exists to show that reading does not give the eigenvalue identity.
    """
    if mixed not in ("strict", "inclusive"):
        raise ValueError(f"unknown mixed-term convention {mixed!r}")
    d = f.dim
    xs = [Polynomial.variable(i, d) for i in range(d)]
    out = Polynomial.constant(0, d)
    for i in range(d):
        out = out + xs[i] * (1 - xs[i]) * f.diff(i, 2)
        out = out + (1 - (d + 1) * xs[i]) * f.diff(i)
    for i in range(d):
        for j in range(i if mixed == "inclusive" else i + 1, d):
            out = out - 2 * xs[i] * xs[j] * f.diff(i).diff(j)
    return out
