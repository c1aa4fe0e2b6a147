"""Weighted reproducing kernels on the simplex and on products of simplices.

For smoothness ``r > d + 1`` and weight ``gamma > 0`` the one-factor kernel is

    K_1(x, y) = 1 + gamma * g(x, y),   g(x, y) = sum_{l>=1} P_l(x, y) / [l (l + d)]^r,

and the product kernel is ``K_m(x, y) = prod_j (1 + gamma_j g(x_j, y_j))``.

``g`` is evaluated through a feature map: with orthonormal values
``Phi_l(x)`` stacked as ``F(x) = [w_1^{1/2} Phi_1(x), ..., w_L^{1/2} Phi_L(x)]``
we have ``g_L(x, y) = F(x) . F(y)``.  Truncation at degree ``L`` is
controlled by the majorant ``sum_{l>L} b_l / [l(l+d)]^r`` built from the
per-degree bound ``b_l`` of :func:`~simplexqmc.orthopoly.degree_kernel_bound`.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import require_smoothness
from .orthopoly import OrthonormalBasis, build_basis, default_max_degree, degree_kernel_bound, dim_space
from .simplex import check_simplex_points, graded_lex

log = logging.getLogger(__name__)

_EXACT_TERMS = 64
_MAX_SERIES_TERMS = 10 ** 7


# ---------------------------------------------------------------------------
# series constants
# ---------------------------------------------------------------------------

def _log_degree_weight(d: int, r: float, ells: np.ndarray) -> np.ndarray:
    return -r * (np.log(ells) + np.log(ells + d))


def _log_numerators(d: int, kind: str, ells: np.ndarray) -> np.ndarray:
    if kind == "bound":
        # log[(2l+d)/d * binom(2l+2d-1, 2l)]
        return (np.log(2 * ells + d) - math.log(d)
                + gammaln(2 * ells + 2 * d) - gammaln(2 * ells + 1) - gammaln(2 * d))
    # log binom(l+d-1, l)
    return gammaln(ells + d) - gammaln(ells + 1) - gammaln(d)


def _numerator(d: int, kind: str, ell: int) -> float:
    return float(degree_kernel_bound(d, ell)) if kind == "bound" else float(dim_space(d, ell))


def _tail_after(d: int, r: float, kind: str, n: int) -> float:
    """Rigorous bound on ``sum_{l>n} num_l / [l(l+d)]^r``.

    ``num_l / l^p`` is non-increasing (``p = 2d`` for the bound, ``d - 1``
    for the dimension), and ``[l(l+d)]^r >= l^{2r}``, so every later term is
    at most ``K l^{p-2r}`` with ``K = num_{n+1} / (n+1)^p``; the remaining
    power sum is bounded by its first term plus the integral.
    """
    p = 2 * d if kind == "bound" else d - 1
    s = 2 * r - p
    a = n + 1
    k = math.exp(_log_numerators(d, kind, np.array([float(a)]))[0] - p * math.log(a))
    return k * (a ** -s + a ** (1 - s) / (s - 1))


def _partial_terms(d: int, r: float, kind: str, lo: int, hi: int) -> np.ndarray:
    """Terms ``num_l / [l(l+d)]^r`` for ``l = lo..hi``."""
    if hi < lo:
        return np.zeros(0)
    ells = np.arange(lo, hi + 1, dtype=float)
    out = np.exp(_log_numerators(d, kind, ells) + _log_degree_weight(d, r, ells))
    for i, ell in enumerate(range(lo, min(hi, _EXACT_TERMS) + 1)):
        out[i] = _numerator(d, kind, ell) / (ell * (ell + d)) ** r
    return out


def _series(d: int, r: float, kind: str, start: int, tol: float) -> tuple[float, float, int]:
    """``(partial_sum, tail_bound, last_index)`` of the series from ``start``."""
    require_smoothness(d, r)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    n = max(start, 16)
    while _tail_after(d, r, kind, n) > tol and n < _MAX_SERIES_TERMS:
        n = min(2 * n, _MAX_SERIES_TERMS)
    tail = _tail_after(d, r, kind, n)
    if tail > tol:
        log.warning("series tail %.3g exceeds tolerance %.3g at %d terms (d=%d, r=%g)", tail, tol, n, d, r)
    terms = _partial_terms(d, r, kind, start, n)
    return math.fsum(terms[::-1]), tail, n


def c_dr(d: int, r: float, tol: float = 1e-12) -> float:
    """``c_{d,r} = sum_{l>=1} b_l / [l(l+d)]^r``, returned as a certified upper value.

    The result is the partial sum plus the analytic tail bound, so it never
    falls below the true series and exceeds it by at most ``tol``.
    """
    partial, tail, _ = _series(d, r, "bound", 1, tol)
    return partial + tail


def s_dr(d: int, r: float, tol: float = 1e-12) -> float:
    """``s_{d,r} = sum_{l>=1} r_l^d / [l(l+d)]^r`` (trace of ``g`` over ``T^d``)."""
    partial, _, _ = _series(d, r, "dim", 1, tol)
    return partial


def truncation_tail(d: int, r: float, L: int) -> float:
    """Certified bound on ``|g(x, y) - g_L(x, y)|`` over ``T^d x T^d``."""
    partial, tail, _ = _series(d, r, "bound", L + 1, 1e-16)
    return partial + tail


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationPolicy:
    """Pick the smallest degree whose certified tail meets ``tail_tolerance``.

    If ``max_degree`` (default 12 for ``d <= 2``, 8 for ``d = 3``) is reached
    first, the cap is used and the achieved tail bound is what gets reported.
    """

    tail_tolerance: float = 1e-12
    max_degree: int | None = None

    def __post_init__(self):
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")
        if self.max_degree is not None and self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")

    def resolve(self, d: int, r: float) -> tuple[int, float]:
        """``(L, tail_bound)`` for this policy."""
        return _resolve(self.tail_tolerance, self.max_degree, d, r)


@lru_cache(maxsize=None)
def _resolve(tol: float, cap: int | None, d: int, r: float) -> tuple[int, float]:
    require_smoothness(d, r)
    cap = default_max_degree(d) if cap is None else cap
    for L in range(1, cap + 1):
        tail = truncation_tail(d, r, L)
        if tail <= tol:
            return L, tail
    log.warning("degree cap L=%d leaves a certified tail of %.3g > %.3g (d=%d, r=%g)", cap, tail, tol, d, r)
    return cap, tail


@dataclass(frozen=True)
class KernelParams:
    d: int
    r: float
    gamma: float = 1.0
    truncation: TruncationPolicy = field(default_factory=TruncationPolicy)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")
        require_smoothness(self.d, self.r)
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class WeightSchedule:
    """Per-coordinate weights ``gamma_{m,1..m}`` of the product space."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(v) for v in np.atleast_1d(self.gammas))
        if not g:
            raise ValueError("schedule needs at least one weight")
        if not all(math.isfinite(v) and v > 0 for v in g):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "gammas", g)

    @classmethod
    def constant(cls, gamma: float, m: int) -> "WeightSchedule":
        return cls((gamma,) * m)

    @property
    def m(self) -> int:
        return len(self.gammas)

    @property
    def gamma_star(self) -> float:
        return max(self.gammas)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.gammas)

    def digest(self) -> str:
        import hashlib

        return hashlib.sha256(json.dumps(self.gammas).encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# kernel evaluation
# ---------------------------------------------------------------------------

class SimplexKernel:
    """The weight-free series ``g`` on ``T^d`` at smoothness ``r``, truncated at ``L``.

    Parameters
    ----------
    d, r : dimension and smoothness, ``r > d + 1``.
    truncation : TruncationPolicy, optional
    basis : OrthonormalBasis, optional
        Reuse a prebuilt basis (its degree must cover the resolved ``L``).
    """

    def __init__(self, d: int, r: float, truncation: TruncationPolicy | None = None,
                 basis: OrthonormalBasis | None = None):
        require_smoothness(d, r)
        self.d = d
        self.r = float(r)
        self.truncation = truncation or TruncationPolicy()
        self.L, self.tail_bound = self.truncation.resolve(d, self.r)
        if basis is None:
            basis = build_basis(d, self.L)
        elif basis.d != d or basis.max_degree < self.L:
            raise ValueError(f"basis (d={basis.d}, L={basis.max_degree}) does not cover d={d}, L={self.L}")
        self.basis = basis
        ells = np.arange(1, self.L + 1, dtype=float)
        self.degree_weights = np.exp(_log_degree_weight(d, self.r, ells))

    @classmethod
    def from_params(cls, params: KernelParams) -> "SimplexKernel":
        return _kernel_for(params.d, params.r, params.truncation)

    def get_params(self) -> dict:
        return {"d": self.d, "r": self.r, "L": self.L, "tail_tolerance": self.truncation.tail_tolerance}

    def __repr__(self):
        return f"SimplexKernel(d={self.d}, r={self.r:g}, L={self.L}, tail_bound={self.tail_bound:.3g})"

    def features(self, x) -> np.ndarray:
        """Feature rows ``F(x)`` with ``g_L(x, y) = F(x) @ F(y)``; shape ``(n, N)``."""
        vals = self.basis.evaluate(x, degrees=range(1, self.L + 1))
        return np.hstack([np.sqrt(w) * v for w, v in zip(self.degree_weights, vals)])

    def g(self, x, y) -> np.ndarray:
        """Matrix ``g(x_i, y_j)`` for point stacks ``x`` and ``y``."""
        return self.features(x) @ self.features(y).T

    def g_pairs(self, x, y) -> np.ndarray:
        """Elementwise ``g(x_i, y_i)``."""
        fx, fy = self.features(x), self.features(y)
        if fx.shape[0] != fy.shape[0]:
            raise ValueError("x and y must hold the same number of points")
        return np.einsum("ij,ij->i", fx, fy)

    def gtilde(self, x) -> np.ndarray:
        """Diagonal ``g(x, x)`` (non-negative)."""
        f = self.features(x)
        return np.einsum("ij,ij->i", f, f)

    def k1(self, x, y, gamma: float) -> np.ndarray:
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return 1.0 + gamma * self.g(x, y)

    def km(self, X, Y, schedule: WeightSchedule) -> np.ndarray:
        """Product kernel matrix between point sets of shape ``(n, m, d)``."""
        X = check_point_stack(X, self.d, schedule.m)
        Y = check_point_stack(Y, self.d, schedule.m)
        out = np.ones((X.shape[0], Y.shape[0]))
        for j, gam in enumerate(schedule.gammas):
            out *= 1.0 + gam * self.g(X[:, j], Y[:, j])
        return out


@lru_cache(maxsize=32)
def _kernel_for(d: int, r: float, truncation: TruncationPolicy) -> SimplexKernel:
    return SimplexKernel(d, r, truncation)


def check_point_stack(T, d: int | None = None, m: int | None = None) -> np.ndarray:
    """Validate a product point set given as an array of shape ``(n, m, d)``."""
    arr = np.asarray(T, dtype=float)
    if arr.ndim == 2 and m == 1:
        arr = arr[:, None, :]
    if arr.ndim != 3:
        raise ValueError(f"product points must have shape (n, m, d), got {arr.shape}")
    n, mm, dd = arr.shape
    if n < 1:
        raise ValueError("point set is empty")
    if m is not None and mm != m:
        raise ValueError(f"point set has m={mm} components, schedule has m={m}")
    check_simplex_points(arr.reshape(n * mm, dd), d)
    return arr


def _single(v: np.ndarray, x, y):
    return float(v.reshape(-1)[0]) if np.ndim(x) == 1 and np.ndim(y) == 1 else v


def g_eval(x, y, params: KernelParams):
    """``g(x, y)``: scalar for two single points, elementwise for stacks."""
    kern = SimplexKernel.from_params(params)
    xs = check_simplex_points(x, params.d)
    ys = check_simplex_points(y, params.d)
    if xs.shape[0] != ys.shape[0]:
        if xs.shape[0] == 1:
            xs = np.repeat(xs, ys.shape[0], axis=0)
        elif ys.shape[0] == 1:
            ys = np.repeat(ys, xs.shape[0], axis=0)
    return _single(kern.g_pairs(xs, ys), x, y)


def k1_eval(x, y, params: KernelParams):
    v = g_eval(x, y, params)
    return 1.0 + params.gamma * v


def km_eval(X, Y, schedule: WeightSchedule, params: KernelParams):
    """``K_m(X, Y)`` for product points of shape ``(m, d)`` (or stacks ``(n, m, d)``)."""
    Xa, Ya = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    single = Xa.ndim == 2
    if Xa.shape != Ya.shape:
        raise ValueError(f"shape mismatch {Xa.shape} vs {Ya.shape}")
    if single:
        Xa, Ya = Xa[None], Ya[None]
    Xa = check_point_stack(Xa, params.d, schedule.m)
    Ya = check_point_stack(Ya, params.d, schedule.m)
    kern = SimplexKernel.from_params(params)
    out = np.ones(Xa.shape[0])
    for j, gam in enumerate(schedule.gammas):
        out *= 1.0 + gam * kern.g_pairs(Xa[:, j], Ya[:, j])
    return float(out[0]) if single else out


# ---------------------------------------------------------------------------
# extremum estimates
# ---------------------------------------------------------------------------

def simplex_grid(d: int, pitch: float) -> np.ndarray:
    """All points of ``T^d`` on the lattice with spacing ``pitch`` (``1/pitch`` integral)."""
    k = round(1.0 / pitch)
    if k < 1 or abs(k * pitch - 1.0) > 1e-9:
        raise ValueError("pitch must be 1/k for a positive integer k")
    pts = [a for s in range(k + 1) for a in graded_lex(d, s)]
    return np.array(pts, dtype=float) / k


def _feasible(z: np.ndarray, d: int) -> np.ndarray:
    blocks = z.reshape(z.shape[0], -1, d)
    return np.all(blocks >= 0.0, axis=(1, 2)) & np.all(blocks.sum(axis=2) <= 1.0, axis=1)


def _directions(dim: int, d: int) -> np.ndarray:
    dirs = []
    for b in range(dim // d):
        for i in range(d):
            e = np.zeros(dim)
            e[b * d + i] = 1.0
            dirs += [e, -e]
            for j in range(i + 1, d):
                f = np.zeros(dim)
                f[b * d + i], f[b * d + j] = 1.0, -1.0
                dirs += [f, -f]
    return np.array(dirs)


def pattern_search(fun, z0, d: int, step: float, min_step: float = 1e-9, max_iter: int = 2000):
    """Minimize ``fun`` over products of simplices by compass search.

    ``fun`` maps a batch of shape ``(B, p*d)`` to ``(B,)``.  Moves leaving the
    domain are skipped; the step halves whenever no move improves.
    """
    z = np.asarray(z0, dtype=float).copy()
    best = float(fun(z[None])[0])
    dirs = _directions(z.size, d)
    for _ in range(max_iter):
        if step < min_step:
            break
        cand = z + step * dirs
        ok = _feasible(cand, d)
        if not np.any(ok):
            step /= 2
            continue
        cand = cand[ok]
        vals = fun(cand)
        i = int(np.argmin(vals))
        if vals[i] < best:
            z, best = cand[i], float(vals[i])
        else:
            step /= 2
    return z, best


def _pairwise_extremes(feat: np.ndarray, sign: float, keep: int, chunk: int = 1024):
    # best `keep` rows by their row-optimum of sign * F F^T
    n = feat.shape[0]
    row_best = np.empty(n)
    row_arg = np.empty(n, dtype=int)
    for s in range(0, n, chunk):
        block = sign * (feat[s:s + chunk] @ feat.T)
        row_arg[s:s + chunk] = np.argmin(block, axis=1)
        row_best[s:s + chunk] = block[np.arange(block.shape[0]), row_arg[s:s + chunk]]
    order = np.argsort(row_best, kind="stable")[:keep]
    return [(int(i), int(row_arg[i]), float(sign * row_best[i])) for i in order]


def estimate_g_extrema(kernel: SimplexKernel, pitch: float = 1 / 32, starts: int = 4) -> tuple[float, float]:
    """Sampled ``(g_min, g_max)`` over ``T^d x T^d``.

    A lattice scan picks the best ``starts`` cells, each refined by
    :func:`pattern_search`.  The minimum is an upper estimate of the true
    minimum and the maximum a lower estimate of the true maximum.
    """
    grid = simplex_grid(kernel.d, pitch)
    feat = kernel.features(grid)
    d = kernel.d

    def g_fun(z):
        return kernel.g_pairs(z[:, :d], z[:, d:])

    def neg_g_fun(z):
        return -g_fun(z)

    g_min = np.inf
    for i, j, val in _pairwise_extremes(feat, 1.0, starts):
        _, v = pattern_search(g_fun, np.concatenate([grid[i], grid[j]]), d, pitch / 2)
        g_min = min(g_min, val, v)
    g_max = -np.inf
    for i, j, val in _pairwise_extremes(feat, -1.0, starts):
        _, v = pattern_search(neg_g_fun, np.concatenate([grid[i], grid[j]]), d, pitch / 2)
        g_max = max(g_max, val, -v)
    return g_min, g_max


def estimate_gtilde_min(kernel: SimplexKernel, pitch: float = 1 / 32, starts: int = 4) -> float:
    """Sampled minimum of ``g(x, x)`` over ``T^d``."""
    grid = simplex_grid(kernel.d, pitch)
    vals = kernel.gtilde(grid)
    best = float(vals.min())
    for i in np.argsort(vals, kind="stable")[:starts]:
        _, v = pattern_search(kernel.gtilde, grid[i], kernel.d, pitch / 2)
        best = min(best, v)
    return best


def b_dr(gamma_star: float, g_min: float) -> float:
    """Weight shrink factor ``min(1, 1 / (gamma* |g_min|))``."""
    if not gamma_star > 0:
        raise ValueError("gamma_star must be positive")
    if not math.isfinite(g_min):
        raise ValueError("g_min must be finite")
    if g_min >= 0:
        return 1.0
    return min(1.0, 1.0 / (gamma_star * abs(g_min)))


@dataclass(frozen=True)
class KernelConstants:
    d: int
    r: float
    gamma_star: float
    c_dr: float
    s_dr: float
    g_min_estimate: float
    g_max_estimate: float
    gtilde_min_estimate: float
    b_dr: float
    M_dr: float
    alpha_dr: float
    truncation_degree: int
    truncation_tail_bound: float
    tail_tolerance: float
    series_tolerance: float
    grid_pitch: float

    def to_dict(self) -> dict:
        out = {"schema": 1, "kind": "kernel-constants"}
        out.update(asdict(self))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def compute_constants(kernel: SimplexKernel, gamma_star: float, pitch: float = 1 / 32,
                      series_tol: float = 1e-12) -> KernelConstants:
    """All constants entering the error bounds for one ``(d, r, gamma*)``."""
    if not gamma_star > 0:
        raise ValueError("gamma_star must be positive")
    c = c_dr(kernel.d, kernel.r, series_tol)
    s = s_dr(kernel.d, kernel.r, series_tol)
    gmin, gmax = estimate_g_extrema(kernel, pitch)
    gt = max(estimate_gtilde_min(kernel, pitch), 0.0)
    b = b_dr(gamma_star, gmin)
    M = b * gt * gamma_star
    alpha = math.log1p(M) / M if M > 0 else 1.0
    return KernelConstants(
        d=kernel.d, r=kernel.r, gamma_star=float(gamma_star),
        c_dr=c, s_dr=s, g_min_estimate=gmin, g_max_estimate=gmax, gtilde_min_estimate=gt,
        b_dr=b, M_dr=M, alpha_dr=alpha,
        truncation_degree=kernel.L, truncation_tail_bound=kernel.tail_bound,
        tail_tolerance=kernel.truncation.tail_tolerance, series_tolerance=series_tol,
        grid_pitch=pitch,
    )
