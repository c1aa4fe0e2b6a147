"""Worst-case error of equal-weight rules on products of simplices.

A rule uses ``n`` nodes ``t_i = (t_{i,1}, ..., t_{i,m})`` in ``(T^d)^m``,
stored as an array of shape ``(n, m, d)``.  Its squared worst-case error in
the weighted product space is

    e^2 = -1 + n^{-2} sum_{i,h} prod_j (1 + gamma_j g(t_{i,j}, t_{h,j})),

and the initial error is exactly one.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

import numpy as np

from .kernel import KernelConstants, SimplexKernel, WeightSchedule, c_dr, check_point_stack, s_dr
from .orthopoly import dim_space
from .simplex import uniform_sample

log = logging.getLogger(__name__)

CSV_COLUMNS = ("d", "r", "m", "n", "seed", "e2", "upper", "lower", "expected")


def random_point_set(n: int, m: int, d: int, seed=None) -> np.ndarray:
    """``n`` i.i.d. uniform nodes in ``(T^d)^m``; shape ``(n, m, d)``."""
    return uniform_sample(d, n * m, seed).reshape(n, m, d)


def coordinate_g(kernel: SimplexKernel, T: np.ndarray) -> np.ndarray:
    """Per-coordinate matrices ``g(t_{i,j}, t_{h,j})``; shape ``(m, n, n)``."""
    return np.stack([kernel.g(T[:, j], T[:, j]) for j in range(T.shape[1])])


def _product_kernel_matrix(G: np.ndarray, gammas: Iterable[float]) -> np.ndarray:
    out = np.ones(G.shape[1:])
    for Gj, gam in zip(G, gammas):
        out *= 1.0 + gam * Gj
    return out


def enm_sq(T, schedule: WeightSchedule, kernel: SimplexKernel) -> float:
    """Squared worst-case error of the rule with nodes ``T``."""
    T = check_point_stack(T, kernel.d, schedule.m)
    K = _product_kernel_matrix(coordinate_g(kernel, T), schedule.gammas)
    n = T.shape[0]
    return math.fsum(K.ravel()) / n ** 2 - 1.0


def worst_case_error(e2: float) -> float:
    """``sqrt(max(e2, 0))``; negative inputs come from truncation round-off."""
    if e2 < 0:
        log.warning("clamping negative squared error %.3g to zero", e2)
        return 0.0
    return math.sqrt(e2)


def e0m(schedule: WeightSchedule, kernel: SimplexKernel, diagnostic: bool = False,
        samples: int = 100_000, seed=None):
    """Initial error, exactly 1.

    With ``diagnostic=True`` also returns a Monte Carlo estimate of the
    double integral of ``K_m`` and its standard error:
    ``(1.0, estimate, stderr)``.
    """
    if not diagnostic:
        return 1.0
    rng = np.random.default_rng(seed)
    d, m = kernel.d, schedule.m
    vals = np.ones(samples)
    for gam in schedule.gammas:
        x = uniform_sample(d, samples, rng)
        y = uniform_sample(d, samples, rng)
        vals *= 1.0 + gam * kernel.g_pairs(x, y)
    return 1.0, float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


def expected_enm_sq(n: int, schedule: WeightSchedule, kernel: SimplexKernel, tol: float = 1e-12) -> float:
    """Mean of ``e^2`` over i.i.d. uniform nodes: ``(prod_j (1 + gamma_j s_dr) - 1) / n``."""
    if n < 1:
        raise ValueError("n must be positive")
    s = s_dr(kernel.d, kernel.r, tol)
    return (math.prod(1.0 + g * s for g in schedule.gammas) - 1.0) / n


def existence_upper_bound(n: int, schedule: WeightSchedule, kernel: SimplexKernel, tol: float = 1e-12) -> float:
    """Some ``n``-point rule has ``e^2`` at most ``(prod_j (1 + gamma_j c_dr) - 1) / n``."""
    if n < 1:
        raise ValueError("n must be positive")
    c = c_dr(kernel.d, kernel.r, tol)
    return (math.prod(1.0 + g * c for g in schedule.gammas) - 1.0) / n


def lower_bound(n: int, schedule: WeightSchedule, consts: KernelConstants) -> float:
    """Every ``n``-point rule has ``e^2 >= -1 + prod_j (1 + b gtilde_min gamma_j) / n``."""
    if n < 1:
        raise ValueError("n must be positive")
    bg = consts.b_dr * consts.gtilde_min_estimate
    return -1.0 + math.prod(1.0 + bg * g for g in schedule.gammas) / n


def _check_eps(epsilon: float) -> None:
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")


def neps_upper(epsilon: float, schedule: WeightSchedule, c: float) -> float:
    """Sufficient node count ``eps^-2 prod_j (1 + gamma_j c_dr)`` (callers take the ceiling)."""
    _check_eps(epsilon)
    return math.exp(math.fsum(math.log1p(g * c) for g in schedule.gammas)) / epsilon ** 2


def neps_lower(epsilon: float, schedule: WeightSchedule, consts: KernelConstants) -> float:
    """Necessary node count ``exp(alpha b gtilde_min sum_j gamma_j) / (1 + eps^2)``."""
    _check_eps(epsilon)
    if consts.M_dr <= 0:
        return 1.0 / (1.0 + epsilon ** 2)
    rate = consts.alpha_dr * consts.b_dr * consts.gtilde_min_estimate
    return math.exp(rate * math.fsum(schedule.gammas)) / (1.0 + epsilon ** 2)


# ---------------------------------------------------------------------------
# test functions with finite spectrum
# ---------------------------------------------------------------------------

class TensorFourierFunction:
    """Finite expansion ``sum a[l, k] prod_j P_{l_j, k_j}(x_j)``.

    ``coefficients`` maps ``(ells, ks)`` (two length-``m`` tuples, ``k``
    0-based) to a real coefficient.
    """

    def __init__(self, coefficients: Mapping[tuple[tuple[int, ...], tuple[int, ...]], float], d: int, m: int):
        clean = {}
        for (ells, ks), a in coefficients.items():
            ells, ks = tuple(int(v) for v in ells), tuple(int(v) for v in ks)
            if len(ells) != m or len(ks) != m:
                raise ValueError(f"index {(ells, ks)} does not have length m={m}")
            for ell, k in zip(ells, ks):
                if ell < 0 or not 0 <= k < dim_space(d, ell):
                    raise ValueError(f"index (l={ell}, k={k}) out of range for d={d}")
            if a:
                clean[(ells, ks)] = clean.get((ells, ks), 0.0) + float(a)
        self.d, self.m = d, m
        self.coefficients = clean

    @property
    def max_degree(self) -> int:
        return max((max(e) for e, _ in self.coefficients), default=0)

    def scaled(self, c: float) -> "TensorFourierFunction":
        return TensorFourierFunction({key: c * a for key, a in self.coefficients.items()}, self.d, self.m)

    @classmethod
    def random(cls, d: int, m: int, max_degree: int, terms: int, seed=None) -> "TensorFourierFunction":
        """``terms`` random indices with ``l_j <= max_degree``, coefficients uniform in [-1, 1]."""
        rng = np.random.default_rng(seed)
        coeffs = {}
        for _ in range(terms):
            ells = tuple(int(v) for v in rng.integers(0, max_degree + 1, size=m))
            ks = tuple(int(rng.integers(0, dim_space(d, e))) for e in ells)
            coeffs[(ells, ks)] = float(rng.uniform(-1.0, 1.0))
        return cls(coeffs, d, m)

    def __call__(self, T, basis) -> np.ndarray:
        """Values at nodes ``T`` of shape ``(n, m, d)`` using orthonormal ``basis``."""
        T = check_point_stack(T, self.d, self.m)
        top = self.max_degree
        if basis.max_degree < top:
            raise ValueError(f"basis degree {basis.max_degree} below function degree {top}")
        per_coord = [basis.evaluate(T[:, j], degrees=range(top + 1)) for j in range(self.m)]
        out = np.zeros(T.shape[0])
        for (ells, ks), a in self.coefficients.items():
            term = np.full(T.shape[0], a)
            for j, (ell, k) in enumerate(zip(ells, ks)):
                term *= per_coord[j][ell][:, k]
            out += term
        return out


def hm_norm_sq(f: TensorFourierFunction, schedule: WeightSchedule, r: float) -> float:
    """Squared norm ``sum prod_j B(l_j) a^2`` with ``B(0) = 1``, ``B(l) = [l(l+d)]^r / gamma_j``."""
    if schedule.m != f.m:
        raise ValueError(f"function has m={f.m}, schedule has m={schedule.m}")
    total = []
    for (ells, _), a in f.coefficients.items():
        w = 1.0
        for ell, gam in zip(ells, schedule.gammas):
            if ell:
                w *= (ell * (ell + f.d)) ** r / gam
        total.append(w * a * a)
    return math.fsum(total)


def integrate_exact(f: TensorFourierFunction) -> float:
    """Normalized integral over ``(T^d)^m``: the coefficient of the all-zero index."""
    return f.coefficients.get(((0,) * f.m, (0,) * f.m), 0.0)


def qmc_apply(f: TensorFourierFunction, T, basis) -> float:
    """Equal-weight average of ``f`` over the nodes ``T``."""
    vals = f(T, basis)
    return math.fsum(vals) / vals.shape[0]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorReport:
    e_nm_sq: float
    e_nm: float
    e_0m: float
    upper_bound: float
    lower_bound: float
    expected: float
    n: int
    m: int
    d: int
    r: float
    truncation_degree: int
    schedule_digest: str

    def to_dict(self) -> dict:
        out = {"schema": 1, "kind": "error-report"}
        out.update(asdict(self))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def error_report(T, schedule: WeightSchedule, kernel: SimplexKernel, consts: KernelConstants,
                 e2: float | None = None) -> ErrorReport:
    T = check_point_stack(T, kernel.d, schedule.m)
    n = T.shape[0]
    if e2 is None:
        e2 = enm_sq(T, schedule, kernel)
    return ErrorReport(
        e_nm_sq=e2, e_nm=worst_case_error(e2), e_0m=1.0,
        upper_bound=existence_upper_bound(n, schedule, kernel),
        lower_bound=lower_bound(n, schedule, consts),
        expected=expected_enm_sq(n, schedule, kernel),
        n=n, m=schedule.m, d=kernel.d, r=kernel.r,
        truncation_degree=kernel.L, schedule_digest=schedule.digest(),
    )


def csv_row(report: ErrorReport, seed) -> dict:
    return {
        "d": report.d, "r": report.r, "m": report.m, "n": report.n, "seed": seed,
        "e2": report.e_nm_sq, "upper": report.upper_bound, "lower": report.lower_bound,
        "expected": report.expected,
    }


def write_csv(rows: Iterable[Mapping], path_or_file, columns=CSV_COLUMNS) -> None:
    """Write rows with a header line; ``path_or_file`` may be a path or an open text file."""
    if hasattr(path_or_file, "write"):
        writer = csv.DictWriter(path_or_file, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        write_csv(rows, fh, columns)


# ---------------------------------------------------------------------------
# point-set files
# ---------------------------------------------------------------------------

def point_set_to_dict(T: np.ndarray) -> dict:
    T = np.asarray(T, dtype=float)
    n, m, d = T.shape
    return {"schema": 1, "kind": "point-set", "n": n, "m": m, "d": d, "points": T.tolist()}


def point_set_from_dict(data: dict) -> np.ndarray:
    if data.get("kind") != "point-set":
        raise ValueError("not a point-set document")
    T = np.asarray(data["points"], dtype=float)
    return check_point_stack(T, int(data["d"]), int(data["m"]))


def save_point_set(T: np.ndarray, path) -> None:
    """Save as JSON (``.json``) or CSV with one row of ``m*d`` coordinates per node."""
    T = np.asarray(T, dtype=float)
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(point_set_to_dict(T), fh)
        return
    n, m, d = T.shape
    header = [f"t{j + 1}_x{i + 1}" for j in range(m) for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in T.reshape(n, m * d):
            w.writerow([repr(float(v)) for v in row])


def load_point_set(path, d: int | None = None, m: int | None = None) -> np.ndarray:
    """Read a point set written by :func:`save_point_set`.

    For CSV input ``d`` is taken from the header when not given.
    """
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            T = point_set_from_dict(json.load(fh))
        return check_point_stack(T, d, m)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if d is None:
        d = max(int(h.split("_x")[1]) for h in header)
    width = len(header)
    if width % d:
        raise ValueError(f"{width} columns are not a multiple of d={d}")
    arr = np.array([[float(v) for v in row] for row in body], dtype=float)
    return check_point_stack(arr.reshape(len(body), width // d, d), d, m)
