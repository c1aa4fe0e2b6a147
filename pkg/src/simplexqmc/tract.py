"""Weight families and the tractability classification of product-simplex integration.

With ``S(m) = sum_{j<=m} gamma_{m,j}``, integration is

* strongly polynomially tractable iff ``limsup S(m) < inf``,
* polynomially tractable iff ``beta = limsup S(m) / log(m + 1) < inf``,
* weakly tractable iff ``S(m) / m -> 0``.

Built-in families are decided in closed form; custom tables only
empirically, and their verdicts say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

from .kernel import KernelConstants, WeightSchedule
from .orthopoly import degree_kernel_bound
from .wce import neps_lower, neps_upper

KINDS = ("power", "constant", "log", "custom")


@dataclass(frozen=True)
class WeightFamily:
    """Weights ``gamma_{m,j}`` for every ``m``.

    kind : ``"power"`` (``c j^-a``), ``"constant"`` (``c``), ``"log"``
        (``c / log(j + 1)``) or ``"custom"``.
    table : for ``"custom"``, either a sequence ``gamma_j`` (used for every
        ``m <= len(table)``) or a callable ``m -> array of length m``.
    """

    kind: str
    c: float = 1.0
    a: float = 0.0
    table: Sequence[float] | Callable[[int], Sequence[float]] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind != "custom" and not self.c > 0:
            raise ValueError("scale c must be positive")
        if self.a < 0:
            raise ValueError("decay exponent a must be non-negative")
        if self.kind == "custom":
            if self.table is None:
                raise ValueError("custom family needs a table")
            if not callable(self.table):
                g = np.asarray(self.table, dtype=float)
                if g.ndim != 1 or g.size == 0 or not np.all(np.isfinite(g)) or np.any(g <= 0):
                    raise ValueError("custom weights must be positive and finite")

    @property
    def max_m(self) -> float:
        if self.kind == "custom" and not callable(self.table):
            return len(self.table)
        return math.inf

    def weights(self, m: int) -> np.ndarray:
        if m < 1:
            raise ValueError("m must be positive")
        j = np.arange(1, m + 1, dtype=float)
        if self.kind == "power":
            return self.c * j ** -self.a
        if self.kind == "constant":
            return np.full(m, float(self.c))
        if self.kind == "log":
            return self.c / np.log(j + 1.0)
        if callable(self.table):
            g = np.asarray(self.table(m), dtype=float)
            if g.shape != (m,) or not np.all(np.isfinite(g)) or np.any(g <= 0):
                raise ValueError(f"custom weights for m={m} must be {m} positive finite values")
            return g
        if m > len(self.table):
            raise ValueError(f"custom table has only {len(self.table)} weights")
        return np.asarray(self.table[:m], dtype=float)

    def schedule(self, m: int) -> WeightSchedule:
        return WeightSchedule(tuple(self.weights(m)))

    def sum_weights(self, m: int) -> float:
        return math.fsum(self.weights(m))

    @property
    def gamma_star(self) -> float:
        if self.kind in ("power", "constant"):
            return float(self.c)
        if self.kind == "log":
            return self.c / math.log(2.0)
        if callable(self.table):
            return max(float(np.max(self.weights(m))) for m in _probe_ms(1 << 12))
        return float(np.max(self.table))


def _probe_ms(cap: int) -> list[int]:
    ms, m = [], 1
    while m <= cap:
        ms.append(m)
        m *= 2
    return ms


@dataclass(frozen=True)
class TractabilityVerdict:
    strong_polynomial: bool
    polynomial: bool
    weak: bool
    beta: float
    limit_sum: float
    limit_ratio_m: float
    empirical: bool = False

    def to_dict(self) -> dict:
        def num(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")

        return {
            "strong_polynomial": self.strong_polynomial, "polynomial": self.polynomial, "weak": self.weak,
            "beta": num(self.beta), "limit_sum": num(self.limit_sum), "limit_ratio_m": num(self.limit_ratio_m),
            "empirical": self.empirical,
        }


def classify(family: WeightFamily, m_cap: int = 1 << 16) -> TractabilityVerdict:
    """Decide the three tractability conditions for ``family``."""
    inf = math.inf
    if family.kind == "constant" or (family.kind == "power" and family.a == 0):
        return TractabilityVerdict(False, False, False, inf, inf, float(family.c))
    if family.kind == "power":
        a, c = family.a, family.c
        if a > 1:
            return TractabilityVerdict(True, True, True, 0.0, float(c * zeta(a)), 0.0)
        if a == 1:
            return TractabilityVerdict(False, True, True, float(c), inf, 0.0)
        return TractabilityVerdict(False, False, True, inf, inf, 0.0)
    if family.kind == "log":
        return TractabilityVerdict(False, False, True, inf, inf, 0.0)
    return _classify_empirical(family, m_cap)


def _classify_empirical(family: WeightFamily, m_cap: int) -> TractabilityVerdict:
    # growth of S per unit log(m) over the last four octaves decides the verdicts
    cap = int(min(m_cap, family.max_m))
    if cap < 32:
        raise ValueError("custom table too short to extrapolate (need at least 32 weights)")
    lo = cap // 16
    s_cap, s_lo = family.sum_weights(cap), family.sum_weights(lo)
    s_half, s_lo_half = family.sum_weights(cap // 2), family.sum_weights(lo // 2)
    rate_cap = (s_cap - s_half) / math.log(2.0)
    rate_lo = (s_lo - s_lo_half) / math.log(2.0)
    rate_ratio = rate_cap / rate_lo if rate_lo > 0 else 0.0
    ratio_cap, ratio_lo = s_cap / cap, s_lo / lo

    strong = rate_ratio < 0.9
    polynomial = strong or rate_ratio < 1.1
    weak = polynomial or ratio_cap < 0.95 * ratio_lo
    beta = 0.0 if strong else (s_cap / math.log(cap + 1.0) if polynomial else math.inf)
    return TractabilityVerdict(
        strong, polynomial, weak, beta,
        limit_sum=s_cap if strong else math.inf,
        limit_ratio_m=0.0 if weak else ratio_cap,
        empirical=True,
    )


def c_dr_power_form(d: int, r: float, tol: float = 1e-12) -> float:
    """Looser constant ``M sum l^{2d} / [l(l+d)]^r`` with the smallest valid ``M = b_1``.

    ``b_l / l^{2d}`` is non-increasing, so ``b_l <= b_1 l^{2d}``.
    """
    from .errors import require_smoothness

    require_smoothness(d, r)
    M = float(degree_kernel_bound(d, 1))
    # terms ~ l^{2d-2r}; same first-term-plus-integral tail as for c_dr
    s = 2 * r - 2 * d
    n = 16
    while n ** (1 - s) / (s - 1) > tol / M and n < 10 ** 7:
        n *= 2
    ells = np.arange(1, n + 1, dtype=float)
    partial = math.fsum((ells ** (2 * d) / (ells * (ells + d)) ** r)[::-1])
    a = n + 1.0
    return M * (partial + a ** -s + a ** (1 - s) / (s - 1))


def m_exponent_bounds(verdict: TractabilityVerdict, d: int, r: float, c_tight: float) -> dict:
    """Upper bounds on the m-exponent ``c_dr * beta`` under both constants."""
    if not verdict.polynomial:
        return {"tight": math.inf, "power_form": math.inf}
    return {"tight": c_tight * verdict.beta, "power_form": c_dr_power_form(d, r) * verdict.beta}


def bound_curve(family: WeightFamily, epsilon: float, m_values, consts: KernelConstants) -> list[dict]:
    """Upper and lower node-count bounds ``n(eps, m)`` for each ``m``.

    Each row has ``m, sum_gamma, upper, upper_exp, lower, upper_eps2,
    m_exponent``; ``upper_eps2 = upper * eps^2`` does not depend on ``eps``.
    """
    if family.gamma_star > consts.gamma_star * (1 + 1e-12):
        raise ValueError(
            f"constants computed for gamma*={consts.gamma_star}, family needs {family.gamma_star}")
    rows = []
    for m in m_values:
        m = int(m)
        sched = family.schedule(m)
        total = math.fsum(sched.gammas)
        up = neps_upper(epsilon, sched, consts.c_dr)
        rows.append({
            "m": m,
            "sum_gamma": total,
            "upper": up,
            "upper_exp": math.exp(consts.c_dr * total) / epsilon ** 2,
            "lower": neps_lower(epsilon, sched, consts),
            "upper_eps2": up * epsilon ** 2,
            "m_exponent": consts.c_dr * total / math.log(m + 1.0),
        })
    return rows


CURVE_COLUMNS = ("m", "sum_gamma", "upper", "upper_exp", "lower", "upper_eps2", "m_exponent",
                 "strong_polynomial", "polynomial", "weak")


def curve_with_flags(rows: list[dict], verdict: TractabilityVerdict) -> list[dict]:
    flags = {"strong_polynomial": verdict.strong_polynomial, "polynomial": verdict.polynomial, "weak": verdict.weak}
    return [{**row, **flags} for row in rows]
