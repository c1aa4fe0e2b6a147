"""Empirical search for point sets with small worst-case error.

Best-of-``R`` random restarts realize the averaging argument behind the
existence bound; single-node exchange descent polishes a given set.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernel import KernelConstants, SimplexKernel, WeightSchedule, check_point_stack
from .wce import ErrorReport, enm_sq, error_report, random_point_set, worst_case_error


@dataclass(frozen=True)
class SearchConfig:
    n: int
    m: int
    d: int
    schedule: WeightSchedule
    restarts: int = 32
    exchange_iters: int = 0
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or self.d < 1:
            raise ValueError("n, m and d must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.exchange_iters < 0:
            raise ValueError("exchange_iters must be non-negative")
        if self.schedule.m != self.m:
            raise ValueError(f"schedule has m={self.schedule.m}, config has m={self.m}")

    def restart_seeds(self) -> list[np.random.SeedSequence]:
        # child i depends only on (seed, i), so a larger R extends a smaller one
        return np.random.SeedSequence(self.seed).spawn(self.restarts)

    def exchange_seed(self) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.seed, 0x5EED])


def _draw_and_score(config: SearchConfig, kernel: SimplexKernel, ss) -> tuple[np.ndarray, float]:
    T = random_point_set(config.n, config.m, config.d, ss)
    return T, enm_sq(T, config.schedule, kernel)


def best_of_random(config: SearchConfig, kernel: SimplexKernel, consts: KernelConstants):
    """Draw ``R`` uniform point sets and keep the one with the smallest ``e^2``.

    Ties go to the earliest draw.  Returns ``(points, report)``.
    """
    _check_kernel(config, kernel)
    seeds = config.restart_seeds()
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            draws = list(pool.map(lambda s: _draw_and_score(config, kernel, s), seeds))
    else:
        draws = [_draw_and_score(config, kernel, s) for s in seeds]
    best = min(range(len(draws)), key=lambda i: (draws[i][1], i))
    T, e2 = draws[best]
    return T, error_report(T, config.schedule, kernel, consts, e2=e2)


class _ExchangeState:
    """Running double sum of the product kernel with O(n m N) single-node updates."""

    def __init__(self, T: np.ndarray, schedule: WeightSchedule, kernel: SimplexKernel):
        self.T = T.copy()
        self.gammas = schedule.array
        self.kernel = kernel
        self.feats = [kernel.features(self.T[:, j]) for j in range(T.shape[1])]
        K = np.ones((T.shape[0], T.shape[0]))
        for F, gam in zip(self.feats, self.gammas):
            K *= 1.0 + gam * (F @ F.T)
        self.K = K
        self.total = math.fsum(K.ravel())

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def e2(self) -> float:
        return self.total / self.n ** 2 - 1.0

    def propose(self, i: int, point: np.ndarray):
        """Row of the product kernel if node ``i`` were replaced by ``point`` (shape ``(m, d)``)."""
        new_feats = [self.kernel.features(point[j][None])[0] for j in range(point.shape[0])]
        row = np.ones(self.n)
        diag = 1.0
        for F, f, gam in zip(self.feats, new_feats, self.gammas):
            row *= 1.0 + gam * (F @ f)
            diag *= 1.0 + gam * float(f @ f)
        row[i] = diag
        old = self.K[i]
        delta = 2.0 * (math.fsum(row) - math.fsum(old)) - (diag - old[i])
        return delta, row, new_feats

    def accept(self, i: int, point: np.ndarray, delta: float, row: np.ndarray, new_feats) -> None:
        self.T[i] = point
        for F, f in zip(self.feats, new_feats):
            F[i] = f
        self.K[i, :] = row
        self.K[:, i] = row
        self.total += delta


def exchange_descent(start, config: SearchConfig, kernel: SimplexKernel, consts: KernelConstants,
                     return_state: bool = False, local_step: float = 0.1):
    """Greedy single-node exchange: move one node, keep it iff ``e^2`` strictly drops.

    Half of the proposals are fresh uniform draws; the rest pull the node a
    random fraction (at most ``local_step``) toward a uniform point, which
    stays inside the simplex.  Runs exactly ``config.exchange_iters``
    proposals.  Returns
    ``(points, report)``, plus the internal running state when
    ``return_state`` is set (for checking the incremental sum).
    """
    _check_kernel(config, kernel)
    T = check_point_stack(start, config.d, config.m)
    state = _ExchangeState(T, config.schedule, kernel)
    rng = np.random.default_rng(config.exchange_seed())
    accepted = 0
    for _ in range(config.exchange_iters):
        i = int(rng.integers(state.n))
        point = random_point_set(1, config.m, config.d, rng)[0]
        if rng.random() < 0.5:
            t = local_step * rng.random()
            point = (1.0 - t) * state.T[i] + t * point
        delta, row, feats = state.propose(i, point)
        if delta < 0:
            state.accept(i, point, delta, row, feats)
            accepted += 1
    out = state.T.copy()
    report = error_report(out, config.schedule, kernel, consts, e2=state.e2())
    if return_state:
        return out, report, {"accepted": accepted, "running_e2": state.e2()}
    return out, report


def search(config: SearchConfig, kernel: SimplexKernel, consts: KernelConstants):
    """Best-of-random followed by exchange descent (if ``exchange_iters > 0``)."""
    T, report = best_of_random(config, kernel, consts)
    if config.exchange_iters:
        T, report = exchange_descent(T, config, kernel, consts)
    return T, report


def rate_study(n_values, config: SearchConfig, kernel: SimplexKernel, consts: KernelConstants):
    """Best-of-``R`` error for each ``n``; returns ``(rows, slope)``.

    ``slope`` is the least-squares slope of ``log e`` against ``log n``.
    """
    n_values = [int(n) for n in n_values]
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ValueError("n_values must be strictly increasing")
    rows: list[dict] = []
    for n in n_values:
        cfg = SearchConfig(n=n, m=config.m, d=config.d, schedule=config.schedule,
                           restarts=config.restarts, exchange_iters=0, seed=config.seed,
                           workers=config.workers)
        _, rep = best_of_random(cfg, kernel, consts)
        rows.append({
            "n": n, "best_e": rep.e_nm, "best_e2": rep.e_nm_sq,
            "expected_e2": rep.expected, "upper_e2": rep.upper_bound, "lower_e2": rep.lower_bound,
        })
    logn = np.log([r["n"] for r in rows])
    loge = np.log([max(r["best_e"], np.finfo(float).tiny) for r in rows])
    slope = float(np.polyfit(logn, loge, 1)[0]) if len(rows) > 1 else float("nan")
    return rows, slope


def _check_kernel(config: SearchConfig, kernel: SimplexKernel) -> None:
    if kernel.d != config.d:
        raise ValueError(f"kernel has d={kernel.d}, config has d={config.d}")


__all__ = [
    "SearchConfig", "best_of_random", "exchange_descent", "search", "rate_study",
    "ErrorReport", "worst_case_error",
]
