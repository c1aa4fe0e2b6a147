"""Invariant suite run by ``simplexqmc verify``.

Each check returns a :class:`CheckResult`; sizes are smaller than in the
test suite so a full run takes seconds.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .kernel import SimplexKernel, TruncationPolicy, WeightSchedule, compute_constants
from .orthopoly import apply_nabla, degree_kernel_bound, degree_kernel_closed, degree_kernel_direct
from .simplex import Polynomial, gram_matrix, poly_inner_product, uniform_sample
from .tract import WeightFamily, bound_curve, classify
from .wce import (TensorFourierFunction, e0m, enm_sq, hm_norm_sq, integrate_exact, lower_bound,
                  qmc_apply, random_point_set, existence_upper_bound)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _orthonormal(kernel: SimplexKernel, **_) -> tuple[bool, str]:
    basis = kernel.basis
    top = min(basis.max_degree, 6)
    polys, norms = [], []
    for ell in range(top + 1):
        for k in range(basis.size(ell)):
            polys.append(basis.polynomial(ell, k))
            norms.append(basis.sq_norm(ell, k))
    G = gram_matrix(polys)
    bad = sum(G[i][j] != (norms[i] if i == j else 0) for i in range(len(G)) for j in range(len(G)))
    return bad == 0, f"{len(polys)} polynomials up to degree {top}, {bad} wrong entries"


def _eigen(kernel: SimplexKernel, **_) -> tuple[bool, str]:
    basis, d = kernel.basis, kernel.d
    top = min(basis.max_degree, 6)
    bad = 0
    for ell in range(top + 1):
        for k in range(basis.size(ell)):
            p = basis.polynomial(ell, k)
            bad += apply_nabla(p) != p * (-ell * (ell + d))
    return bad == 0, f"degrees 0..{top}, {bad} failures"


def _zero_mean(kernel: SimplexKernel, **_) -> tuple[bool, str]:
    basis = kernel.basis
    one = Polynomial.constant(1, kernel.d)
    bad = sum(poly_inner_product(basis.polynomial(ell, k), one) != 0
              for ell in range(1, basis.max_degree + 1) for k in range(basis.size(ell)))
    return bad == 0, f"{bad} basis elements with nonzero mean"


def _dual_path(kernel: SimplexKernel, seed: int, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    x = uniform_sample(kernel.d, 20, rng)
    y = uniform_sample(kernel.d, 20, rng)
    err = max(float(np.max(np.abs(degree_kernel_direct(kernel.basis, ell, x, y) - degree_kernel_closed(kernel.d, ell, x, y))))
              for ell in range(1, kernel.L + 1))
    return err <= 1e-9, f"max |direct - closed| = {err:.3g}"


def _degree_bound(kernel: SimplexKernel, seed: int, **_) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    x = uniform_sample(kernel.d, 2000, rng)
    y = uniform_sample(kernel.d, 2000, rng)
    worst = -math.inf
    for ell in range(1, kernel.L + 1):
        vals = degree_kernel_direct(kernel.basis, ell, np.vstack([x, x]), np.vstack([y, x]))
        worst = max(worst, float(np.max(vals)) / float(degree_kernel_bound(kernel.d, ell)))
    return worst <= 1.0 + 1e-12, f"max P_l / b_l = {worst:.6f}"


def _initial_error(kernel: SimplexKernel, seed: int, **_) -> tuple[bool, str]:
    sched = WeightSchedule.constant(0.5, 2)
    exact, mean, se = e0m(sched, kernel, diagnostic=True, samples=20_000, seed=seed)
    return exact == 1.0 and abs(mean - 1.0) <= 4 * se, f"MC mean {mean:.5f} +- {se:.2g}"


def _sandwich(kernel: SimplexKernel, consts, seed: int, **_) -> tuple[bool, str]:
    sched = WeightSchedule.constant(0.5, 2)
    ss = np.random.SeedSequence(seed).spawn(10)
    bad = 0
    for s in ss:
        T = random_point_set(16, 2, kernel.d, s)
        bad += enm_sq(T, sched, kernel) < lower_bound(16, sched, consts) - 1e-6
    ceiling = existence_upper_bound(16, sched, kernel)
    best = min(enm_sq(random_point_set(16, 2, kernel.d, s), sched, kernel) for s in ss)
    return bad == 0 and best <= ceiling + 1e-6, f"{bad} floor violations, best {best:.3g} vs ceiling {ceiling:.3g}"


def _worst_case(kernel: SimplexKernel, seed: int, **_) -> tuple[bool, str]:
    sched = WeightSchedule.constant(0.5, 2)
    top = min(4, kernel.L)
    bad = 0
    for i in range(10):
        f = TensorFourierFunction.random(kernel.d, 2, top, 6, seed=[seed, i])
        T = random_point_set(8, 2, kernel.d, [seed, 100 + i])
        err = abs(integrate_exact(f) - qmc_apply(f, T, kernel.basis))
        bound = math.sqrt(max(enm_sq(T, sched, kernel), 0.0)) * math.sqrt(hm_norm_sq(f, sched, kernel.r))
        bad += err > bound + 1e-8
    return bad == 0, f"{bad} violations of |I - Q| <= e * ||f||"


def _truncation(kernel: SimplexKernel, seed: int, **_) -> tuple[bool, str]:
    wide = SimplexKernel(kernel.d, kernel.r, TruncationPolicy(kernel.truncation.tail_tolerance, 2 * kernel.L))
    rng = np.random.default_rng(seed)
    x = uniform_sample(kernel.d, 50, rng)
    y = uniform_sample(kernel.d, 50, rng)
    diff = float(np.max(np.abs(kernel.g_pairs(x, y) - wide.g_pairs(x, y))))
    return diff <= kernel.tail_bound, f"|g_L - g_2L| = {diff:.3g} <= tail bound {kernel.tail_bound:.3g}"


def _tractability(kernel: SimplexKernel, consts, **_) -> tuple[bool, str]:
    expected = {
        ("power", 2.0): (True, True, True), ("power", 1.0): (False, True, True),
        ("constant", 0.0): (False, False, False), ("log", 0.0): (False, False, True),
    }
    bad = []
    for (kind, a), flags in expected.items():
        fam = WeightFamily(kind, c=0.5 * math.log(2.0) if kind == "log" else 0.5, a=a)
        v = classify(fam)
        got = (v.strong_polynomial, v.polynomial, v.weak)
        nested = (not got[0] or got[1]) and (not got[1] or got[2])
        rows = bound_curve(fam, 0.1, [1, 4, 16, 64], consts)
        consistent = all(r["lower"] <= r["upper"] * (1 + 1e-12) for r in rows)
        if got != flags or not nested or not consistent:
            bad.append(f"{kind}(a={a})")
    return not bad, "all families as expected" if not bad else "mismatch: " + ", ".join(bad)


CHECKS: dict[str, Callable] = {
    "orthonormality": _orthonormal,
    "eigenfunction": _eigen,
    "zero_mean": _zero_mean,
    "dual_path": _dual_path,
    "degree_bound": _degree_bound,
    "initial_error": _initial_error,
    "sandwich": _sandwich,
    "worst_case": _worst_case,
    "truncation": _truncation,
    "tractability": _tractability,
}


def run_checks(d: int = 2, r: float = 4.0, L: int = 8, tail_tolerance: float = 1e-12,
               seed: int = 0, only=None) -> list[CheckResult]:
    kernel = SimplexKernel(d, r, TruncationPolicy(tail_tolerance, L))
    consts = compute_constants(kernel, 0.5)
    results = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn(kernel=kernel, consts=consts, seed=seed)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, round(time.perf_counter() - t0, 3)))
    return results
