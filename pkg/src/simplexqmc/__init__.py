"""Quasi-Monte Carlo integration on products of simplices."""

from .errors import PreconditionError
from .kernel import (KernelConstants, KernelParams, SimplexKernel, TruncationPolicy, WeightSchedule,
                     c_dr, compute_constants, g_eval, k1_eval, km_eval, s_dr)
from .orthopoly import (OrthonormalBasis, apply_nabla, build_basis, degree_kernel_bound,
                        degree_kernel_closed, degree_kernel_direct, dim_space)
from .search import SearchConfig, best_of_random, exchange_descent, rate_study
from .simplex import Polynomial, uniform_sample
from .tract import TractabilityVerdict, WeightFamily, bound_curve, classify
from .wce import (ErrorReport, e0m, enm_sq, existence_upper_bound, expected_enm_sq, lower_bound,
                  neps_lower, neps_upper)

__version__ = "0.1.0"
