import io
import math

import numpy as np
import pytest

from simplexqmc.kernel import SimplexKernel, TruncationPolicy, WeightSchedule
from simplexqmc.wce import (CSV_COLUMNS, TensorFourierFunction, csv_row, e0m, enm_sq, error_report,
                            existence_upper_bound, expected_enm_sq, hm_norm_sq, integrate_exact, load_point_set,
                            lower_bound, neps_lower, neps_upper, qmc_apply, random_point_set, save_point_set,
                            worst_case_error, write_csv)
from simplexqmc.kernel import c_dr, s_dr


def test_single_node_collapse(kernel24):
    sched = WeightSchedule((0.7,))
    T = random_point_set(1, 1, 2, 4)
    assert enm_sq(T, sched, kernel24) == pytest.approx(0.7 * kernel24.gtilde(T[:, 0])[0], rel=1e-12)


def test_enm_sq_matches_kernel_matrix(kernel24, sched2):
    T = random_point_set(7, 2, 2, 1)
    K = kernel24.km(T, T, sched2)
    assert enm_sq(T, sched2, kernel24) == pytest.approx(K.mean() - 1.0, abs=1e-14)


def test_repeated_nodes_do_not_help(kernel24, sched2):
    T = random_point_set(1, 2, 2, 2)
    assert enm_sq(np.repeat(T, 5, axis=0), sched2, kernel24) == pytest.approx(enm_sq(T, sched2, kernel24))


def test_initial_error(kernel24, sched2):
    assert e0m(sched2, kernel24) == 1.0
    exact, mean, se = e0m(sched2, kernel24, diagnostic=True, samples=20_000, seed=1)
    assert exact == 1.0 and abs(mean - 1) <= 4 * se


def test_bound_formulas(kernel24, consts24, sched2):
    n = 10
    assert expected_enm_sq(n, sched2, kernel24) == pytest.approx(((1 + 0.5 * s_dr(2, 4)) ** 2 - 1) / n)
    assert existence_upper_bound(n, sched2, kernel24) == pytest.approx(((1 + 0.5 * c_dr(2, 4)) ** 2 - 1) / n)
    assert expected_enm_sq(n, sched2, kernel24) <= existence_upper_bound(n, sched2, kernel24)
    bg = consts24.b_dr * consts24.gtilde_min_estimate
    assert lower_bound(n, sched2, consts24) == pytest.approx(-1 + (1 + bg * 0.5) ** 2 / n)
    with pytest.raises(ValueError):
        expected_enm_sq(0, sched2, kernel24)


def test_lower_bound_single_node(kernel24, consts24):
    # with one node the floor is a genuine constraint, not a negative number
    sched = WeightSchedule((0.5,))
    floor = lower_bound(1, sched, consts24)
    assert floor > 0
    for s in range(50):
        assert enm_sq(random_point_set(1, 1, 2, s), sched, kernel24) >= floor - 1e-12


def test_node_count_bounds(consts24):
    sched = WeightSchedule.constant(0.5, 4)
    eps = 0.1
    up = neps_upper(eps, sched, consts24.c_dr)
    assert up == pytest.approx((1 + 0.5 * consts24.c_dr) ** 4 / eps ** 2)
    assert up <= math.exp(consts24.c_dr * 2.0) / eps ** 2
    assert neps_lower(eps, sched, consts24) <= up
    with pytest.raises(ValueError):
        neps_upper(1.5, sched, 1.0)


def test_worst_case_error_clamps(caplog):
    assert worst_case_error(0.25) == 0.5
    caplog.set_level("WARNING", logger="simplexqmc.wce")
    assert worst_case_error(-1e-17) == 0.0
    assert "clamping" in caplog.text


def test_fourier_function_integral_and_norm():
    f = TensorFourierFunction({((0, 0), (0, 0)): 0.3, ((1, 2), (0, 1)): -0.5}, d=2, m=2)
    assert integrate_exact(f) == 0.3
    sched = WeightSchedule((0.5, 0.25))
    expected = 0.09 + 0.25 * (1 * 3) ** 4 / 0.5 * (2 * 4) ** 4 / 0.25
    assert hm_norm_sq(f, sched, 4.0) == pytest.approx(expected)
    with pytest.raises(ValueError):
        TensorFourierFunction({((0,), (1,)): 1.0}, d=2, m=1)


def test_fourier_function_mc_integral(kernel24):
    f = TensorFourierFunction.random(2, 2, 3, 8, seed=3)
    f = TensorFourierFunction({**f.coefficients, ((0, 0), (0, 0)): 0.4}, 2, 2)
    T = random_point_set(100_000, 2, 2, 5)
    vals = f(T, kernel24.basis)
    assert abs(vals.mean() - 0.4) <= 4 * vals.std() / math.sqrt(len(vals))


def test_worst_case_inequality_is_sharp(kernel24, sched2):
    # the representer of the error functional attains the bound
    T = random_point_set(5, 2, 2, 8)
    basis = kernel24.basis
    coeffs = {}
    for l1 in range(5):
        for l2 in range(5):
            for k1 in range(basis.size(l1)):
                for k2 in range(basis.size(l2)):
                    if l1 == l2 == 0:
                        continue
                    w = 1.0
                    for ell, gam in ((l1, 0.5), (l2, 0.5)):
                        if ell:
                            w *= gam / (ell * (ell + 2)) ** 4
                    phi = basis.evaluate_one(l1, k1, T[:, 0]) * basis.evaluate_one(l2, k2, T[:, 1])
                    coeffs[((l1, l2), (k1, k2))] = -w * phi.mean()
    f = TensorFourierFunction(coeffs, 2, 2)
    err = abs(integrate_exact(f) - qmc_apply(f, T, basis))
    norm = math.sqrt(hm_norm_sq(f, sched2, 4.0))
    low = SimplexKernel(2, 4.0, TruncationPolicy(1e-12, 4))
    e = math.sqrt(enm_sq(T, sched2, low))
    assert err == pytest.approx(e * norm, rel=1e-9)


def test_error_report(kernel24, consts24, sched2):
    T = random_point_set(9, 2, 2, 0)
    rep = error_report(T, sched2, kernel24, consts24)
    assert rep.e_0m == 1.0 and rep.n == 9 and rep.truncation_degree == 12
    assert rep.lower_bound <= rep.e_nm_sq
    buf = io.StringIO()
    write_csv([csv_row(rep, 0)], buf)
    header = buf.getvalue().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)


@pytest.mark.parametrize("suffix", [".json", ".csv"])
def test_point_set_io(tmp_path, suffix):
    T = random_point_set(6, 3, 2, 1)
    path = tmp_path / f"pts{suffix}"
    save_point_set(T, path)
    back = load_point_set(path, d=2, m=3)
    np.testing.assert_array_equal(back, T)
    if suffix == ".csv":
        assert path.read_text().splitlines()[0].startswith("t1_x1,t1_x2,t2_x1")
        np.testing.assert_array_equal(load_point_set(path), T)
