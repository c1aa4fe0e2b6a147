import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import zeta

from simplexqmc.tract import (WeightFamily, bound_curve, c_dr_power_form, classify, curve_with_flags,
                              m_exponent_bounds)


def test_family_weights():
    assert np.allclose(WeightFamily("power", 0.5, 2).weights(3), [0.5, 0.125, 0.5 / 9])
    assert np.allclose(WeightFamily("constant", 0.3).weights(2), [0.3, 0.3])
    assert np.allclose(WeightFamily("log", 1.0).weights(2), [1 / math.log(2), 1 / math.log(3)])
    assert WeightFamily("log", 1.0).gamma_star == pytest.approx(1 / math.log(2))
    fam = WeightFamily("custom", table=lambda m: np.full(m, 1.0 / m))
    assert fam.sum_weights(10) == pytest.approx(1.0)
    for bad in [dict(kind="nope"), dict(kind="power", c=-1), dict(kind="power", a=-1),
                dict(kind="custom"), dict(kind="custom", table=[1.0, math.inf]), dict(kind="custom", table=[0.0])]:
        with pytest.raises(ValueError):
            WeightFamily(**bad)
    with pytest.raises(ValueError):
        WeightFamily("custom", table=[0.1] * 4).weights(5)


def test_closed_form_verdicts():
    v = classify(WeightFamily("power", 0.5, 2))
    assert (v.strong_polynomial, v.polynomial, v.weak) == (True, True, True)
    assert v.limit_sum == pytest.approx(0.5 * math.pi ** 2 / 6)
    v = classify(WeightFamily("power", 0.7, 1))
    assert (v.strong_polynomial, v.polynomial, v.weak, v.beta) == (False, True, True, 0.7)
    v = classify(WeightFamily("constant", 0.5))
    assert (v.strong_polynomial, v.polynomial, v.weak, v.limit_ratio_m) == (False, False, False, 0.5)
    v = classify(WeightFamily("log", 0.5))
    assert (v.strong_polynomial, v.polynomial, v.weak) == (False, False, True)
    assert not v.empirical


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 4.0), st.floats(0.01, 2.0))
def test_verdicts_are_nested(a, c):
    v = classify(WeightFamily("power", c, a))
    assert v.polynomial or not v.strong_polynomial
    assert v.weak or not v.polynomial
    if a > 1:
        assert v.limit_sum == pytest.approx(c * zeta(a))


def test_limit_sum_matches_partial_sums():
    fam = WeightFamily("power", 0.5, 2.0)
    assert fam.sum_weights(100_000) == pytest.approx(classify(fam).limit_sum, rel=1e-4)


@pytest.mark.parametrize("table,expected", [
    (0.5 * np.arange(1, 70_000, dtype=float) ** -2.0, (True, True, True)),
    (0.5 / np.arange(1, 70_000, dtype=float), (False, True, True)),
    (0.5 / np.arange(1, 70_000, dtype=float) ** 0.5, (False, False, True)),
    (np.full(70_000, 0.5), (False, False, False)),
])
def test_empirical_verdicts(table, expected):
    v = classify(WeightFamily("custom", table=list(table)))
    assert v.empirical
    assert (v.strong_polynomial, v.polynomial, v.weak) == expected


def test_empirical_needs_enough_weights():
    with pytest.raises(ValueError):
        classify(WeightFamily("custom", table=[0.1] * 10))


def test_bound_curve(consts24):
    fam = WeightFamily("power", 0.5, 1.0)
    rows = bound_curve(fam, 0.1, [1, 2, 4, 8], consts24)
    for row in rows:
        assert row["lower"] <= row["upper"] <= row["upper_exp"]
        assert row["upper_eps2"] == pytest.approx(row["upper"] * 0.01)
    assert [r["sum_gamma"] for r in rows] == sorted(r["sum_gamma"] for r in rows)
    flagged = curve_with_flags(rows, classify(fam))
    assert all(r["polynomial"] and not r["strong_polynomial"] for r in flagged)
    with pytest.raises(ValueError):
        bound_curve(WeightFamily("constant", 5.0), 0.1, [1], consts24)


def test_power_form_constant_is_looser(consts24):
    loose = c_dr_power_form(2, 4.0)
    assert loose > consts24.c_dr
    v = classify(WeightFamily("power", 0.5, 1.0))
    exps = m_exponent_bounds(v, 2, 4.0, consts24.c_dr)
    assert exps["tight"] == pytest.approx(0.5 * consts24.c_dr)
    assert exps["power_form"] == pytest.approx(0.5 * loose)
    assert m_exponent_bounds(classify(WeightFamily("constant", 0.5)), 2, 4.0, 1.0)["tight"] == math.inf
