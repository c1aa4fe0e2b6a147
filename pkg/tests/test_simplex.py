import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from simplexqmc.simplex import (Polynomial, barycentric, check_simplex_points, graded_lex, graded_lex_upto,
                                monomial_integral, poly_inner_product, gram_matrix, uniform_sample)


def test_graded_lex_counts_and_order():
    for d in (1, 2, 3):
        for deg in range(6):
            idx = graded_lex(d, deg)
            assert len(idx) == math.comb(deg + d - 1, d - 1)
            assert idx == sorted(idx, reverse=True)
            assert all(sum(a) == deg for a in idx)
    assert graded_lex(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(graded_lex_upto(3, 4)) == math.comb(7, 3)


@pytest.mark.parametrize("alpha", [(0,), (3,), (1, 2), (0, 0, 4), (2, 1, 1)])
def test_monomial_integral_matches_symbolic(alpha):
    d = len(alpha)
    xs = sp.symbols(f"x0:{d}")
    expr = sp.Mul(*[x ** a for x, a in zip(xs, alpha)])
    # iterated integral over the simplex, innermost variable last
    for i in reversed(range(d)):
        expr = sp.integrate(expr, (xs[i], 0, 1 - sum(xs[:i])))
    assert monomial_integral(alpha, d) == Fraction(str(sp.nsimplify(expr)))


def test_check_simplex_points():
    assert check_simplex_points([0.2, 0.3]).shape == (1, 2)
    assert check_simplex_points(np.array([[0.0, 1.0]]), d=2).shape == (1, 2)
    with pytest.raises(ValueError):
        check_simplex_points([0.7, 0.6])
    with pytest.raises(ValueError):
        check_simplex_points([-0.1, 0.3])
    with pytest.raises(ValueError):
        check_simplex_points([[0.1, 0.1]], d=3)
    with pytest.raises(ValueError):
        check_simplex_points([np.nan, 0.1])


def test_barycentric_sums_to_one():
    x = uniform_sample(3, 100, 0)
    lam = barycentric(x)
    assert lam.shape == (100, 4)
    np.testing.assert_allclose(lam.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(lam >= 0)


def test_uniform_sample_moments():
    d, n = 3, 200_000
    x = uniform_sample(d, n, 5)
    assert np.all(x >= 0) and np.all(x.sum(axis=1) <= 1.0)
    # uniform on T^d: E[x_i] = 1/(d+1), E[x_i^2] = 2/((d+1)(d+2))
    np.testing.assert_allclose(x.mean(axis=0), 1 / (d + 1), atol=4e-3)
    np.testing.assert_allclose((x ** 2).mean(axis=0), 2 / ((d + 1) * (d + 2)), atol=4e-3)


def test_uniform_sample_seeding():
    a = uniform_sample(2, 10, 42)
    b = uniform_sample(2, 10, np.random.SeedSequence(42))
    c = uniform_sample(2, 10, np.random.default_rng(42))
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, c)
    with pytest.raises(ValueError):
        uniform_sample(0, 10)


def test_polynomial_basics():
    x, y = Polynomial.variable(0, 2), Polynomial.variable(1, 2)
    p = (x + 2 * y) * (x - y)
    assert p == x * x + x * y - 2 * y * y
    assert p.degree == 2
    assert p.diff(0) == 2 * x + y
    assert p.diff(1, 2) == Polynomial.constant(-4, 2)
    assert p.evaluate_exact([Fraction(1, 3), Fraction(1, 2)]) == Fraction(1, 9) + Fraction(1, 6) - Fraction(1, 2)
    assert (p - p).is_zero


coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)
terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), coef, max_size=5)


@settings(max_examples=50, deadline=None)
@given(terms, terms, st.fractions(0, 1, max_denominator=9), st.fractions(0, 1, max_denominator=9))
def test_polynomial_ring_homomorphism(a, b, u, v):
    p, q = Polynomial(a, 2), Polynomial(b, 2)
    pt = [u * (1 - v), v * (1 - u)]
    assert (p * q).evaluate_exact(pt) == p.evaluate_exact(pt) * q.evaluate_exact(pt)
    assert (p + q).evaluate_exact(pt) == p.evaluate_exact(pt) + q.evaluate_exact(pt)
    assert abs(p.evaluate(pt) - float(p.evaluate_exact(pt))) < 1e-9


@settings(max_examples=30, deadline=None)
@given(terms, terms)
def test_gram_matrix_matches_pairwise(a, b):
    p, q = Polynomial(a, 2), Polynomial(b, 2)
    G = gram_matrix([p, q])
    assert G[0][1] == G[1][0] == poly_inner_product(p, q)
    assert G[0][0] == poly_inner_product(p, p) >= 0
