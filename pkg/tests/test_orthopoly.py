import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import eval_gegenbauer

from simplexqmc.orthopoly import (CACHE_ENV, OrthonormalBasis, _rodrigues_gram, _rodrigues_monomial_coeffs,
                                  apply_nabla, build_basis, cache_dir, degree_kernel_bound, degree_kernel_closed,
                                  degree_kernel_direct, dim_space, gegenbauer, load_or_build_basis, rodrigues)
from simplexqmc.simplex import Polynomial, gram_matrix, graded_lex, poly_inner_product, uniform_sample


def test_dim_space():
    assert [dim_space(1, l) for l in range(4)] == [1, 1, 1, 1]
    assert [dim_space(2, l) for l in range(4)] == [1, 2, 3, 4]
    assert [dim_space(3, l) for l in range(4)] == [1, 3, 6, 10]


@pytest.mark.parametrize("d,ell", [(1, 3), (2, 3), (3, 2)])
def test_rodrigues_closed_form_matches_expansion(d, ell):
    for n in graded_lex(d, ell):
        assert Polynomial(_rodrigues_monomial_coeffs(n), d) == rodrigues(n)


@pytest.mark.parametrize("d,ell", [(1, 4), (2, 3), (3, 2)])
def test_rodrigues_gram_closed_form(d, ell):
    idx = graded_lex(d, ell)
    assert _rodrigues_gram(idx, d) == gram_matrix([rodrigues(n) for n in idx])


def test_rodrigues_orthogonal_to_lower_degrees():
    d = 2
    lower = [Polynomial.monomial(a, d) for k in range(3) for a in graded_lex(d, k)]
    for n in graded_lex(d, 3):
        p = rodrigues(n)
        assert all(poly_inner_product(p, q) == 0 for q in lower)


def test_basis_is_graded_and_triangular():
    basis = build_basis(2, 4)
    for ell in range(5):
        assert basis.size(ell) == dim_space(2, ell)
        assert all(basis.polynomial(ell, k).degree == ell for k in range(basis.size(ell)))
        # Gram-Schmidt is triangular in the Rodrigues coordinates
        coords = basis.block(ell).coords
        for k, row in enumerate(coords):
            assert row[k] == 1 and all(v == 0 for v in row[k + 1:])


def test_degree_kernel_is_basis_invariant():
    a, b = build_basis(3, 4), build_basis(3, 4, order="reversed")
    x = uniform_sample(3, 30, 1)
    y = uniform_sample(3, 30, 2)
    for ell in range(1, 5):
        np.testing.assert_allclose(degree_kernel_direct(a, ell, x, y), degree_kernel_direct(b, ell, x, y), atol=1e-11)
    # the bases themselves differ
    assert a.polynomial(2, 0) != b.polynomial(2, 0)


def test_float_evaluation_matches_exact():
    basis = build_basis(2, 8)
    pts = [(Fraction(1, 7), Fraction(3, 5)), (Fraction(0), Fraction(1)), (Fraction(1, 3), Fraction(1, 3))]
    vals = basis.evaluate(np.array(pts, dtype=float))
    for ell in range(9):
        for k in range(basis.size(ell)):
            p, s = basis.polynomial(ell, k), basis.sq_norm(ell, k)
            for i, pt in enumerate(pts):
                exact = float(p.evaluate_exact(pt)) / math.sqrt(s)
                assert vals[ell][i, k] == pytest.approx(exact, abs=1e-12)


def test_serialization_round_trip(tmp_path):
    basis = build_basis(2, 5)
    text = json.dumps(basis.to_dict())
    back = OrthonormalBasis.from_dict(json.loads(text))
    for ell in range(6):
        for k in range(basis.size(ell)):
            assert back.polynomial(ell, k) == basis.polynomial(ell, k)
            assert back.sq_norm(ell, k) == basis.sq_norm(ell, k)
    x = uniform_sample(2, 5, 3)
    for u, v in zip(back.evaluate(x), basis.evaluate(x)):
        np.testing.assert_array_equal(u, v)
    with pytest.raises(ValueError):
        OrthonormalBasis.from_dict({"schema": 99})


def test_cache_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    assert cache_dir() == tmp_path
    first = load_or_build_basis(1, 4)
    files = list(tmp_path.glob("basis-d1-L4-*.json"))
    assert len(files) == 1
    second = load_or_build_basis(1, 4)
    assert second.polynomial(4, 0) == first.polynomial(4, 0)
    files[0].write_text("not json")
    assert load_or_build_basis(1, 4).polynomial(3, 0) == first.polynomial(3, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 16), st.floats(0.5, 4.0), st.floats(-1.0, 1.0))
def test_gegenbauer_matches_scipy(n, lam, u):
    assert gegenbauer(n, lam, u) == pytest.approx(eval_gegenbauer(n, lam, u), rel=1e-10, abs=1e-10)


def test_gegenbauer_rejects_bad_input():
    with pytest.raises(ValueError):
        gegenbauer(3, 1.0, 1.5)
    with pytest.raises(ValueError):
        gegenbauer(-1, 1.0, 0.2)


def test_degree_kernel_vertex_values():
    # at a vertex only the pure-vertex monomial survives
    for ell in range(1, 7):
        assert degree_kernel_closed(1, ell, [0.0], [0.0]) == pytest.approx(2 * ell + 1, rel=1e-12)
        assert degree_kernel_direct(build_basis(1, 6), ell, [0.0], [0.0]) == pytest.approx(2 * ell + 1, rel=1e-12)
        assert degree_kernel_closed(2, ell, [0.0, 0.0], [0.0, 0.0]) == pytest.approx((ell + 1) ** 3, rel=1e-12)


def test_degree_kernel_bound_values():
    assert degree_kernel_bound(1, 1) == 9
    assert degree_kernel_bound(2, 1) == 20
    assert degree_kernel_bound(3, 2) == Fraction(7 * math.comb(9, 4), 3)
    with pytest.raises(ValueError):
        degree_kernel_bound(2, 0)


def test_smaller_bound_constant_is_violated():
    # (2l+d)/d * binom(...) / 2^(d+1) would give 9/4 at d=1, l=1, yet P_1(0,0) = 3
    literal = degree_kernel_bound(1, 1) / 2 ** 2
    assert literal == Fraction(9, 4)
    assert degree_kernel_direct(build_basis(1, 1), 1, [0.0], [0.0]) > literal


def test_degree_kernel_reproduces_degree_space():
    # integral of P_l(x, y) f(y) over T^d returns f for f of degree l orthogonal to lower degrees
    basis = build_basis(2, 3)
    x = np.array([[0.2, 0.5]])
    rng = np.random.default_rng(0)
    y = uniform_sample(2, 400_000, rng)
    f = basis.evaluate(y, degrees=[2])[0][:, 1]
    est = np.mean(degree_kernel_direct(basis, 2, np.repeat(x, len(y), 0), y) * f)
    assert est == pytest.approx(basis.evaluate(x, degrees=[2])[0][0, 1], abs=0.05)


def test_nabla_strict_vs_inclusive():
    basis = build_basis(2, 3)
    for ell in range(4):
        for k in range(basis.size(ell)):
            p = basis.polynomial(ell, k)
            assert apply_nabla(p) == p * (-ell * (ell + 2))
    p = basis.polynomial(2, 1)
    assert apply_nabla(p, mixed="inclusive") != p * (-2 * 4)
    with pytest.raises(ValueError):
        apply_nabla(p, mixed="other")


def test_index_errors():
    basis = build_basis(1, 3)
    with pytest.raises(IndexError):
        degree_kernel_direct(basis, 4, [0.1], [0.2])
    with pytest.raises(ValueError):
        degree_kernel_closed(1, 0, [0.1], [0.2])


def test_degree_two_value_at_midpoint():
    # sqrt(5) * (6 x^2 - 6 x + 1) at x = 1/2
    basis = build_basis(1, 2)
    assert abs(basis.evaluate_one(2, 0, [[0.5]])[0]) == pytest.approx(math.sqrt(5) / 2, abs=1e-14)
    p, s = basis.polynomial(2, 0), basis.sq_norm(2, 0)
    assert p.evaluate_exact([Fraction(1, 2)]) ** 2 / s == Fraction(5, 4)
