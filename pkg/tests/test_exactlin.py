import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from pentablanc import exactlin as el
from pentablanc import nsaction as ns
from pentablanc.errors import PentablancError


def sympy_charpoly(m):
    rows = [[int(x) for x in r] for r in m.rows]
    return [int(c) for c in sympy.Matrix(rows).charpoly().all_coeffs()]


int_matrices = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n))


def test_identity_charpoly():
    p = el.char_poly(el.LatticeMatrix.identity(6))
    assert p.descending() == [int(c) for c in sympy.Poly((sympy.Symbol("t") - 1) ** 6).all_coeffs()]


@settings(max_examples=60, deadline=None)
@given(int_matrices)
def test_charpoly_matches_sympy(rows):
    m = el.LatticeMatrix(rows)
    assert el.char_poly(m).descending() == sympy_charpoly(m)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-10 ** 12, 10 ** 12), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_large_entries_stay_exact(rows):
    # entries this large overflow int64 products, so the exact fallback is used
    m = el.LatticeMatrix(rows)
    assert (m @ m).rows == tuple(tuple(int(x) for x in r) for r in (sympy.Matrix(rows) ** 2).tolist())
    assert el.char_poly(m).descending() == sympy_charpoly(m)


@settings(max_examples=60, deadline=None)
@given(int_matrices)
def test_bareiss_matches_sympy(rows):
    assert el.det_bareiss(rows) == int(sympy.Matrix(rows).det())


@settings(max_examples=40, deadline=None)
@given(int_matrices)
def test_cayley_hamilton(rows):
    m = el.LatticeMatrix(rows)
    a = np.array(rows, dtype=object)
    acc = np.zeros_like(a)
    for c in el.char_poly(m).descending():
        acc = acc.dot(a) + c * np.identity(len(rows), dtype=object).astype(object)
    assert all(x == 0 for x in acc.ravel())


def test_strip_cyclotomic_quintic_times_t_minus_1():
    quintic = (1, -3, -6, -8, -3, -1)
    p = el.IntPolynomial.from_descending(tuple(np.polymul((1, -1), quintic).astype(int)))
    rem, factors = el.strip_cyclotomic(p)
    assert rem.descending() == list(quintic)
    assert list(factors) == [(1, 1)]


def test_strip_pure_cyclotomic():
    rem, factors = el.strip_cyclotomic(el.IntPolynomial.from_descending((1, -1, 1)))
    assert rem.descending() == [1]
    assert list(factors) == [(6, 1)]


def test_strip_leaves_salem_quadratic():
    p = el.IntPolynomial.from_descending((1, -3, 1))
    rem, factors = el.strip_cyclotomic(p)
    assert rem.descending() == [1, -3, 1] and list(factors) == []
    # oracle: no primitive root of unity of order n with phi(n) <= 2 is a root
    for n in (1, 2, 3, 4, 6):
        z = np.exp(2j * np.pi / n)
        assert abs(np.polyval((1, -3, 1), z)) > 1e-6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 30])
def test_cyclotomic_matches_sympy(n):
    t = sympy.Symbol("t")
    want = [int(c) for c in sympy.Poly(sympy.cyclotomic_poly(n, t), t).all_coeffs()]
    assert el.cyclotomic(n).descending() == want


def test_strip_products_of_cyclotomics():
    t = sympy.Symbol("t")
    expr = sympy.expand(sympy.cyclotomic_poly(4, t) ** 2 * sympy.cyclotomic_poly(1, t) * (t**2 - 7 * t + 1))
    p = el.IntPolynomial.from_descending(tuple(int(c) for c in sympy.Poly(expr, t).all_coeffs()))
    rem, factors = el.strip_cyclotomic(p)
    assert rem.descending() == [1, -7, 1]
    assert sorted(factors) == [(1, 1), (4, 2)]


def test_spectral_radius_identity():
    assert el.spectral_radius(el.LatticeMatrix.identity(5)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(int_matrices)
def test_spectral_radius_matches_numpy(rows):
    m = el.LatticeMatrix(rows)
    want = max(abs(np.linalg.eigvals(np.array(rows, dtype=float))))
    assert el.spectral_radius(m) == pytest.approx(want, rel=1e-7, abs=1e-7)


def test_blanc_parabolic_pair_radius_one():
    g = ns.blanc_ns_generators(3)
    assert el.spectral_radius(el.product([g[0], g[1]])) == pytest.approx(1.0, abs=1e-9)


def test_classify_identity():
    c = el.classify_isometry(el.LatticeMatrix.identity(4))
    assert c.kind == el.ELLIPTIC and c.order == 1


def test_classify_blanc_words():
    k = 3
    g, G = ns.blanc_ns_generators(k), ns.ns_gram(k)
    assert el.classify_isometry(el.product(g[:2]), gram=G).kind == el.PARABOLIC
    lox = el.classify_isometry(el.product(g[:3]), gram=G)
    assert lox.kind == el.LOXODROMIC and lox.lam > 1


def test_classify_rejects_non_isometry():
    G = el.minkowski_form(2)
    m = el.LatticeMatrix(((2, 0), (0, 1)))
    with pytest.raises(PentablancError):
        el.classify_isometry(m, gram=G)


@settings(max_examples=30, deadline=None)
@given(int_matrices)
def test_matrix_json_roundtrip(rows):
    m = el.LatticeMatrix(rows)
    assert el.matrix_from_json(el.matrix_to_json(m)) == m


@settings(max_examples=30, deadline=None)
@given(int_matrices)
def test_inverse_when_unimodular(rows):
    m = el.LatticeMatrix(rows)
    if abs(el.det_bareiss(rows)) != 1:
        return
    assert el.product([m, el.inverse(m)]).is_identity()
