import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from soliton.ode import DomainError
from soliton.series import (ApproxPolynomial, approx_polynomial,
                            check_decay_bound, check_decay_rate, coefficients,
                            coefficients_precancellation, estimate_radius,
                            eval_series, residual_order, residual_polynomial,
                            series_profile, sigma2, sigma2_integral_bound,
                            sigma3, sigma3_integral_bound, verification_lines,
                            write_coefficients_csv)


@pytest.mark.parametrize("l, want", [
    (0, 0), (1, 0), (2, 1), (3, 1), (4, Fraction(11, 12))])
def test_sigma2_values(l, want):
    assert sigma2(l) == want


@pytest.mark.parametrize("l, want", [
    (2, 0), (3, 1), (4, Fraction(3, 2))])
def test_sigma3_values(l, want):
    assert sigma3(l) == want


def _brute2(l):
    return sum(Fraction(1, i * (l - i)) for i in range(1, l))


def _brute3(l):
    return sum(Fraction(1, i * j * (l - i - j))
               for i in range(1, l) for j in range(1, l - i))


@settings(max_examples=40, deadline=None)
@given(l=st.integers(0, 60))
def test_sums_match_enumeration(l):
    assert sigma2(l) == _brute2(l)
    assert sigma3(l) == _brute3(l)


@settings(max_examples=40, deadline=None)
@given(l=st.integers(2, 500))
def test_sigma2_closed_form(l):
    # partial fractions give 2 H_{l-1} / l
    harmonic = sum(Fraction(1, k) for k in range(1, l))
    assert sigma2(l) == 2 * harmonic / l


def test_sum_integral_bounds():
    for k in range(3, 501):
        assert float(sigma2(k - 1)) <= sigma2_integral_bound(k) + 1e-15
    for l in range(4, 501):
        assert float(sigma3(l - 1)) <= sigma3_integral_bound(l) + 1e-15
    with pytest.raises(DomainError):
        sigma2_integral_bound(2)


def test_verification_lines_shape():
    lines = verification_lines(40)
    blank = lines.index("")
    top, bottom = lines[:blank], lines[blank + 1:]
    assert top[:2] == ["2: 0", "3: 0"]
    assert top[2] == "4: 1/12"
    assert all(Fraction(s.split(": ")[1]) >= 0 for s in top + bottom)
    assert all(sigma3(int(s.split(":")[0])) > Fraction(9, 5) for s in bottom)


@pytest.mark.parametrize("n, L, want", [
    (2, 1, [1, Fraction(1, 4)]),
    (3, 2, [1, Fraction(1, 5), 0]),
    (2, 2, [1, Fraction(1, 4), Fraction(1, 24)])])
def test_coefficient_examples(n, L, want):
    assert list(coefficients(n, L).coeffs) == want


@pytest.mark.parametrize("n", range(2, 11))
def test_low_coefficients_closed_form(n):
    a = coefficients(n, 2)
    assert a[0] == 1
    assert a[1] == Fraction(1, n + 2)
    assert a[2] == Fraction(3 - n, (n + 4) * (n + 2))


def test_coefficients_reject_small_dimension():
    with pytest.raises(DomainError):
        coefficients(1, 5)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_precancellation_recursion_agrees(n):
    assert coefficients_precancellation(n, 100).coeffs == \
        coefficients(n, 100).coeffs


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 12), L=st.integers(0, 40))
def test_coefficient_tables_are_prefix_stable(n, L):
    assert coefficients(n, L).coeffs == coefficients(n, 60).coeffs[:L + 1]


def test_series_satisfies_equation_exactly():
    # the residual vanishes to the declared order, one step further when
    # the next coefficient happens to be zero (a_2 at n = 3)
    for n in (2, 3, 5):
        nxt = coefficients(n, 7)
        for M in range(6):
            h = approx_polynomial(n, M)
            got = residual_order(h)
            assert got >= 2 * M + 2
            assert (got == 2 * M + 2) == (nxt[M + 1] != 0)


def test_eval_series_examples():
    t = coefficients(2, 10)
    assert eval_series(t, 0.0, 3) == (0.0, 0.5)
    r = 1e-3
    phi, _ = eval_series(t, r, 1)
    assert phi == pytest.approx(r / 2 + r ** 3 / 32, rel=1e-15)
    with pytest.raises(DomainError):
        eval_series(t, 0.1, 11)


def test_eval_series_warns_outside_disc():
    with pytest.warns(RuntimeWarning):
        eval_series(coefficients(2, 10), 2.5)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(-1.5, 1.5))
def test_series_is_odd(r):
    t = coefficients(3, 40)
    a, da = eval_series(t, r)
    b, db = eval_series(t, -r)
    assert a == -b and da == db


def test_series_profile_derivative_consistent():
    p = series_profile(2, np.linspace(0.05, 1.0, 50))
    resid = p.derivs - (1 + p.values ** 2) * (1 - p.values / p.grid)
    assert np.max(np.abs(resid)) < 1e-13


def test_decay_bound_examples():
    rep = check_decay_bound(coefficients(2, 500))
    assert rep.passed and rep.first_violation is None
    assert abs(coefficients(2, 1)[1]) * 4 == 1


def test_decay_bound_may_fail_in_high_dimension():
    # the bound is only claimed for small n; record what happens at n = 5
    rep = check_decay_bound(coefficients(5, 200))
    assert isinstance(rep.violations, list)
    assert '"n": 5' in rep.to_json()


@pytest.mark.parametrize("n, want, tol", [
    (2, 3.4, 0.2), (5, 7.6, 0.3), (10, 13.9, 0.4)])
def test_radius_examples(n, want, tol):
    assert estimate_radius(coefficients(n, 450), (100, 450)) == \
        pytest.approx(want, abs=tol)


def test_radius_window_errors():
    with pytest.raises(DomainError):
        estimate_radius(coefficients(3, 10), (1, 3))
    with pytest.raises(DomainError):
        estimate_radius(coefficients(3, 10), (5, 20))


def test_decay_rate_frozen():
    assert check_decay_rate(coefficients(2, 499)) == \
        pytest.approx(1.096681894721642, rel=1e-12)
    with pytest.raises(DomainError):
        check_decay_rate(coefficients(2, 50))


def test_approx_polynomial_examples():
    h0 = approx_polynomial(2, 0)
    assert h0.coeffs == (0, Fraction(1, 2))
    h1 = approx_polynomial(2, 1)
    assert h1.coeffs == (0, Fraction(1, 2), 0, Fraction(1, 32))
    assert residual_order(h0) == 2 and residual_order(h1) == 4
    res = residual_polynomial(h0)
    r = np.array([1e-2, 1e-3])
    assert np.all(np.abs(np.polyval([float(c) for c in res[::-1]], r))
                  < 10 * r ** 2)


def test_residual_order_oracles():
    zero = ApproxPolynomial(2, (Fraction(0),), 0)
    assert residual_polynomial(zero) == [-1]
    assert residual_order(zero) == 0
    lin = ApproxPolynomial(2, (0, Fraction(1, 2)), 2)
    assert residual_order(lin) == 2
    assert residual_order(approx_polynomial(2, 1)) == 4


def test_residual_pole_detected():
    with pytest.raises(DomainError):
        residual_polynomial(ApproxPolynomial(2, (Fraction(1), 1), 0))


def test_wrong_slope_has_order_zero_residual():
    h = ApproxPolynomial(3, (0, Fraction(1)), 0)
    assert residual_order(h) == 0


def test_coefficients_csv_roundtrip():
    buf = io.StringIO()
    write_coefficients_csv(coefficients(3, 6), buf, "n=3")
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# n=3"
    assert lines[1] == "l,numerator,denominator,float_value"
    l, num, den, val = lines[5].split(",")
    assert Fraction(int(num), int(den)) == coefficients(3, 6)[int(l)]
    assert float(val) == float(Fraction(int(num), int(den)))
