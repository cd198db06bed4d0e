import json

import numpy as np
import pytest

from soliton.approx import sweep_regularized
from soliton.ode import DomainError, NumericalError, RadialProfile
from soliton.series import series_profile
from soliton.shooting import psi_to_phi
from soliton.validation import (Verdict, check_asymptotic_expansion,
                                check_origin_regularity,
                                check_psi_asymptotics, compare_methods,
                                envelope_exit, expansion_reference,
                                finite_difference_derivative, ode_residual,
                                validate)


def test_residual_examples():
    p = series_profile(2, np.linspace(0.05, 1, 200), 60)
    assert ode_residual(p) <= 1e-9
    assert ode_residual(p, use_derivs=False) <= 1e-9
    v = p.values.copy()
    v[50] += 1e-3
    bad = RadialProfile(p.grid, v, p.derivs, 2, "series")
    assert ode_residual(bad) >= 1e-4
    assert ode_residual(bad, use_derivs=False) >= 1e-4
    z = RadialProfile(p.grid, 0 * v, 0 * v, 2, "series")
    assert ode_residual(z) == 1.0


def test_residual_short_grid():
    g = np.array([0.1, 0.2, 0.3, 0.4])
    p = RadialProfile(g, g / 2, g, 2, "series")
    with pytest.raises(DomainError):
        ode_residual(p, use_derivs=False)


def test_fd_exact_on_quartic():
    x = np.sort(np.random.default_rng(1).uniform(0, 1, 12))
    d = finite_difference_derivative(x, x ** 4 - x)
    assert np.allclose(d, 4 * x[2:-2] ** 3 - 1, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_origin_series(n):
    oc = check_origin_regularity(series_profile(n, np.geomspace(1e-3, 1, 80)))
    assert oc.passed
    assert oc.phi_over_r == pytest.approx(1 / n, abs=1e-6)
    assert oc.phi_prime == pytest.approx(1 / n, abs=1e-6)


def test_origin_regularized_limit():
    oc = check_origin_regularity(sweep_regularized(3).limit)
    assert oc.passed and oc.discrepancy <= 1e-4
    assert oc.phi_over_r == pytest.approx(1 / 3, abs=1e-4)


def test_origin_wrong_slope_fails():
    g = np.linspace(0.01, 1, 100)
    oc = check_origin_regularity(RadialProfile(g, g, np.ones_like(g), 2,
                                               "series"))
    assert oc.verdict is Verdict.FAIL
    assert oc.phi_over_r == pytest.approx(1.0)


def test_origin_noise_inconclusive():
    g = np.array([0.01, 0.02, 0.04, 0.5])
    v = g / 2 + np.array([0, 1e-6, -1e-6, 0])
    oc = check_origin_regularity(RadialProfile(g, v, np.full(4, 0.5), 2,
                                               "series"))
    assert oc.verdict is Verdict.INCONCLUSIVE


def test_origin_needs_small_radii():
    g = np.linspace(0.2, 1, 10)
    with pytest.raises(DomainError):
        check_origin_regularity(series_profile(2, g))


@pytest.mark.parametrize("n", [2, 4])
def test_psi_asymptotics(n, shooting_results):
    pa = check_psi_asymptotics(shooting_results[n].psi_profile, n, 20.0)
    assert pa.passed
    assert pa.w == pytest.approx(1 / n, abs=1e-3)
    assert pa.w_prime == pytest.approx(-1 / n, abs=1e-3)


def test_psi_asymptotics_short(shooting_results):
    from soliton.shooting import shoot_once
    tr = shoot_once(2, 0.5, 5.0).trajectory
    with pytest.raises(DomainError):
        check_psi_asymptotics(tr, 2)


def test_envelope_exit_on_accepted(shooting_results):
    sol = shooting_results[2].psi_profile
    assert envelope_exit(sol.lower, 2) is None


def test_expansion_reference_values():
    assert expansion_reference(2) == (0.5, 1 / 32, 1 / 768)
    assert expansion_reference(3)[2] == 0


@pytest.mark.parametrize("n", [2, 4])
def test_expansion_fit(n):
    fit = check_asymptotic_expansion(
        series_profile(n, np.linspace(0.001, n / 2, 400)))
    assert fit.within(0.01)


def test_expansion_fit_needs_points():
    with pytest.raises(NumericalError):
        check_asymptotic_expansion(series_profile(2, np.linspace(0.2, 1, 5)))


def test_compare_examples(shooting_results, compare_grid):
    s = series_profile(2, compare_grid)
    sh = psi_to_phi(shooting_results[2], grid=compare_grid)
    c = compare_methods([s, sh], compare_grid)
    assert c.deviation("series", "shooting") <= 1e-6
    assert compare_methods([s], compare_grid).max_pair() == 0
    same = compare_methods([s, s], compare_grid)
    assert same.labels == ["series", "series#2"] and same.max_pair() == 0


def test_compare_names_uncovered_profile(compare_grid):
    s = series_profile(2, compare_grid)
    short = series_profile(2, np.linspace(0.1, 0.5, 10))
    short.method = short.method.__class__("picard")
    with pytest.raises(DomainError, match="picard"):
        compare_methods([s, short], compare_grid)


def test_validate_report():
    rep = validate(2)
    assert rep.verdict is Verdict.PASS
    d = json.loads(rep.to_json())
    assert d["verdict"] == "pass"
    assert set(d["origin_limits"]) == {"series", "regularized", "one_over_k"}
    assert d["pairwise_deviations"]["series~shooting"] < 1e-6
