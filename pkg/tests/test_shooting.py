import io
import math

import numpy as np
import pytest

from soliton.ode import DomainError, NumericalError
from soliton.shooting import (Classification, backward_family,
                              backward_interval, bisect_initial,
                              forward_family, psi_to_phi, shoot_once,
                              upper_barrier, write_trajectory_csv)
from soliton.series import series_profile
from soliton.validation import envelope_exit

# accepted initial values psi(0) = phi(1); they agree with the series
# evaluated at r = 1 to ~1e-15
A_STAR = {2: 0.5325236208292297, 3: 0.34073457735785406,
          4: 0.252583111770889}


def test_classification_examples():
    assert shoot_once(2, 1.0, 10).classification is \
        Classification.EXCEEDED_UPPER
    assert shoot_once(2, 0.0, 10).classification is \
        Classification.DROPPED_BELOW_ZERO
    out = shoot_once(2, A_STAR[2], 10)
    assert out.classification is Classification.ALIVE
    tr = out.trajectory
    assert np.all(tr.y >= 0) and np.all(tr.y <= np.exp(-tr.r))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_a_star_frozen(n, shooting_results):
    res = shooting_results[n]
    assert res.a_star == pytest.approx(A_STAR[n], abs=1e-11)
    lo, hi = res.bracket
    assert hi - lo < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_a_star_matches_series(n, shooting_results):
    phi1, _ = series_profile(n, np.array([1.0])).values, None
    assert shooting_results[n].a_star == pytest.approx(phi1[0], abs=1e-11)


def test_brackets_nested(shooting_results):
    for res in shooting_results.values():
        h = res.bracket_history
        for (a0, b0, _), (a1, b1, _) in zip(h, h[1:]):
            assert a0 <= a1 <= b1 <= b0


@pytest.mark.parametrize("n", [2, 3, 4])
def test_envelope_on_accepted(n, shooting_results):
    sol = shooting_results[n].psi_profile
    t = sol.grid
    y = sol.values
    assert np.all(y >= 0)
    assert np.all(y <= upper_barrier(n, t) * (1 + 1e-12))


def test_w_limit(shooting_results):
    sol = shooting_results[2].psi_profile
    y, dy = sol.sample(np.array([20.0]))
    assert math.exp(20) * y[0] == pytest.approx(0.5, abs=1e-3)
    assert math.exp(20) * dy[0] == pytest.approx(-0.5, abs=1e-2)


def test_backward_interval_contains_a_star(shooting_results):
    lo, hi = backward_interval(2, 20.0)
    assert lo <= hi
    assert lo - 1e-12 <= shooting_results[2].a_star <= hi + 1e-12


def test_bad_arguments():
    with pytest.raises(DomainError):
        bisect_initial(2, -1.0)
    with pytest.raises(DomainError):
        bisect_initial(1, 5.0)


def test_insufficient_tolerance_reported():
    with pytest.raises(NumericalError, match="last shots"):
        bisect_initial(2, 20.0, a_tol=1e-30, max_horizon=20.0, step=20.0)


def test_psi_to_phi(shooting_results):
    res = shooting_results[3]
    prof = psi_to_phi(res)
    assert prof.r_max == pytest.approx(1.0)
    assert prof.r_min == pytest.approx(math.exp(-res.psi_profile.r_max))
    small = prof.values[:20] / prof.grid[:20]
    assert np.allclose(small, 1 / 3, atol=1e-6)
    x = np.linspace(0.1, 1, 10)
    p = psi_to_phi(res, grid=x)
    assert np.max(np.abs(p.values - series_profile(3, x).values)) < 1e-12
    with pytest.raises(DomainError):
        psi_to_phi(res, grid=[1e-12, 0.5])


def test_trajectory_csv():
    buf = io.StringIO()
    write_trajectory_csv(2, [0.0, 1.0], [0.5, 0.2], buf, "cfg")
    lines = buf.getvalue().splitlines()
    assert lines[:2] == ["# cfg", "r,psi,w,upper_barrier"]
    assert lines[3].split(",")[2] == f"{math.e * 0.2:.17g}"


def test_backward_family_brackets_solution(shooting_results):
    curves = backward_family(2, 0.5, range(3, 13))
    assert len(curves) == 20
    sol = shooting_results[2].psi_profile
    for k in range(3, 13):
        pair = [c for c in curves if c["k0"] == k]
        lo = next(c for c in pair if c["start"] == "zero")
        hi = next(c for c in pair if c["start"] == "barrier")
        assert lo["r"][0] == 1.0
        ref = sol.sample(lo["r"])[0]
        assert np.all(lo["psi"] <= ref + 1e-12)
        assert np.all(hi["psi"] >= ref - 1e-12)
    with pytest.raises(DomainError):
        backward_family(2, 0.25, [4])


def test_forward_family():
    curves = forward_family(2, [0.0, 0.5, 0.6])
    cls = [c["classification"] for c in curves]
    assert cls == ["dropped_below_zero", "dropped_below_zero",
                   "exceeded_upper"]
    for c in curves:
        assert np.all(np.diff(c["x"]) > 0) and np.all(np.abs(c["phi"]) <= 4)


@pytest.mark.parametrize("delta", [1e-3, -1e-3])
def test_rejected_shot_leaves_envelope(delta, shooting_results):
    out = shoot_once(2, shooting_results[2].a_star + delta, 20.0)
    assert out.classification is not Classification.ALIVE
    assert envelope_exit(out.trajectory, 2) < 20.0
