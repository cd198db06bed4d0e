"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the terminal summary (see ``conftest.py``) and by running
this file directly with ``python3 tests/test_acceptance.py``.
"""
import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from soliton.approx import (DEFAULT_EPS, DEFAULT_K, solve_one_over_k,
                            solve_regularized, sweep_one_over_k,
                            sweep_regularized)
from soliton.ode import IntegratorConfig, PhiField, integrate
from soliton.picard import picard_solve
from soliton.series import (ApproxPolynomial, approx_polynomial,
                            check_decay_bound, check_decay_rate, coefficients,
                            coefficients_precancellation, estimate_radius,
                            residual_order, series_profile)
from soliton.shooting import bisect_initial, psi_to_phi, upper_barrier
from soliton.validation import (check_origin_regularity,
                                check_psi_asymptotics, compare_methods)

RESULTS = {}


def record(num, ok, detail):
    RESULTS[num] = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[num])
    assert ok, RESULTS[num]


def test_criterion_1_exact_sums():
    # a fresh interpreter so the timing includes building the tables
    code = (
        "import time; t=time.perf_counter()\n"
        "from soliton.series import sigma2, sigma3\n"
        "s2=[sigma2(l) for l in range(501)]\n"
        "s3=[sigma3(l) for l in range(3, 501)]\n"
        "ok2=all(s<=1 for s in s2); eq=[l for l,s in enumerate(s2) if s==1]\n"
        "ok3=all(s<=2 for s in s3)\n"
        "print(ok2, ok3, eq, time.perf_counter()-t)\n")
    line = subprocess.run([sys.executable, "-c", code], capture_output=True,
                          text=True, check=True).stdout
    ok2, ok3 = line.split()[:2] == ["True", "True"], line.split()[1] == "True"
    ok2 = line.split()[0] == "True"
    eq = line[line.index("["):line.index("]") + 1]
    secs = float(line[line.index("]") + 1:])
    ok = ok2 and ok3 and eq == "[2, 3]" and secs <= 60
    record(1, ok, f"sigma2<=1: {ok2}, equality at {eq}, sigma3<=2: {ok3}, "
                  f"{secs:.2f} s")


def test_criterion_2_coefficient_identities():
    bad = []
    for n in range(2, 11):
        a = coefficients(n, 2)
        want = (1, Fraction(1, n + 2), Fraction(3 - n, (n + 4) * (n + 2)))
        if tuple(a.coeffs) != want:
            bad.append(n)
    same = all(coefficients_precancellation(n, 100).coeffs
               == coefficients(n, 100).coeffs for n in (2, 3, 4))
    record(2, not bad and same,
           f"closed forms n=2..10 {'ok' if not bad else bad}, "
           f"pre-cancellation recursion equal for l<=100: {same}")


def test_criterion_3_decay():
    bound = {n: check_decay_bound(coefficients(n, 500)).passed
             for n in (2, 3, 4)}
    lam = {n: check_decay_rate(coefficients(n, 499)) for n in range(2, 51)}
    ok = (all(bound.values()) and lam[2] > 1.09
          and min(lam[n] for n in range(2, 21)) > 0.50
          and min(lam.values()) > 0.34)
    record(3, ok,
           f"|a_l|<=1/(4l) n=2,3,4: {bound}; lambda(2)={lam[2]:.4f}, "
           f"min n<=20 {min(lam[n] for n in range(2, 21)):.4f}, "
           f"min n<=50 {min(lam.values()):.4f}")


REFERENCE_RADII = {2: 3.4, 3: 4.9, 4: 6.3, 5: 7.6, 6: 8.9, 7: 10.2, 8: 11.4,
               9: 12.7, 10: 13.9}


def test_criterion_4_radius_table():
    est = {n: estimate_radius(coefficients(n, 500)) for n in REFERENCE_RADII}
    err = {n: abs(est[n] - REFERENCE_RADII[n]) for n in est}
    worst = max(err, key=err.get)
    record(4, err[worst] <= 0.3,
           "estimates " + ", ".join(f"{n}:{est[n]:.2f}" for n in est)
           + f"; worst |diff| {err[worst]:.3f} at n={worst}")


def test_criterion_5_cross_method():
    t0 = time.perf_counter()
    x = np.linspace(0.1, 1.0, 91)
    worst_pair, worst_ss, details = 0.0, 0.0, []
    for n in (2, 3, 4):
        profs = [series_profile(n, x),
                 psi_to_phi(bisect_initial(n, 20.0), grid=x),
                 sweep_regularized(n, DEFAULT_EPS, x).limit,
                 solve_one_over_k(n, 256, 1.0, grid=x)]
        assert profs[2].params["eps"] == 2.0 ** -10
        c = compare_methods(profs, x)
        worst_pair = max(worst_pair, c.max_pair())
        ss = c.deviation("series", "shooting")
        worst_ss = max(worst_ss, ss)
        details.append(f"n={n} max {c.max_pair():.1e} s~sh {ss:.1e}")
    secs = time.perf_counter() - t0
    ok = worst_pair <= 1e-4 and worst_ss <= 1e-6 and secs <= 120
    record(5, ok, "; ".join(details) + f"; {secs:.1f} s")


def test_criterion_6_origin_regularity():
    worst_disc, worst_off, worst_psi = 0.0, 0.0, 0.0
    verdicts = []
    small = np.geomspace(1e-3, 0.09, 12)
    for n in (2, 3, 4):
        grid = np.union1d(small, np.linspace(0.1, 1, 10))
        res = bisect_initial(n, 20.0)
        profs = [series_profile(n, grid),
                 psi_to_phi(res, grid=grid),
                 # the eps ladder ends at 2^-10 and resolves r >> eps only,
                 # so this family is probed on its default grid from 0.05
                 sweep_regularized(n).limit,
                 solve_one_over_k(n, 256, 1.0, grid=grid[grid >= 1 / 256])]
        for p in profs:
            oc = check_origin_regularity(p, tol=1e-4)
            verdicts.append(oc.verdict.value)
            worst_disc = max(worst_disc, oc.discrepancy)
            worst_off = max(worst_off, abs(oc.phi_over_r - 1 / n),
                            abs(oc.phi_prime - 1 / n))
        pa = check_psi_asymptotics(res.psi_profile, n, 20.0, 1e-3)
        verdicts.append("pass" if pa.passed else "fail")
        worst_psi = max(worst_psi, abs(pa.w - 1 / n), abs(pa.w_prime + 1 / n),
                        abs(pa.total) / 2)
    ok = all(v == "pass" for v in verdicts)
    record(6, ok, f"origin discrepancy <= {worst_disc:.1e}, |limit-1/n| <= "
                  f"{worst_off:.1e}; psi-side worst {worst_psi:.1e} "
                  f"(verdicts {sorted(set(verdicts))})")


def test_criterion_7_barriers_and_monotonicity():
    cfg = IntegratorConfig()
    issues = []
    for n in (2, 3, 4):
        # accepted shots: every step of both enclosing solutions
        sol = bisect_initial(n, 20.0).psi_profile
        for tr in (sol.lower, sol.upper):
            m = tr.r <= sol.r_max
            t, y = tr.r[m], tr.y[m]
            if np.any(y < 0) or np.any(y > upper_barrier(n, t) * (1 + 1e-12)):
                issues.append(f"envelope n={n}")
        # 1/k ladder: steps of each member, independent of solver checks
        for k in DEFAULT_K:
            p = solve_one_over_k(n, k, 2.0, config=cfg)
            r, y = p.grid, p.values
            band = cfg.abs_tol + cfg.rel_tol * np.abs(y)
            if not (np.all(y > 0) and np.all(y < r / (n - 1) + band)):
                issues.append(f"0<phi_k<r/(n-1) n={n} k={k}")
            inner = r > 1 / k
            if not np.all(y[inner] > r[inner] / n):
                issues.append(f"phi_k>r/n n={n} k={k}")
            if not np.all(y - r / n < r ** 3 / (n * (n - 1) ** 3) + band):
                issues.append(f"sandwich n={n} k={k}")
        # eps ladder: barriers at steps, monotonicity on a fine grid
        prev = None
        for eps in DEFAULT_EPS:
            p = solve_regularized(n, eps, 2.0, config=cfg)
            r, y = p.grid, p.values
            band = cfg.abs_tol + cfg.rel_tol * np.abs(y)
            if not (np.all(y >= -band)
                    and np.all(y <= (r + eps) / (n - 1) + band)
                    and np.all(y >= r / n - band)):
                issues.append(f"phi_eps bounds n={n} eps={eps}")
            m = r <= n / 3
            xx = (r[m] + eps) / n
            if eps <= n / 3 and not np.all(y[m] <= xx + xx * xx + band[m]):
                issues.append(f"phi_eps upper n={n} eps={eps}")
            fine = np.linspace(1e-3, 2.0, 2001)
            cur = solve_regularized(n, eps, 2.0, grid=fine).values
            if prev is not None and not np.all(cur < prev):
                issues.append(f"monotone n={n} eps={eps}")
            prev = cur
        sw = sweep_regularized(n)
        if any(m["verdict"] == "violated" for m in sw.monotonicity):
            issues.append(f"sweep verdict n={n}")
    record(7, not issues,
           "envelope, 1/k bounds and sandwich, eps barriers and monotonicity"
           f" for n=2,3,4: {'all hold' if not issues else issues}")


def test_criterion_8_picard():
    parts, ok = [], True
    for n in (2, 3):
        prof, diag = picard_solve(n, 3)
        ratios = diag.ratio_history
        geometric = all(b < a for a, b in zip(diag.diff_history,
                                              diag.diff_history[1:]))
        conv = diag.final_residual < 1e-14
        ref = series_profile(n, prof.grid)
        err = float(np.max(np.abs(prof.values - ref.values)))
        bound = n / (n + 1) + 0.05
        ok &= max(ratios) <= bound and geometric and conv and err <= 1e-6
        parts.append(f"n={n} S={diag.S} max ratio {max(ratios):.3f} "
                     f"(<= {bound:.3f}), {diag.iters} iters, "
                     f"series err {err:.1e}")
    record(8, ok, "; ".join(parts))


def test_criterion_9_oracles():
    worst = 0.0
    for tol in (1e-8, 1e-10, 1e-12):
        cfg = IntegratorConfig(abs_tol=tol, rel_tol=tol)
        tr = integrate(PhiField(1), 0.0, 0.0, 1.4, cfg)
        x = np.linspace(0, 1.4, 281)
        y, _ = tr.sample(x)
        ratio = np.max(np.abs(y - np.tan(x)) / (tol * (1 + np.abs(np.tan(x)))))
        worst = max(worst, ratio, np.max(np.abs(tr.y - np.tan(tr.r))
                                         / (tol * (1 + np.abs(np.tan(tr.r))))))
    orders = (residual_order(ApproxPolynomial(2, (Fraction(0),), 0)),
              residual_order(approx_polynomial(2, 0)),
              residual_order(approx_polynomial(2, 1)))
    ok = tr.reached_end and worst <= 10 and orders == (0, 2, 4)
    record(9, ok, f"tan error <= {worst:.2f} x tolerance on [0, 1.4]; "
                  f"residual orders {orders}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
