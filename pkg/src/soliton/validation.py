"""Independent checks on computed profiles.

* residual of the radial equation, from stored derivatives or from
  finite differences of the values;
* the two origin limits ``phi(r)/r`` and ``phi'(r)``, which must agree
  (and equal ``1/n``) for a profile that is smooth at the origin;
* the corresponding limits ``e^t psi -> 1/n`` and ``e^t psi' -> -1/n``
  in exponential coordinates;
* a least-squares fit of the odd expansion ``c1 r + c3 r^3 + c5 r^5``;
* pairwise deviations between methods on a shared grid.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ode import DomainError, NumericalError, RadialProfile, check_dimension


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


def _fd_weights(x0, xs):
    """First-derivative weights at ``x0`` for nodes ``xs`` (Fornberg)."""
    m = len(xs)
    c = np.zeros((m, 2))
    c1 = 1.0
    c4 = xs[0] - x0
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, 1)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1]
                                    - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, 1]


def finite_difference_derivative(x, y, width=5):
    """Centered ``width``-point derivative at interior nodes.

    Returns the derivative at ``x[h:-h]`` with ``h = width // 2``.
    """
    h = width // 2
    if len(x) < width:
        raise DomainError(f"need at least {width} grid points for "
                          "finite differences")
    out = np.empty(len(x) - 2 * h)
    for i in range(h, len(x) - h):
        xs = x[i - h:i + h + 1]
        out[i - h] = _fd_weights(x[i], xs) @ y[i - h:i + h + 1]
    return out


def _rhs(n, r, phi):
    return (1.0 + phi * phi) * (1.0 - (n - 1.0) * phi / r)


def ode_residual(profile, r_min=None, r_max=None, use_derivs=True):
    """Largest ``|phi' - (1 + phi^2)(1 - (n-1) phi / r)|`` on the profile.

    Parameters
    ----------
    profile : RadialProfile
    r_min, r_max : float, optional
        Restrict to this range; ``r = 0`` is always skipped.
    use_derivs : bool
        Use the stored derivatives.  Otherwise differentiate the values
        with a five-point stencil, which excludes the two outermost
        points on each side.
    """
    r, y, d = profile.grid, profile.values, profile.derivs
    keep = r > 0
    if r_min is not None:
        keep &= r >= r_min
    if r_max is not None:
        keep &= r <= r_max
    r, y, d = r[keep], y[keep], d[keep]
    if not use_derivs:
        d = finite_difference_derivative(r, y)
        r, y = r[2:-2], y[2:-2]
    elif len(r) < 3:
        raise DomainError("residual needs at least 3 positive radii")
    else:
        r, y, d = r[1:-1], y[1:-1], d[1:-1]
    return float(np.max(np.abs(d - _rhs(profile.n, r, y))))


def _richardson_r2(r1, g1, r2, g2):
    # g = g0 + c r^2 + ...: eliminate the r^2 term
    return (r2 * r2 * g1 - r1 * r1 * g2) / (r2 * r2 - r1 * r1)


@dataclass
class OriginCheck:
    phi_over_r: float
    phi_prime: float
    discrepancy: float
    expected: float
    radii: tuple
    verdict: Verdict

    @property
    def passed(self):
        return self.verdict is Verdict.PASS


def _nearest(grid, x):
    return int(np.argmin(np.abs(grid - x)))


def check_origin_regularity(profile, tol=1e-4):
    """Estimate ``lim phi(r)/r`` and ``lim phi'(r)`` at the origin.

    Uses the smallest positive radius ``r1`` and the grid points nearest
    ``2 r1`` and ``4 r1``.  Each limit is a two-level Richardson
    extrapolation in ``r^2`` from the two smallest radii.  If the raw
    values are not monotone across the three radii, noise dominates and
    the verdict is inconclusive.

    Passes when both estimates lie within ``tol`` of ``1/n`` and of each
    other.
    """
    r = profile.grid
    pos = np.flatnonzero(r > 0)
    if len(pos) < 3:
        raise DomainError("origin check needs at least 3 positive radii")
    r = r[pos]
    y = profile.values[pos]
    d = profile.derivs[pos]
    if r[0] >= 0.1:
        raise DomainError("origin check needs radii below 0.1")
    i1 = 0
    i2 = max(_nearest(r, 2 * r[0]), 1)
    i3 = max(_nearest(r, 4 * r[0]), i2 + 1)
    if i3 >= len(r):
        i2, i3 = 1, 2
    idx = (i1, i2, i3)
    rr = r[list(idx)]
    g = y[list(idx)] / rr
    dd = d[list(idx)]
    lim_g = _richardson_r2(rr[0], g[0], rr[1], g[1])
    lim_d = _richardson_r2(rr[0], dd[0], rr[1], dd[1])
    expected = 1.0 / profile.n
    disc = abs(lim_g - lim_d)

    def monotone(v):
        s = np.sign(np.diff(v))
        return not (s[0] * s[1] < 0)

    if not (monotone(g) and monotone(dd)):
        verdict = Verdict.INCONCLUSIVE
    elif (abs(lim_g - expected) <= tol and abs(lim_d - expected) <= tol
          and disc <= tol):
        verdict = Verdict.PASS
    else:
        verdict = Verdict.FAIL
    return OriginCheck(float(lim_g), float(lim_d), float(disc), expected,
                       tuple(float(x) for x in rr), verdict)


@dataclass
class PsiAsymptotics:
    r: float
    w: float
    w_prime: float
    total: float
    expected: float
    tol: float

    @property
    def passed(self):
        return (abs(self.w - self.expected) <= self.tol
                and abs(self.w_prime + self.expected) <= self.tol
                and abs(self.total) <= 2 * self.tol)


def _psi_range(traj):
    if hasattr(traj, "r_max"):
        return float(traj.r_max)
    return float(np.max(traj.r))


def check_psi_asymptotics(traj, n, r=None, tol=1e-3):
    """``e^t psi(t)`` and ``e^t psi'(t)`` at the far end of a trajectory.

    Parameters
    ----------
    traj : Trajectory or AcceptedSolution
        Anything with ``sample(t) -> (psi, psi')``.
    n : int
    r : float, optional
        Where to evaluate; defaults to the largest covered ``t``, which
        must be at least 15.
    tol : float
    """
    n = check_dimension(n)
    r_end = _psi_range(traj)
    if r_end < 15:
        raise DomainError(f"trajectory reaches t={r_end:.3g}; need t >= 15")
    r = r_end if r is None else float(r)
    y, dy = traj.sample(np.array([r]))
    w = math.exp(r) * float(y[0])
    wp = math.exp(r) * float(dy[0])
    return PsiAsymptotics(r, w, wp, w + wp, 1.0 / n, tol)


def envelope_exit(traj, n):
    """First ``t`` where ``w = e^t psi`` leaves ``[0, 1/(n-1)]``, or None."""
    r, y = traj.r, traj.y
    w = np.exp(r) * y
    bad = (w < 0) | (w > 1.0 / (n - 1))
    if not bad.any():
        return None
    return float(r[int(np.argmax(bad))])


def expansion_reference(n):
    """Reference ``(c1, c3, c5)`` of the odd expansion at the origin."""
    return (1.0 / n, 1.0 / (n ** 3 * (n + 2)),
            -(n - 3) / (n ** 5 * (n * n + 6 * n + 8)))


@dataclass
class ExpansionFit:
    coefficients: tuple
    reference: tuple
    deviations: tuple
    relative: tuple
    window: float

    def within(self, rel_tol, abs_tol=0.0):
        """True when each coefficient matches to ``rel_tol`` (or ``abs_tol``)."""
        return all(d <= max(rel_tol * abs(ref), abs_tol)
                   for d, ref in zip(self.deviations, self.reference))


def check_asymptotic_expansion(profile, window=None, max_cond=1e10):
    """Fit ``phi ~ c1 r + c3 r^3 + c5 r^5`` on ``0 < r <= window``.

    An ``r^7`` column is included in the least-squares fit and dropped
    from the result; it absorbs the next term so it does not bias
    ``c5``.  The default window is ``n/4``.

    Raises
    ------
    NumericalError
        If the fit is ill-conditioned or has fewer than 8 points.
    """
    n = profile.n
    window = n / 4 if window is None else window
    m = (profile.grid > 0) & (profile.grid <= window * (1 + 1e-12))
    r = profile.grid[m]
    if len(r) < 8:
        raise NumericalError(f"expansion fit needs >= 8 radii in "
                             f"(0, {window:.3g}], got {len(r)}")
    if profile.grid[-1] < window * (1 - 1e-9):
        raise DomainError(f"profile ends at {profile.grid[-1]:.3g} before "
                          f"the fit window {window:.3g}")
    u = r / n
    A = np.vstack([u, u ** 3, u ** 5, u ** 7]).T
    cond = np.linalg.cond(A)
    if not cond < max_cond:
        raise NumericalError(f"expansion fit ill-conditioned (cond "
                             f"{cond:.2e}); use a smaller or denser window")
    sol, *_ = np.linalg.lstsq(A, profile.values[m], rcond=None)
    c = (sol[0] / n, sol[1] / n ** 3, sol[2] / n ** 5)
    ref = expansion_reference(n)
    dev = tuple(abs(a - b) for a, b in zip(c, ref))
    rel = tuple(d / abs(b) if b else math.inf if d else 0.0
                for d, b in zip(dev, ref))
    return ExpansionFit(tuple(float(x) for x in c), ref, dev,
                        tuple(float(x) for x in rel), window)


@dataclass
class Comparison:
    labels: list
    matrix: np.ndarray

    def max_pair(self):
        return float(np.max(self.matrix))

    def deviation(self, a, b):
        return float(self.matrix[self.labels.index(a), self.labels.index(b)])

    def pairs(self):
        k = len(self.labels)
        return {f"{self.labels[i]}~{self.labels[j]}": float(self.matrix[i, j])
                for i in range(k) for j in range(i + 1, k)}


def _label(p, seen):
    base = p.method.value
    label = base
    i = 2
    while label in seen:
        label = f"{base}#{i}"
        i += 1
    seen.add(label)
    return label


def compare_methods(profiles, grid):
    """Max absolute pairwise deviations on ``grid`` (linear interpolation).

    Raises
    ------
    DomainError
        If profiles differ in ``n`` or one does not cover the grid.
    """
    if len(profiles) < 1:
        raise DomainError("need at least one profile")
    n = profiles[0].n
    if any(p.n != n for p in profiles):
        raise DomainError("profiles must share the dimension")
    grid = np.asarray(grid, dtype=float)
    seen = set()
    labels = [_label(p, seen) for p in profiles]
    vals = []
    for lab, p in zip(labels, profiles):
        if not p.covers(grid):
            raise DomainError(f"profile {lab} covers [{p.r_min:.6g}, "
                              f"{p.r_max:.6g}] but the grid spans "
                              f"[{grid.min():.6g}, {grid.max():.6g}]")
        vals.append(p.interp(grid))
    k = len(vals)
    M = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            M[i, j] = M[j, i] = np.max(np.abs(vals[i] - vals[j]))
    return Comparison(labels, M)


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`.

    ``verdict`` is ``fail`` if any check fails, else ``inconclusive`` if
    any check is inconclusive, else ``pass``.
    """

    n: int
    residual_max: dict
    origin_limits: dict
    psi_asymptotics: dict
    expansion_fit: dict
    pairwise_deviations: dict
    checks: dict = field(default_factory=dict)

    @property
    def verdict(self):
        v = set(self.checks.values())
        if Verdict.FAIL.value in v:
            return Verdict.FAIL
        if Verdict.INCONCLUSIVE.value in v:
            return Verdict.INCONCLUSIVE
        return Verdict.PASS

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict.value
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _flag(ok):
    return Verdict.PASS.value if ok else Verdict.FAIL.value


def validate(n, compare_grid=None, agree_tol=1e-4, series_shoot_tol=1e-6,
             origin_tol=1e-4, psi_tol=1e-3, backend=None):
    """Run every method for dimension ``n`` and cross-check them."""
    from .approx import sweep_one_over_k, sweep_regularized
    from .picard import picard_solve
    from .series import series_profile
    from .shooting import bisect_initial, psi_to_phi

    n = check_dimension(n)
    x = np.linspace(0.1, 1.0, 91) if compare_grid is None else \
        np.asarray(compare_grid, dtype=float)
    origin_grid = np.linspace(0.05, 0.09, 5)
    grid = np.union1d(origin_grid, x)
    small = np.union1d(np.geomspace(1e-3, 0.5, 60),
                       np.linspace(1e-3, n / 4, 200))

    ser = series_profile(n, np.union1d(small, grid))
    res = bisect_initial(n, 20.0, backend=backend)
    sho = psi_to_phi(res, grid=grid)
    reg = sweep_regularized(n, r_grid=grid, backend=backend).limit
    ovk = sweep_one_over_k(n, r_grid=grid, backend=backend).limit
    pic, pdiag = picard_solve(n)

    checks = {}
    resid = {}
    for p in (ser, sho, reg, ovk, pic):
        resid[p.method.value] = ode_residual(p)
    resid["shooting_fd"] = ode_residual(psi_to_phi(res), r_min=1e-3,
                                        use_derivs=False)
    checks["residual"] = _flag(resid["series"] <= 1e-9
                               and resid["shooting"] <= 1e-9
                               and resid["one_over_k"] <= 1e-9
                               and resid["picard"] <= 1e-9
                               and resid["regularized"] <= 1e-4)

    origin = {}
    for p in (ser, reg, ovk):
        oc = check_origin_regularity(p, tol=origin_tol)
        origin[p.method.value] = {"phi_over_r": oc.phi_over_r,
                                  "phi_prime": oc.phi_prime,
                                  "discrepancy": oc.discrepancy,
                                  "verdict": oc.verdict.value}
        checks[f"origin_{p.method.value}"] = oc.verdict.value

    pa = check_psi_asymptotics(res.psi_profile, n, 20.0, psi_tol)
    checks["psi_asymptotics"] = _flag(pa.passed)

    fit = check_asymptotic_expansion(ser)
    # c5 vanishes at n = 3, so it is judged on the scale of c3
    checks["expansion_fit"] = _flag(fit.within(0.01, 1e-3 * fit.reference[1]))

    cmp_main = compare_methods([ser, sho, reg, ovk], x)
    pic_x = x[x <= pic.r_max]
    pairs = cmp_main.pairs()
    if len(pic_x):
        cmp_pic = compare_methods([ser, pic], pic_x)
        pairs["series~picard"] = cmp_pic.deviation("series", "picard")
    else:
        pic_grid = np.linspace(pic.r_max / 10, pic.r_max, 20)
        pairs["series~picard"] = compare_methods(
            [ser, pic], pic_grid).deviation("series", "picard")
    checks["agreement"] = _flag(max(pairs.values()) <= agree_tol)
    checks["series_vs_shooting"] = _flag(
        cmp_main.deviation("series", "shooting") <= series_shoot_tol)
    checks["picard_contraction"] = _flag(
        pdiag.empirical_contraction_ratio <= n / (n + 1) + 0.05)

    return ValidationReport(
        n, resid, origin,
        {"r": pa.r, "w": pa.w, "w_prime": pa.w_prime, "sum": pa.total},
        {"c": list(fit.coefficients), "reference": list(fit.reference),
         "relative_deviation": list(fit.relative)},
        pairs, checks)
