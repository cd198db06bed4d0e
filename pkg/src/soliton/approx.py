"""Two regular approximating families and their limits.

* ``phi_k`` solves the radial equation from ``phi(1/k) = 1/(n k)``,
  starting just off the singular point on the line ``r/n``.
* ``phi_eps`` solves the shifted equation with ``r + eps`` in place of
  ``r`` from ``phi(0) = 0``.

Both families are checked against their barriers at every accepted
integrator step.  The regularized family converges only at first order
in ``eps``, so its limit is extracted by polynomial extrapolation to
``eps = 0`` over the smallest members of the ladder.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ode import (DomainError, IntegratorConfig, Method, NumericalError,
                  PhiEpsField, PhiField, RadialProfile, check_dimension,
                  integrate)

DEFAULT_EPS = tuple(2.0 ** -i for i in range(1, 11))
DEFAULT_K = (4, 16, 64, 256)
BAND_FACTOR = 10.0


class BarrierViolation(NumericalError):
    """A solution left a region it provably stays in."""


def _band(config, y):
    return BAND_FACTOR * (config.abs_tol + config.rel_tol * np.abs(y))


def _first_violation(ok, r, what):
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise BarrierViolation(f"{what} violated at r={r[i]:.17g}")


def _check_done(traj, what):
    if not traj.reached_end:
        raise NumericalError(f"{what}: integration stopped at "
                             f"r={traj.r_last:.6g} ({traj.termination.value})")


def _profile_from(traj, grid, n, method, params, prepend_zero=False):
    if grid is None:
        r, y, dy = traj.r, traj.y, traj.dy
    else:
        r = np.asarray(grid, dtype=float)
        y, dy = traj.sample(r)
        if prepend_zero and r[0] == 0:
            # exact initial data at the origin
            y = y.copy()
            y[0] = 0.0
    return RadialProfile(r, y, dy, n, method, params)


def one_over_k_checks(n, k, r, y, config, eps=None):
    """Barrier and sandwich checks for a ``phi_k`` trajectory.

    Checks ``0 < phi < r/(n-1)`` everywhere and
    ``r/n < phi < r/n + r^3 / (n (n-1)^3)`` (the sandwich with the
    smallest admissible ``eps`` at each radius).  With ``eps`` given,
    also checks ``phi < r/n + eps r^2`` for ``r <= n (n-1)^3 eps``.
    """
    band = _band(config, y)
    _first_violation(y > -band, r, "phi_k > 0")
    _first_violation(y < r / (n - 1) + band, r, "phi_k < r/(n-1)")
    _first_violation(y > r / n - band, r, "phi_k > r/n")
    _first_violation(y - r / n < r ** 3 / (n * (n - 1) ** 3) + band, r,
                     "phi_k < r/n + r^3/(n(n-1)^3)")
    if eps is not None:
        m = r <= n * (n - 1) ** 3 * eps
        _first_violation(y[m] < r[m] / n + eps * r[m] ** 2 + band[m], r[m],
                         f"phi_k < r/n + {eps:g} r^2")


def solve_one_over_k(n, k, r_max, grid=None, initial_value=None,
                     config=None, check=True, backend=None):
    """Solve from ``phi(1/k) = 1/(n k)`` to ``r_max``.

    Parameters
    ----------
    n, k : int
    r_max : float
        Must exceed ``1/k``.
    grid : array_like, optional
        Radii in ``[1/k, r_max]`` to sample at; default is the
        integrator's own steps.
    initial_value : float, optional
        Override for ``phi(1/k)``.  The barrier checks assume the
        default and are skipped for other values.
    config : IntegratorConfig, optional
    check : bool
        Run the barrier checks at every accepted step.

    Raises
    ------
    BarrierViolation
    """
    n = check_dimension(n)
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError("k must be a positive integer")
    k = int(k)
    r0 = 1.0 / k
    if not r_max > r0:
        raise DomainError(f"r_max must exceed 1/k = {r0}")
    config = config or IntegratorConfig()
    y0 = 1.0 / (n * k) if initial_value is None else float(initial_value)
    traj = integrate(PhiField(n), r0, y0, r_max, config, backend=backend)
    _check_done(traj, f"k={k}")
    if check and initial_value is None:
        one_over_k_checks(n, k, traj.r, traj.y, config)
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid[0] < r0 - 1e-15 or grid[-1] > r_max + 1e-12:
            raise DomainError(f"sampling grid leaves [{r0}, {r_max}]")
        grid = np.clip(grid, r0, r_max)
    return _profile_from(traj, grid, n, Method.ONE_OVER_K,
                         {"k": k, "initial_value": y0})


def regularized_checks(n, eps, r, y, config):
    """Barrier checks for a ``phi_eps`` trajectory.

    ``0 <= phi <= (r+eps)/(n-1)`` and ``phi >= r/n`` everywhere, and
    ``phi <= (r+eps)/n + ((r+eps)/n)^2`` where ``r, eps <= n/3``.
    """
    band = _band(config, y)
    _first_violation(y >= -band, r, "phi_eps >= 0")
    _first_violation(y <= (r + eps) / (n - 1) + band, r,
                     "phi_eps <= (r+eps)/(n-1)")
    _first_violation(y >= r / n - band, r, "phi_eps >= r/n")
    if eps <= n / 3:
        m = r <= n / 3
        x = (r[m] + eps) / n
        _first_violation(y[m] <= x + x * x + band[m], r[m],
                         "phi_eps <= (r+eps)/n + ((r+eps)/n)^2")


def solve_regularized(n, eps, r_max, grid=None, config=None, check=True,
                      backend=None):
    """Solve the shifted equation from ``phi(0) = 0`` to ``r_max``.

    Raises
    ------
    BarrierViolation
    """
    n = check_dimension(n)
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not r_max > 0:
        raise DomainError("r_max must be positive")
    config = config or IntegratorConfig()
    traj = integrate(PhiEpsField(n, eps), 0.0, 0.0, r_max, config,
                     backend=backend)
    _check_done(traj, f"eps={eps}")
    if check:
        regularized_checks(n, eps, traj.r, traj.y, config)
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
        if grid[0] < 0 or grid[-1] > r_max + 1e-12:
            raise DomainError(f"sampling grid leaves [0, {r_max}]")
        grid = np.minimum(grid, r_max)
    return _profile_from(traj, grid, n, Method.REGULARIZED, {"eps": eps},
                         prepend_zero=True)


def extrapolate_to_zero(h, values):
    """Value at ``h = 0`` of the polynomial through ``(h_i, values_i)``.

    ``values`` has one row per ``h_i``; extrapolation is column-wise
    (Neville's scheme).
    """
    h = np.asarray(h, dtype=float)
    P = [np.asarray(v, dtype=float) for v in values]
    m = len(h)
    for j in range(1, m):
        P = [(h[i] * P[i + 1] - h[i + j] * P[i]) / (h[i] - h[i + j])
             for i in range(m - j)]
    return P[0]


@dataclass
class FamilySweep:
    """Members of one approximating family on a common grid.

    Attributes
    ----------
    n : int
    parameter : str
        ``"eps"`` or ``"k"``.
    values : list
        Parameter ladder in solve order.
    profiles : list of RadialProfile
    limit : RadialProfile
    monotonicity : list of dict
        Pairwise verdicts (regularized family only).
    successive_differences : list of float
        Max difference between consecutive members on their common
        range.
    """

    n: int
    parameter: str
    values: list
    profiles: list
    limit: RadialProfile
    monotonicity: list = field(default_factory=list)
    successive_differences: list = field(default_factory=list)

    def report(self):
        return {"n": self.n, "parameter": self.parameter,
                "values": list(self.values),
                "monotonicity": self.monotonicity,
                "successive_differences": self.successive_differences,
                "limit": {"method": self.limit.method.value,
                          **self.limit.params}}

    def to_json(self):
        return json.dumps(self.report(), sort_keys=True)

    def write_csv(self, fh, header_comment=None):
        """One row per radius, one column per member plus the limit."""
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        names = [f"{self.parameter}={v:.17g}" if self.parameter == "eps"
                 else f"k={v}" for v in self.values]
        w.writerow(["r"] + names + ["limit"])
        grid = self.limit.grid
        cols = []
        for p in self.profiles:
            col = {float(r): v for r, v in zip(p.grid, p.values)}
            cols.append(col)
        lim = dict(zip(map(float, grid), self.limit.values))
        for r in grid:
            row = [f"{r:.17g}"]
            for col in cols:
                v = col.get(float(r))
                row.append("" if v is None else f"{v:.17g}")
            row.append(f"{lim[float(r)]:.17g}")
            w.writerow(row)


def sweep_regularized(n, eps_list=DEFAULT_EPS, r_grid=None, r_max=None,
                      extrapolation_points=4, config=None, backend=None):
    """Solve a decreasing ``eps`` ladder and extract the limit.

    Checks ``phi_eps1 < phi_eps2`` for ``eps1 < eps2`` at every positive
    grid radius (verdicts ``strict``, ``tie`` within the tolerance band,
    or ``violated``) and extrapolates the last ``extrapolation_points``
    members to ``eps = 0``.

    Raises
    ------
    BarrierViolation
        On a monotonicity violation beyond tolerance.
    """
    n = check_dimension(n)
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")
    if r_grid is None:
        r_grid = np.linspace(0.05, 1.0, 96)
    r_grid = np.asarray(r_grid, dtype=float)
    r_grid = r_grid[r_grid > 0]
    r_max = r_max or float(r_grid[-1])
    config = config or IntegratorConfig()
    profiles = [solve_regularized(n, e, r_max, r_grid, config,
                                  backend=backend) for e in eps_list]
    mono = []
    for e_big, e_small, pb, ps in zip(eps_list, eps_list[1:], profiles,
                                      profiles[1:]):
        diff = pb.values - ps.values
        band = _band(config, pb.values)
        worst = int(np.argmin(diff - band))
        if np.any(diff < -band):
            verdict = "violated"
        elif np.all(diff > band):
            verdict = "strict"
        else:
            verdict = "tie"
        mono.append({"eps_small": e_small, "eps_large": e_big,
                     "min_gap": float(diff.min()),
                     "at_r": float(r_grid[worst]), "verdict": verdict})
        if verdict == "violated":
            raise BarrierViolation(
                f"phi_eps not increasing in eps: eps={e_small:g} exceeds "
                f"eps={e_big:g} at r={r_grid[worst]:.6g}")
    succ = [float(np.max(np.abs(a.values - b.values)))
            for a, b in zip(profiles, profiles[1:])]
    m = min(extrapolation_points, len(profiles))
    tail = profiles[-m:]
    hs = eps_list[-m:]
    val = extrapolate_to_zero(hs, [p.values for p in tail])
    der = extrapolate_to_zero(hs, [p.derivs for p in tail])
    limit = RadialProfile(r_grid, val, der, n, Method.REGULARIZED,
                          {"eps": eps_list[-1], "extrapolated_from": hs})
    return FamilySweep(n, "eps", eps_list, profiles, limit, mono, succ)


def sweep_one_over_k(n, k_list=DEFAULT_K, r_grid=None, r_max=None,
                     config=None, backend=None):
    """Solve an increasing ``k`` ladder on a shared grid.

    Each member is sampled on the grid points with ``r >= 1/k``.  The
    member with the largest ``k`` is returned as the limit candidate.
    """
    n = check_dimension(n)
    k_list = [int(k) for k in k_list]
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise DomainError("k_list must be strictly increasing")
    if r_grid is None:
        r_grid = np.linspace(0.05, 1.0, 96)
    r_grid = np.asarray(r_grid, dtype=float)
    r_max = r_max or float(r_grid[-1])
    config = config or IntegratorConfig()
    profiles = []
    for k in k_list:
        g = r_grid[r_grid >= 1.0 / k]
        if len(g) == 0:
            raise DomainError(f"no grid radius at or above 1/k for k={k}")
        profiles.append(solve_one_over_k(n, k, r_max, g, config=config,
                                         backend=backend))
    succ = []
    for a, b in zip(profiles, profiles[1:]):
        common = np.intersect1d(a.grid, b.grid)
        succ.append(float(np.max(np.abs(a.interp(common)
                                         - b.interp(common)))))
    return FamilySweep(n, "k", k_list, profiles, profiles[-1], [], succ)
