"""Fixed-point iteration in a weighted sup norm near the origin.

Write the radial equation as ``u' = f(r, u/r)`` with
``f(s, a) = (1 + s^2 a^2)(1 - (n-1) a)`` and shift by a polynomial
approximate solution ``h``.  The correction ``phi = u - h`` is the fixed
point of

    T(phi)(r) = int_0^r f(s, (h + phi)(s) / s) ds - h(r),

which contracts in the norm ``sup r^-p |phi(r)|`` on a ball of radius
``R`` when ``p`` exceeds the Lipschitz constant ``L`` of ``f``.

The integrand is split so nothing large cancels: ``f(s, h/s) = h' - G``
with ``G`` the exact residual polynomial of ``h``, whose integral is
taken exactly, and the remaining difference ``f(s, a) - f(s, b)`` is
factored through ``a - b = phi / s`` before the trapezoid rule is
applied on a geometric grid.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ode import (DomainError, Method, NumericalError, RadialProfile,
                  check_dimension)
from .series import approx_polynomial, residual_polynomial


class PicardError(NumericalError):
    """The iteration's hypotheses fail or it does not converge."""


@dataclass(frozen=True)
class PicardConfig:
    """Parameters of the weighted fixed-point iteration.

    Attributes
    ----------
    p : float
        Weight exponent of the norm ``sup r^-p |u|``.
    L_lip : float
        Lipschitz constant of ``f`` in its second argument.
    R_ball : float
        Radius of the ball in the weighted norm.
    S : float or None
        Right end of the interval; ``None`` selects it by halving from 1
        until the hypotheses hold.
    grid_size : int
        Number of positive grid points.
    r_min_ratio : float
        Smallest positive grid point as a fraction of ``S``.
    max_iters : int
    fixed_point_tol : float
        Stop when successive iterates differ by less than this in the
        weighted norm.
    """

    p: float
    L_lip: float
    R_ball: float
    S: float | None = None
    grid_size: int = 4000
    r_min_ratio: float = 1e-6
    max_iters: int = 200
    fixed_point_tol: float = 1e-14

    def __post_init__(self):
        if not self.p > max(self.L_lip, 1.0):
            raise DomainError("need p > max(L, 1)")
        if self.L_lip < 0 or self.R_ball <= 0:
            raise DomainError("need L >= 0 and R > 0")
        if self.S is not None and not 0 < self.S <= 1:
            raise DomainError("S must lie in (0, 1]")
        if self.grid_size < 3 or not 0 < self.r_min_ratio < 1:
            raise DomainError("grid needs >= 3 points and 0 < r_min_ratio < 1")
        if self.max_iters < 1 or self.fixed_point_tol <= 0:
            raise DomainError("max_iters and fixed_point_tol must be positive")

    @classmethod
    def for_dimension(cls, n, **kw):
        """Defaults ``L = n``, ``p = n + 1`` and ``R = 1.05 / n``."""
        n = check_dimension(n)
        kw.setdefault("p", n + 1.0)
        kw.setdefault("L_lip", float(n))
        kw.setdefault("R_ball", 1.05 / n)
        return cls(**kw)

    def grid(self, S=None):
        S = self.S if S is None else S
        return np.geomspace(S * self.r_min_ratio, S, self.grid_size)


@dataclass
class WeightedGridFunction:
    """Samples of a function on ``0 < r_1 < ... < r_m`` with weight ``p``."""

    grid: np.ndarray
    values: np.ndarray
    p: float

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or len(self.grid) == 0:
            raise DomainError("grid must be non-empty")
        if self.values.shape != self.grid.shape:
            raise DomainError("values must match the grid")
        if np.any(self.grid <= 0):
            raise DomainError("weighted grid radii must be positive")


def weighted_norm(f):
    """``max_i r_i^-p |f(r_i)|``."""
    if len(f.grid) == 0 or np.any(f.grid <= 0):
        raise DomainError("weighted norm needs positive radii")
    return float(np.max(np.abs(f.values) * f.grid ** (-f.p)))


def _poly(c, r):
    acc = np.zeros_like(r)
    for a in reversed(c):
        acc = acc * r + a
    return acc


@dataclass
class _Shift:
    """Grid data of the approximate solution ``h``."""

    b: np.ndarray        # h(s) / s
    h: np.ndarray        # h(s)
    H: np.ndarray        # int_0^s G(h)


def _shift_data(h, grid):
    c = [float(x) for x in h.coeffs] or [0.0]
    res = residual_polynomial(h)
    res_int = [0.0] + [float(v) / (k + 1) for k, v in enumerate(res)]
    hv = _poly(c, grid)
    b = _poly(c[1:] or [0.0], grid)
    return _Shift(b, hv, _poly(res_int, grid))


def _apply(phi, shift, n, p):
    s = phi.grid
    delta = phi.values / s
    a = shift.b + delta
    b = shift.b
    s2 = s * s
    D = -(n - 1) + s2 * (a + b) - (n - 1) * s2 * (a * a + a * b + b * b)
    e = delta * D
    acc = np.empty_like(s)
    # first cell: integrand behaves like s^(p-1) near 0
    acc[0] = e[0] * s[0] / p
    acc[1:] = acc[0] + np.cumsum(0.5 * (e[1:] + e[:-1]) * np.diff(s))
    return WeightedGridFunction(s, acc - shift.H, phi.p)


def _check_ball(phi, shift, R):
    nrm = weighted_norm(phi)
    if nrm > R * (1 + 1e-12):
        raise PicardError(f"iterate left the ball: norm {nrm:.3e} > R={R}")
    arg = np.max(np.abs(shift.b + phi.values / phi.grid))
    if arg > 2 * R:
        raise PicardError(
            f"argument |(h+phi)/s| = {arg:.3e} exceeds 2R = {2 * R}, "
            "outside the Lipschitz domain")


def picard_step(phi, h, n, config):
    """One application of the fixed-point operator.

    Parameters
    ----------
    phi : WeightedGridFunction
        Current correction; must lie in the ball of radius ``R_ball``.
    h : ApproxPolynomial
    n : int
    config : PicardConfig

    Returns
    -------
    WeightedGridFunction
    """
    shift = _shift_data(h, phi.grid)
    _check_ball(phi, shift, config.R_ball)
    return _apply(phi, shift, n, config.p)


def lipschitz_bound(n, S, R):
    """Lipschitz constant of ``f`` on ``[0, S] x [-2R, 2R]``."""
    return (n - 1) + 4 * S * S * R + 12 * (n - 1) * S * S * R * R


@dataclass
class HypothesisCheck:
    S: float
    lipschitz: float
    h_over_r_max: float
    T0_norm: float
    T0_bound: float
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures


def check_hypotheses(n, h, config, S):
    """Evaluate the three hypotheses of the contraction on ``[0, S]``."""
    grid = config.grid(S)
    shift = _shift_data(h, grid)
    zero = WeightedGridFunction(grid, np.zeros_like(grid), config.p)
    T0 = weighted_norm(_apply(zero, shift, n, config.p))
    bound = (config.p - config.L_lip) / config.p * config.R_ball
    lip = lipschitz_bound(n, S, config.R_ball)
    hr = float(np.max(np.abs(shift.b)))
    fails = []
    if lip > config.L_lip:
        fails.append(f"Lipschitz constant {lip:.4g} > L={config.L_lip}")
    if hr > config.R_ball:
        fails.append(f"|h(s)/s| reaches {hr:.4g} > R={config.R_ball}")
    if T0 > bound:
        fails.append(f"approximate-solution defect {T0:.4g} > "
                     f"(p-L)/p R = {bound:.4g}")
    return HypothesisCheck(S, lip, hr, T0, bound, fails)


def choose_interval(n, h, config, max_halvings=30):
    """Halve ``S`` from 1 until :func:`check_hypotheses` passes."""
    S = 1.0
    for _ in range(max_halvings):
        chk = check_hypotheses(n, h, config, S)
        if chk.passed:
            return chk
        S /= 2
    raise PicardError("no interval found: " + "; ".join(chk.failures))


@dataclass
class PicardDiagnostics:
    n: int
    p: float
    L: float
    R: float
    S: float
    iters: int
    final_residual: float
    ratio_history: list
    diff_history: list
    hypotheses: HypothesisCheck

    @property
    def empirical_contraction_ratio(self):
        return max(self.ratio_history) if self.ratio_history else 0.0

    def to_json(self):
        return json.dumps({
            "n": self.n, "p": self.p, "L": self.L, "R": self.R, "S": self.S,
            "iters": self.iters, "final_residual": self.final_residual,
            "empirical_contraction_ratio": self.empirical_contraction_ratio,
            "ratio_history": self.ratio_history,
        }, sort_keys=True)


def picard_solve(n, M=3, config=None):
    """Solve near the origin by iterating the weighted fixed-point map.

    Parameters
    ----------
    n : int
    M : int
        Truncation of the series used as the shift ``h``.
    config : PicardConfig, optional
        Defaults to :meth:`PicardConfig.for_dimension`.

    Returns
    -------
    (RadialProfile, PicardDiagnostics)
        The profile ``u = h + phi`` on ``[0, S]`` with ``u(0) = 0``.
    """
    n = check_dimension(n)
    config = config or PicardConfig.for_dimension(n)
    h = approx_polynomial(n, M)
    if config.S is None:
        chk = choose_interval(n, h, config)
    else:
        chk = check_hypotheses(n, h, config, config.S)
        if not chk.passed:
            raise PicardError("hypotheses fail on [0, S]: "
                              + "; ".join(chk.failures))
    S = chk.S
    grid = config.grid(S)
    shift = _shift_data(h, grid)
    phi = WeightedGridFunction(grid, np.zeros_like(grid), config.p)
    diffs, ratios = [], []
    for it in range(1, config.max_iters + 1):
        _check_ball(phi, shift, config.R_ball)
        nxt = _apply(phi, shift, n, config.p)
        d = weighted_norm(WeightedGridFunction(grid, nxt.values - phi.values,
                                               config.p))
        if diffs and diffs[-1] > 0:
            ratios.append(d / diffs[-1])
        diffs.append(d)
        phi = nxt
        if d < config.fixed_point_tol:
            break
    else:
        last = ratios[-1] if ratios else float("nan")
        raise PicardError(f"no convergence in {config.max_iters} iterations "
                          f"(last ratio {last:.3g})")
    u = shift.h + phi.values
    du = (1 + u * u) * (1 - (n - 1) * u / grid)
    r = np.concatenate([[0.0], grid])
    prof = RadialProfile(r, np.concatenate([[0.0], u]),
                         np.concatenate([[1.0 / n], du]), n, Method.PICARD,
                         {"p": config.p, "L": config.L_lip,
                          "R": config.R_ball, "S": S, "truncation": M})
    diag = PicardDiagnostics(n, config.p, config.L_lip, config.R_ball, S, it,
                             diffs[-1], ratios, diffs, chk)
    return prof, diag
