"""Right-hand sides, the adaptive integrator and profile containers.

Three scalar equations are provided:

* the radial equation ``phi' = (1 + phi^2) (1 - (n - 1) phi / r)``,
  singular at ``r = 0``;
* its exponential-coordinate form ``psi' = (1 + psi^2)((n - 1) psi - e^-r)``
  for ``psi(r) = phi(e^-r)``, regular everywhere;
* the shifted equation ``phi' = (1 + phi^2)(1 - (n - 1) phi / (r + eps))``.

All numerical methods in the package integrate one of these with
:func:`integrate`, a Dormand-Prince 5(4) pair with PI step control.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _pycore, kernels


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to meet its contract."""


def check_dimension(n, minimum=2):
    """Validate the dimension ``n`` and return it as an int."""
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"dimension must be an integer, got {n!r}")
    n = int(n)
    if n < minimum:
        raise DomainError(f"dimension must be >= {minimum}, got {n}")
    return n


def phi_rhs(n, r, phi):
    """Radial equation ``(1 + phi^2)(1 - (n - 1) phi / r)``.

    Raises
    ------
    DomainError
        If ``r <= 0``, where the equation is singular.
    """
    if not r > 0:
        raise DomainError(f"radial equation is singular at r={r}")
    return (1.0 + phi * phi) * (1.0 - (n - 1.0) * phi / r)


def psi_rhs(n, r, psi):
    """Exponential-coordinate equation ``(1 + psi^2)((n - 1) psi - e^-r)``."""
    return (1.0 + psi * psi) * ((n - 1.0) * psi - math.exp(-r))


def phi_eps_rhs(n, eps, r, phi):
    """Shifted equation ``(1 + phi^2)(1 - (n - 1) phi / (r + eps))``."""
    if not eps > 0:
        raise DomainError(f"shift eps must be positive, got {eps}")
    if r < 0:
        raise DomainError(f"shifted equation needs r >= 0, got {r}")
    return (1.0 + phi * phi) * (1.0 - (n - 1.0) * phi / (r + eps))


class PhiField:
    """Callable radial equation carrying its compiled-kernel signature.

    ``n = 1`` is accepted as a test oracle: the singular term vanishes and
    the equation reduces to ``y' = 1 + y^2``.
    """

    def __init__(self, n):
        self.n = check_dimension(n, minimum=1)
        if self.n == 1:
            # zero coefficient kills the singular term; any shift works
            self.kernel = (kernels.KIND_PHI_EPS, 1, 1.0)
        else:
            self.kernel = (kernels.KIND_PHI, self.n, 0.0)

    def __call__(self, r, y):
        if self.n == 1:
            return 1.0 + y * y
        return phi_rhs(self.n, r, y)

    def check_interval(self, r0, r1):
        if self.n > 1 and min(r0, r1) <= 0:
            raise DomainError(
                "radial equation cannot be integrated through r <= 0; "
                "seed at a positive radius")


class PsiField:
    """Callable exponential-coordinate equation."""

    def __init__(self, n):
        self.n = check_dimension(n)
        self.kernel = (kernels.KIND_PSI, self.n, 0.0)

    def __call__(self, r, y):
        return psi_rhs(self.n, r, y)

    def check_interval(self, r0, r1):
        pass


class PhiEpsField:
    """Callable shifted equation for a fixed ``eps > 0``."""

    def __init__(self, n, eps):
        self.n = check_dimension(n)
        if not eps > 0:
            raise DomainError(f"shift eps must be positive, got {eps}")
        self.eps = float(eps)
        self.kernel = (kernels.KIND_PHI_EPS, self.n, self.eps)

    def __call__(self, r, y):
        return phi_eps_rhs(self.n, self.eps, r, y)

    def check_interval(self, r0, r1):
        if min(r0, r1) < 0:
            raise DomainError("shifted equation is posed on r >= 0")


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for :func:`integrate`.

    Attributes
    ----------
    abs_tol, rel_tol : float
        Local error per step is kept below ``abs_tol + rel_tol * |y|``.
    max_step, min_step : float
        Step size bounds; a required step below ``min_step`` (or one
        too small to advance ``r`` in floating point) ends the run with
        ``Termination.STEP_UNDERFLOW``.
    blowup_threshold : float
        ``|y|`` beyond which the run stops as a blow-up.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = 0.1
    min_step: float = 1e-15
    blowup_threshold: float = 1e6

    def __post_init__(self):
        vals = (self.abs_tol, self.rel_tol, self.max_step, self.min_step,
                self.blowup_threshold)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("integrator settings must be finite")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise DomainError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step:
            raise DomainError("need 0 < min_step <= max_step")
        if self.blowup_threshold <= 0:
            raise DomainError("blow-up threshold must be positive")

    @property
    def tolerance(self):
        return self.abs_tol + self.rel_tol


class Termination(enum.Enum):
    REACHED_END = "reached_end"
    BLEW_UP_POSITIVE = "blew_up_positive"
    BLEW_UP_NEGATIVE = "blew_up_negative"
    STEP_UNDERFLOW = "step_underflow"


_STATUS = {
    0: Termination.REACHED_END,
    1: Termination.BLEW_UP_POSITIVE,
    2: Termination.BLEW_UP_NEGATIVE,
    3: Termination.STEP_UNDERFLOW,
}


@dataclass
class Trajectory:
    """Accepted steps of one integration run, in integration order.

    ``r`` decreases for a backward run.  ``dy`` holds the right-hand side
    at each accepted point and ``cont`` the per-step coefficients of the
    fourth-order continuous extension used by :meth:`sample`.
    """

    r: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    cont: np.ndarray
    termination: Termination
    r_requested: float
    rhs: object = None

    @property
    def reached_end(self):
        return self.termination is Termination.REACHED_END

    @property
    def r_last(self):
        return float(self.r[-1])

    def ascending(self):
        """Return ``(r, y, dy)`` sorted by increasing ``r``."""
        if len(self.r) > 1 and self.r[-1] < self.r[0]:
            return self.r[::-1], self.y[::-1], self.dy[::-1]
        return self.r, self.y, self.dy

    def sample(self, x):
        """Dense-output ``(y, y')`` at radii ``x`` inside the covered range."""
        x = np.asarray(x, dtype=float)
        lo, hi = min(self.r[0], self.r[-1]), max(self.r[0], self.r[-1])
        span = max(hi - lo, 1.0)
        if np.any(x < lo - 1e-12 * span) or np.any(x > hi + 1e-12 * span):
            raise DomainError(
                f"sample radii outside trajectory range [{lo}, {hi}]")
        if len(self.r) == 1:
            return np.full_like(x, self.y[0]), np.full_like(x, self.dy[0])
        val, der = _pycore.dense_eval(self.r, self.cont, x)
        if self.rhs is not None:
            # the interpolant's own slope is one order lower
            der = np.array([self.rhs(xi, vi) for xi, vi in
                            zip(x.ravel(), val.ravel())]).reshape(val.shape)
        return val, der


def integrate(rhs, r0, y0, r1, config=None, backend=None):
    """Integrate the scalar equation ``y' = rhs(r, y)`` from ``r0`` to ``r1``.

    Parameters
    ----------
    rhs : callable
        ``rhs(r, y)``.  Instances of :class:`PhiField`, :class:`PsiField`
        and :class:`PhiEpsField` run on the compiled kernel when it is
        available; other callables use the pure-Python loop.
    r0, y0 : float
        Initial point.
    r1 : float
        End point, on either side of ``r0``.
    config : IntegratorConfig, optional
    backend : {"cython", "python"}, optional
        Override the import-time backend for the built-in fields.

    Returns
    -------
    Trajectory
        Early stops are reported in ``termination``, never raised.
    """
    config = config or IntegratorConfig()
    r0, y0, r1 = float(r0), float(y0), float(r1)
    if not (math.isfinite(r0) and math.isfinite(y0) and math.isfinite(r1)):
        raise DomainError("integration endpoints must be finite")
    check = getattr(rhs, "check_interval", None)
    if check is not None:
        check(r0, r1)
    args = (r0, y0, r1, config.abs_tol, config.rel_tol, config.max_step,
            config.min_step, config.blowup_threshold)
    kernel = getattr(rhs, "kernel", None)
    if kernel is not None:
        kind, n, eps = kernel
        r, y, dy, cont, status = kernels.dopri_builtin(
            kind, n, eps, *args, backend=backend)
    else:
        r, y, dy, cont, status = kernels.dopri_callable(rhs, *args)
    return Trajectory(r, y, dy, cont, _STATUS[status], r1, rhs)


def extension_bounds(n, r0, a, r):
    """Envelope for a radial solution continued right from ``phi(r0) = a``.

    Returns
    -------
    (float, float)
        ``(min(0, a), max(r / (n - 1), a))``.
    """
    n = check_dimension(n)
    if not r0 > 0:
        raise DomainError("extension starts at a positive radius")
    if r < r0:
        raise DomainError("bounds apply for r >= r0")
    return min(0.0, a), max(r / (n - 1), a)


class Method(enum.Enum):
    SERIES = "series"
    SHOOTING = "shooting"
    REGULARIZED = "regularized"
    ONE_OVER_K = "one_over_k"
    PICARD = "picard"


@dataclass
class RadialProfile:
    """Sampled radial solution with provenance.

    Attributes
    ----------
    grid : ndarray
        Strictly increasing radii, all positive except possibly ``0``.
    values, derivs : ndarray
        ``phi`` and ``phi'`` on ``grid``.
    n : int
    method : Method
    params : dict
        Method-specific scalars.
    """

    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    n: int
    method: Method
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.derivs = np.asarray(self.derivs, dtype=float)
        self.method = Method(self.method)
        self.n = check_dimension(self.n)
        if self.grid.ndim != 1 or len(self.grid) == 0:
            raise DomainError("profile grid must be a non-empty 1-d array")
        if self.values.shape != self.grid.shape or \
                self.derivs.shape != self.grid.shape:
            raise DomainError("values and derivs must match the grid")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("profile grid must be strictly increasing")
        if self.grid[0] < 0:
            raise DomainError("profile radii must be non-negative")
        if self.grid[0] == 0 and self.values[0] != 0:
            raise DomainError("profile value at r=0 must be 0")

    @property
    def r_min(self):
        return float(self.grid[0])

    @property
    def r_max(self):
        return float(self.grid[-1])

    def covers(self, x, slack=1e-12):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.r_min - slack)
                    and np.all(x <= self.r_max + slack))

    def interp(self, x):
        """Linear interpolation of values at radii ``x``."""
        if not self.covers(x):
            raise DomainError(
                f"{self.method.value} profile covers "
                f"[{self.r_min}, {self.r_max}], not the requested radii")
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    def restrict(self, lo, hi):
        """Sub-profile on ``lo <= r <= hi``."""
        keep = (self.grid >= lo) & (self.grid <= hi)
        return RadialProfile(self.grid[keep], self.values[keep],
                             self.derivs[keep], self.n, self.method,
                             dict(self.params))

    def rows(self):
        return zip(self.grid, self.values, self.derivs)
