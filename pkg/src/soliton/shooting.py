"""Shooting in exponential coordinates.

With ``psi(t) = phi(e^-t)`` the origin moves to ``t = infinity`` and the
equation ``psi' = (1 + psi^2)((n-1) psi - e^-t)`` is regular.  Two
one-way traps classify a forward shot from ``psi(0) = a``:

* once ``(n-1) psi - e^-t > 0`` the solution stays above the barrier
  ``e^-t / (n-1)`` and blows up;
* once ``psi < 0`` it stays negative and blows up.

Exactly one initial value keeps ``0 <= psi <= e^-t / (n-1)`` forever;
it is located by bisection with a growing horizon.

Forward shots amplify a perturbation of ``a`` roughly like ``e^(n t)``
relative to ``psi``, so in double precision they cannot stay inside the
trap much beyond ``t ~ 37 / n``.  Survival to longer horizons is settled
by integrating backwards from the two barrier values at the horizon:
the initial values whose shots survive to ``T`` form exactly the
interval between those two backward solutions at ``t = 0``, and
backward integration is stable.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .ode import (DomainError, IntegratorConfig, Method, NumericalError,
                  PsiField, RadialProfile, Termination, Trajectory,
                  check_dimension, integrate, psi_rhs)

SCHEDULE_STEP = 0.5


def shooting_config(**kw):
    """Integrator settings for shooting: relative control down to tiny psi."""
    kw.setdefault("abs_tol", 1e-20)
    kw.setdefault("rel_tol", 1e-12)
    kw.setdefault("max_step", 0.1)
    return IntegratorConfig(**kw)


def upper_barrier(n, r):
    return np.exp(-np.asarray(r, dtype=float)) / (n - 1)


class Classification(enum.Enum):
    EXCEEDED_UPPER = "exceeded_upper"
    DROPPED_BELOW_ZERO = "dropped_below_zero"
    ALIVE = "alive"


@dataclass
class ShotOutcome:
    classification: Classification
    exit_radius: float
    trajectory: Trajectory
    a: float
    horizon: float


def _band(n, r, config):
    # 10x the local tolerance at the barrier's scale
    return 10.0 * (config.abs_tol + config.rel_tol * np.exp(-r) / (n - 1))


def classify_trajectory(n, traj, config):
    """First trap entry along an accepted forward trajectory.

    Returns ``(classification, index)``; ``index`` is ``None`` when the
    trajectory stays in the closed trapping region (within the band).
    """
    r, y = traj.r, traj.y
    band = _band(n, r, config)
    up = (n - 1) * y - np.exp(-r) > (n - 1) * band
    down = y < -band
    iu = int(np.argmax(up)) if up.any() else None
    id_ = int(np.argmax(down)) if down.any() else None
    if iu is None and id_ is None:
        return Classification.ALIVE, None
    if id_ is None or (iu is not None and iu <= id_):
        return Classification.EXCEEDED_UPPER, iu
    return Classification.DROPPED_BELOW_ZERO, id_


def shoot_once(n, a, horizon, config=None, backend=None):
    """Shoot forward from ``psi(0) = a`` and classify against the traps.

    Parameters
    ----------
    n : int
    a : float
        Initial value ``psi(0) = phi(1)``.
    horizon : float
        End of the forward integration.
    config : IntegratorConfig, optional
        Defaults to :func:`shooting_config`.

    Returns
    -------
    ShotOutcome

    Raises
    ------
    NumericalError
        If the integrator underflows before any trap is entered.
    """
    n = check_dimension(n)
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    config = config or shooting_config()
    traj = integrate(PsiField(n), 0.0, a, horizon, config, backend=backend)
    cls, idx = classify_trajectory(n, traj, config)
    if cls is Classification.ALIVE:
        if traj.termination is Termination.STEP_UNDERFLOW:
            raise NumericalError(
                f"step underflow at r={traj.r_last:.6g} before the shot "
                f"from a={a!r} was classified")
        if not traj.reached_end:
            # blew up without entering a trap: cannot happen for the
            # exact flow, so treat as a tolerance problem
            raise NumericalError(
                f"shot from a={a!r} ended ({traj.termination.value}) "
                "inside the trapping region")
        return ShotOutcome(cls, horizon, traj, a, horizon)
    return ShotOutcome(cls, float(traj.r[idx]), traj, a, horizon)


def backward_solutions(n, horizon, config=None, r_end=0.0, backend=None):
    """Backward solutions from ``(horizon, 0)`` and the upper barrier.

    Returns
    -------
    (Trajectory, Trajectory)
        Lower and upper solutions, integrated from ``horizon`` down to
        ``r_end``.
    """
    n = check_dimension(n)
    config = config or shooting_config()
    f = PsiField(n)
    lo = integrate(f, horizon, 0.0, r_end, config, backend=backend)
    hi = integrate(f, horizon, math.exp(-horizon) / (n - 1), r_end, config,
                   backend=backend)
    for t in (lo, hi):
        if not t.reached_end:
            raise NumericalError(
                f"backward solution from r={horizon} stopped at "
                f"r={t.r_last:.6g} ({t.termination.value})")
    return lo, hi


def backward_interval(n, horizon, config=None, backend=None):
    """Initial values whose forward shots stay trapped up to ``horizon``."""
    lo, hi = backward_solutions(n, horizon, config, backend=backend)
    # the exact interval is far narrower than the integrator error, so
    # the computed ends may come out swapped
    a, b = float(lo.y[-1]), float(hi.y[-1])
    return min(a, b), max(a, b)


@dataclass
class AcceptedSolution:
    """The trapped solution on ``[0, r_max]``.

    Represented by the two backward solutions started at the barriers at
    ``r_start > r_max``; they enclose the true solution and their gap on
    ``[0, r_max]`` is far below the integrator tolerance.
    """

    n: int
    lower: Trajectory
    upper: Trajectory
    r_max: float
    r_start: float

    def sample(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > self.r_max * (1 + 1e-12)):
            raise DomainError(f"accepted solution covers [0, {self.r_max}]")
        y = 0.5 * (self.lower.sample(x)[0] + self.upper.sample(x)[0])
        dy = np.array([psi_rhs(self.n, xi, yi) for xi, yi in
                       zip(np.ravel(x), np.ravel(y))]).reshape(y.shape)
        return y, dy

    def gap(self, x):
        return self.upper.sample(x)[0] - self.lower.sample(x)[0]

    @property
    def grid(self):
        r = self.lower.r[::-1]
        r = r[r <= self.r_max]
        if r[-1] < self.r_max:
            r = np.append(r, self.r_max)
        return r

    @property
    def values(self):
        return self.sample(self.grid)[0]


def accepted_solution(n, r_max, margin=20.0, config=None, backend=None):
    """Trapped solution on ``[0, r_max]`` from barrier values at ``r_max + margin``."""
    lo, hi = backward_solutions(n, r_max + margin, config, backend=backend)
    return AcceptedSolution(n, lo, hi, r_max, r_max + margin)


@dataclass
class ShootingResult:
    """Outcome of :func:`bisect_initial`.

    Attributes
    ----------
    a_star : float
    bracket_history : list of (a_lo, a_hi, horizon)
        One entry per bracket update; brackets are nested.
    final_horizon : float
    psi_profile : AcceptedSolution
    shots : list of (a, horizon, classification, exit_radius)
    survival_interval : (float, float) or None
        Backward-certified initial values surviving to the target.
    floor_reached : bool
        The bracket shrank to adjacent doubles before a forward shot
        survived to the target.
    """

    n: int
    a_star: float
    bracket_history: list
    final_horizon: float
    psi_profile: AcceptedSolution
    shots: list = field(default_factory=list)
    survival_interval: tuple | None = None
    floor_reached: bool = False

    @property
    def bracket(self):
        return self.bracket_history[-1][:2]


def bisect_initial(n, target_horizon=20.0, a_tol=1e-12, config=None,
                   step=SCHEDULE_STEP, margin=20.0, max_horizon=None,
                   backend=None):
    """Bisect ``psi(0)`` to the solution trapped up to ``target_horizon``.

    Starts from ``[0, 1/(n-1)]`` with horizon ``step``.  A dropped shot
    raises the lower end, an exceeded shot lowers the upper end, and an
    alive shot extends the horizon by ``step``.  Ends when the bracket is
    narrower than ``a_tol`` and the midpoint survives to the target.

    If the bracket reaches adjacent doubles first (forward shots cannot
    resolve long horizons), survival is certified by the backward
    interval at ``target_horizon``: the bracket must meet it within
    ``a_tol``.

    Raises
    ------
    NumericalError
        When neither criterion can be met; the message lists the last
        classifications.
    """
    n = check_dimension(n)
    if not target_horizon > 0 or not a_tol > 0 or not step > 0:
        raise DomainError("target_horizon, a_tol and step must be positive")
    config = config or shooting_config()
    max_horizon = max_horizon or target_horizon + 40.0
    lo, hi = 0.0, 1.0 / (n - 1)
    horizon = min(step, target_horizon)
    history = [(lo, hi, horizon)]
    shots = []
    floor = False
    accepted = None
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            floor = True
            break
        out = shoot_once(n, mid, horizon, config, backend=backend)
        shots.append((mid, horizon, out.classification.value,
                      out.exit_radius))
        if out.classification is Classification.DROPPED_BELOW_ZERO:
            lo = mid
            history.append((lo, hi, horizon))
        elif out.classification is Classification.EXCEEDED_UPPER:
            hi = mid
            history.append((lo, hi, horizon))
        elif horizon >= target_horizon and hi - lo < a_tol:
            accepted = mid
            break
        elif horizon >= max_horizon:
            break
        else:
            horizon = horizon + step
            if horizon < target_horizon + step:
                horizon = min(horizon, target_horizon)
            history.append((lo, hi, horizon))

    interval = None
    if accepted is None:
        interval = backward_interval(n, target_horizon, config,
                                     backend=backend)
        a_lo, a_hi = interval
        meets = max(lo, a_lo) <= min(hi, a_hi) + a_tol
        if not (hi - lo < a_tol and meets):
            last = ", ".join(f"a={a:.17g}@{h:g}:{c}" for a, h, c, _ in
                             shots[-4:])
            raise NumericalError(
                f"bracket [{lo!r}, {hi!r}] has no survivor at "
                f"r={target_horizon}; backward interval "
                f"[{a_lo!r}, {a_hi!r}]; last shots: {last}")
        accepted = 0.5 * (lo + hi)
        horizon = target_horizon
    sol = accepted_solution(n, max(horizon, target_horizon), margin, config,
                            backend=backend)
    return ShootingResult(n, accepted, history, horizon, sol, shots,
                          interval, floor)


def psi_to_phi(result, r_min=None, grid=None):
    """Convert the accepted solution to a radial profile.

    Radii are ``x = e^-t``; ``phi(x) = psi(t)`` and
    ``phi'(x) = -psi'(t) / x``.

    Parameters
    ----------
    result : ShootingResult
    r_min : float, optional
        Smallest radius; defaults to ``exp(-final_horizon)``.
    grid : array_like, optional
        Radii in ``[r_min, 1]`` to sample at; defaults to the integrator
        steps.
    """
    sol = result.psi_profile
    t_max = sol.r_max if r_min is None else -math.log(r_min)
    if t_max > sol.r_max * (1 + 1e-12):
        raise DomainError(f"accepted solution only reaches radius "
                          f"{math.exp(-sol.r_max):.3g}")
    if grid is None:
        t = sol.grid
        t = np.append(t[t < t_max], t_max)
        x = np.exp(-t)[::-1]
    else:
        x = np.asarray(grid, dtype=float)
        if np.any(x < math.exp(-t_max) * (1 - 1e-12)) or \
                np.any(x > 1 + 1e-15):
            raise DomainError(f"shooting profile covers radii in "
                              f"[{math.exp(-t_max):.3g}, 1]")
    t = np.clip(-np.log(x), 0.0, sol.r_max)
    y, dy = sol.sample(t)
    return RadialProfile(x, y, -dy / x, result.n, Method.SHOOTING,
                         {"a_star": result.a_star,
                          "horizon": result.final_horizon})


def write_trajectory_csv(n, r, psi, fh, header_comment=None):
    """Columns ``r, psi, w, upper_barrier`` with ``w = e^r psi``."""
    if header_comment:
        fh.write(f"# {header_comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r", "psi", "w", "upper_barrier"])
    for ri, yi in zip(r, psi):
        w.writerow([f"{ri:.17g}", f"{yi:.17g}", f"{math.exp(ri) * yi:.17g}",
                    f"{math.exp(-ri) / (n - 1):.17g}"])


# ---------------------------------------------------------------------------
# figure data

def backward_family(n, eps=0.5, k0_range=range(3, 13), r_end=1.0,
                    config=None, samples=200, backend=None):
    """Backward solutions through ``(k eps, 0)`` and the upper barrier.

    Returns
    -------
    list of dict
        One entry per curve with keys ``k0``, ``r0``, ``start``
        (``"zero"`` or ``"barrier"``), ``r`` and ``psi``.
    """
    n = check_dimension(n)
    config = config or shooting_config()
    f = PsiField(n)
    curves = []
    for k in k0_range:
        r0 = k * eps
        if r0 <= r_end:
            raise DomainError(f"k0={k} starts at r={r0} <= {r_end}")
        for start, y0 in (("zero", 0.0), ("barrier", math.exp(-r0) / (n - 1))):
            tr = integrate(f, r0, y0, r_end, config, backend=backend)
            if not tr.reached_end:
                raise NumericalError(f"backward curve from r={r0} stopped "
                                     f"({tr.termination.value})")
            r = np.linspace(r_end, r0, samples)
            curves.append({"k0": k, "r0": r0, "start": start, "r": r,
                           "psi": tr.sample(r)[0]})
    return curves


def forward_family(n, a_values, horizon=6.0, clip=4.0, config=None,
                   samples=300, backend=None):
    """Forward shots ``psi(0) = a`` mapped to radii ``x = e^-t``.

    Each curve is cut where ``|phi|`` exceeds ``clip`` or the shot blows up.

    Returns
    -------
    list of dict
        Keys ``a``, ``classification``, ``x`` and ``phi`` (``x``
        increasing).
    """
    n = check_dimension(n)
    config = config or shooting_config()
    curves = []
    for a in a_values:
        out = shoot_once(n, float(a), horizon, config, backend=backend)
        tr = out.trajectory
        big = np.abs(tr.y) > clip
        t_end = float(tr.r[np.argmax(big)]) if big.any() else tr.r_last
        t = np.linspace(0.0, t_end, samples)
        y = tr.sample(t)[0]
        keep = np.abs(y) <= clip
        curves.append({"a": float(a),
                       "classification": out.classification.value,
                       "x": np.exp(-t[keep])[::-1], "phi": y[keep][::-1]})
    return curves
