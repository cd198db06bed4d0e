"""Pure-Python Dormand-Prince 5(4) scalar integrator.

Reference implementation of the kernel in ``_core.pyx``; both follow the
same arithmetic so their trajectories agree to rounding.  This module is
used when the compiled core is unavailable and for arbitrary Python
right-hand sides.
"""
import math

import numpy as np

REACHED_END = 0
BLEW_UP_POSITIVE = 1
BLEW_UP_NEGATIVE = 2
STEP_UNDERFLOW = 3

KIND_PHI = 0
KIND_PSI = 1
KIND_PHI_EPS = 2

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = (
    9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# continuous extension of order 4
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
ALPHA = 0.7 / 5
BETA = 0.4 / 5


def builtin_rhs(kind, n, eps):
    """Return the Python callable matching a compiled-kernel ``kind``."""
    if kind == KIND_PHI:
        def f(r, y):
            return (1.0 + y * y) * (1.0 - (n - 1.0) * y / r)
    elif kind == KIND_PSI:
        def f(r, y):
            return (1.0 + y * y) * ((n - 1.0) * y - math.exp(-r))
    elif kind == KIND_PHI_EPS:
        def f(r, y):
            return (1.0 + y * y) * (1.0 - (n - 1.0) * y / (r + eps))
    else:
        raise ValueError(f"unknown kernel kind {kind}")
    return f


def _initial_step(g, t0, y0, f0, t_span, atol, rtol, hmax):
    sc = atol + rtol * abs(y0)
    d0 = abs(y0) / sc
    d1 = abs(f0) / sc
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_span)
    y1 = y0 + h0 * f0
    f1 = g(t0 + h0, y1)
    if not math.isfinite(f1):
        return min(h0, hmax)
    d2 = abs(f1 - f0) / sc / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** (1.0 / 5.0)
    return min(100.0 * h0, h1, hmax, t_span)


def dopri(f, r0, y0, r1, atol, rtol, hmax, hmin, blowup):
    """Integrate ``y' = f(r, y)`` from ``(r0, y0)`` to ``r1``.

    Returns ``(r, y, dy, cont, status)`` with ``r`` in integration order
    and ``cont`` holding five dense-output coefficients per step (see
    :func:`dense_eval`).  Backward integration (``r1 < r0``) runs forward
    in ``t = -r``.
    """
    rs = [r0]
    ys = [y0]
    cont = []
    if r1 == r0:
        return (np.array(rs), np.array(ys), np.array([f(r0, y0)]),
                np.empty((0, 5)), REACHED_END)
    s = 1.0 if r1 > r0 else -1.0

    def g(t, y):
        return s * f(s * t, y)

    t = s * r0
    t_end = s * r1
    y = y0
    k1 = g(t, y)
    dys = [s * k1]
    h = _initial_step(g, t, y, k1, t_end - t, atol, rtol, hmax)
    err_prev = 1e-4
    rejected = False
    status = REACHED_END

    while True:
        remaining = t_end - t
        if remaining <= 0.0:
            break
        last = False
        if h >= remaining:
            h = remaining
            last = True
        if (h < hmin and not last) or t + h == t:
            status = STEP_UNDERFLOW
            break

        k2 = g(t + C2 * h, y + h * A21 * k1)
        k3 = g(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = g(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = g(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3
                                    + A54 * k4))
        k6 = g(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4
                               + A65 * k5))
        y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = g(t + h, y_new)
        err_abs = abs(h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6
                           + E7 * k7))
        sc = atol + rtol * max(abs(y), abs(y_new))
        err = err_abs / sc

        if not math.isfinite(err) or not math.isfinite(y_new):
            h *= FAC_MIN
            rejected = True
            if h < hmin:
                status = STEP_UNDERFLOW
                break
            continue

        if err <= 1.0:
            dq = y_new - y
            bspl = h * k1 - dq
            cont.append((y, dq, bspl, dq - h * k7 - bspl,
                         h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5
                              + D6 * k6 + D7 * k7)))
            t = t_end if last else t + h
            y = y_new
            k1 = k7
            rs.append(s * t)
            ys.append(y)
            dys.append(s * k7)
            if abs(y) > blowup:
                status = BLEW_UP_POSITIVE if y > 0 else BLEW_UP_NEGATIVE
                break
            if last:
                break
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = SAFETY * err ** (-ALPHA) * err_prev ** BETA
                fac = min(FAC_MAX, max(FAC_MIN, fac))
            if rejected:
                fac = min(fac, 1.0)
            h = min(h * fac, hmax)
            err_prev = max(err, 1e-4)
            rejected = False
        else:
            fac = max(FAC_MIN, SAFETY * err ** (-1.0 / 5.0))
            h *= fac
            rejected = True
            if h < hmin:
                status = STEP_UNDERFLOW
                break

    return (np.array(rs), np.array(ys), np.array(dys),
            np.array(cont).reshape(-1, 5), status)


def dense_eval(r, cont, x):
    """Evaluate the continuous extension at ``x``.

    Parameters
    ----------
    r : ndarray
        Accepted radii in integration order.
    cont : ndarray, shape (len(r) - 1, 5)
        Per-step coefficients returned by :func:`dopri`.
    x : ndarray
        Radii inside ``[min(r), max(r)]``.

    Returns
    -------
    (ndarray, ndarray)
        Values and first derivatives (with respect to ``r``).
    """
    x = np.asarray(x, dtype=float)
    s = 1.0 if r[-1] >= r[0] else -1.0
    t = s * r
    tx = s * x
    i = np.clip(np.searchsorted(t, tx, side="right") - 1, 0, len(t) - 2)
    h = t[i + 1] - t[i]
    th = (tx - t[i]) / h
    th1 = 1.0 - th
    c1, c2, c3, c4, c5 = (cont[i, j] for j in range(5))
    inner = c4 + th1 * c5
    mid = c3 + th * inner
    val = c1 + th * (c2 + th1 * mid)
    # d/dtheta of the nested form
    dinner = -c5
    dmid = inner + th * dinner
    dval = c2 + th1 * mid + th * (-mid + th1 * dmid)
    return val, s * dval / h


def dopri_builtin(kind, n, eps, r0, y0, r1, atol, rtol, hmax, hmin, blowup):
    """Same signature as the compiled ``_core.dopri_builtin``."""
    return dopri(builtin_rhs(kind, n, eps), r0, y0, r1, atol, rtol, hmax,
                 hmin, blowup)
