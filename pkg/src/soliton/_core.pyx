# cython: language_level=3
"""Compiled Dormand-Prince 5(4) kernel for the built-in right-hand sides.

Same step control and arithmetic as ``_pycore.dopri``; only the
right-hand side is inlined as C.
"""
import numpy as np

from libc.math cimport exp, fabs, fmin, fmax, pow, isfinite
from libc.stdlib cimport malloc, realloc, free

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0
cdef double ALPHA = 0.7 / 5
cdef double BETA = 0.4 / 5

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187
cdef double A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247
cdef double A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192
cdef double B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432
cdef double D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072
cdef double D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844
cdef double D7 = 69997945.0 / 29380423


cdef struct Field:
    int kind
    double n
    double eps
    double s


cdef inline double rhs(Field* F, double r, double y) nogil:
    if F.kind == 0:
        return (1.0 + y * y) * (1.0 - (F.n - 1.0) * y / r)
    elif F.kind == 1:
        return (1.0 + y * y) * ((F.n - 1.0) * y - exp(-r))
    return (1.0 + y * y) * (1.0 - (F.n - 1.0) * y / (r + F.eps))


cdef inline double g(Field* F, double t, double y) nogil:
    return F.s * rhs(F, F.s * t, y)


cdef struct Buf:
    double* r
    double* y
    double* dy
    double* cont
    Py_ssize_t size
    Py_ssize_t cap


cdef int push(Buf* b, double r, double y, double dy) nogil:
    cdef Py_ssize_t cap
    cdef double* p
    if b.size == b.cap:
        cap = 2 * b.cap
        p = <double*>realloc(b.r, cap * sizeof(double))
        if p == NULL:
            return -1
        b.r = p
        p = <double*>realloc(b.y, cap * sizeof(double))
        if p == NULL:
            return -1
        b.y = p
        p = <double*>realloc(b.dy, cap * sizeof(double))
        if p == NULL:
            return -1
        b.dy = p
        p = <double*>realloc(b.cont, 5 * cap * sizeof(double))
        if p == NULL:
            return -1
        b.cont = p
        b.cap = cap
    b.r[b.size] = r
    b.y[b.size] = y
    b.dy[b.size] = dy
    b.size += 1
    return 0


cdef double initial_step(Field* F, double t0, double y0, double f0,
                         double t_span, double atol, double rtol,
                         double hmax) nogil:
    cdef double sc = atol + rtol * fabs(y0)
    cdef double d0 = fabs(y0) / sc
    cdef double d1 = fabs(f0) / sc
    cdef double h0, h1, f1, d2, dm
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = fmin(h0, t_span)
    f1 = g(F, t0 + h0, y0 + h0 * f0)
    if not isfinite(f1):
        return fmin(h0, hmax)
    d2 = fabs(f1 - f0) / sc / h0
    dm = fmax(d1, d2)
    if dm <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / dm, 1.0 / 5.0)
    return fmin(fmin(100.0 * h0, h1), fmin(hmax, t_span))


def dopri_builtin(int kind, double n, double eps, double r0, double y0,
                  double r1, double atol, double rtol, double hmax,
                  double hmin, double blowup):
    """Integrate a built-in field from ``(r0, y0)`` to ``r1``.

    ``kind`` is 0 for the singular radial equation, 1 for the
    exponential-coordinate equation and 2 for the shifted equation.
    Returns ``(r, y, dy, cont, status)``: numpy arrays, the per-step
    dense-output coefficients with shape ``(len(r) - 1, 5)`` and an int
    status code.
    """
    if kind < 0 or kind > 2:
        raise ValueError(f"unknown kernel kind {kind}")
    cdef Field F
    F.kind = kind
    F.n = n
    F.eps = eps
    F.s = 1.0 if r1 > r0 else -1.0
    if r1 == r0:
        return (np.array([r0]), np.array([y0]),
                np.array([rhs(&F, r0, y0)]), np.empty((0, 5)), 0)

    cdef Buf b
    b.cap = 256
    b.size = 0
    b.r = <double*>malloc(b.cap * sizeof(double))
    b.y = <double*>malloc(b.cap * sizeof(double))
    b.dy = <double*>malloc(b.cap * sizeof(double))
    b.cont = <double*>malloc(5 * b.cap * sizeof(double))
    if b.r == NULL or b.y == NULL or b.dy == NULL or b.cont == NULL:
        free_buf(&b)
        raise MemoryError()

    cdef double s = F.s
    cdef double t = s * r0, t_end = s * r1, y = y0
    cdef double k1, k2, k3, k4, k5, k6, k7, y_new, err, sc, fac, dq, bspl
    cdef double* c
    cdef double remaining, h, err_prev = 1e-4
    cdef bint last, rejected = False
    cdef int status = 0
    cdef int oom = 0

    with nogil:
        k1 = g(&F, t, y)
        oom = push(&b, r0, y, s * k1)
        h = initial_step(&F, t, y, k1, t_end - t, atol, rtol, hmax)
        while oom == 0:
            remaining = t_end - t
            if remaining <= 0.0:
                break
            last = False
            if h >= remaining:
                h = remaining
                last = True
            if (h < hmin and not last) or t + h == t:
                status = 3
                break

            k2 = g(&F, t + C2 * h, y + h * A21 * k1)
            k3 = g(&F, t + C3 * h, y + h * (A31 * k1 + A32 * k2))
            k4 = g(&F, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = g(&F, t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3
                                            + A54 * k4))
            k6 = g(&F, t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3
                                       + A64 * k4 + A65 * k5))
            y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = g(&F, t + h, y_new)
            err = fabs(h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6
                            + E7 * k7))
            sc = atol + rtol * fmax(fabs(y), fabs(y_new))
            err = err / sc

            if not isfinite(err) or not isfinite(y_new):
                h *= FAC_MIN
                rejected = True
                if h < hmin:
                    status = 3
                    break
                continue

            if err <= 1.0:
                # coefficients for the step about to be accepted; slot
                # b.size - 1 exists because the start point was pushed
                c = b.cont + 5 * (b.size - 1)
                dq = y_new - y
                bspl = h * k1 - dq
                c[0] = y
                c[1] = dq
                c[2] = bspl
                c[3] = dq - h * k7 - bspl
                c[4] = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6
                            + D7 * k7)
                if last:
                    t = t_end
                else:
                    t = t + h
                y = y_new
                k1 = k7
                oom = push(&b, s * t, y, s * k7)
                if fabs(y) > blowup:
                    status = 1 if y > 0 else 2
                    break
                if last:
                    break
                if err == 0.0:
                    fac = FAC_MAX
                else:
                    fac = SAFETY * pow(err, -ALPHA) * pow(err_prev, BETA)
                    fac = fmin(FAC_MAX, fmax(FAC_MIN, fac))
                if rejected:
                    fac = fmin(fac, 1.0)
                h = fmin(h * fac, hmax)
                err_prev = fmax(err, 1e-4)
                rejected = False
            else:
                fac = fmax(FAC_MIN, SAFETY * pow(err, -1.0 / 5.0))
                h *= fac
                rejected = True
                if h < hmin:
                    status = 3
                    break

    try:
        if oom != 0:
            raise MemoryError()
        rs = np.empty(b.size)
        ys = np.empty(b.size)
        dys = np.empty(b.size)
        conts = np.empty((b.size - 1, 5))
        copy_out(rs, ys, dys, conts.reshape(-1), &b)
    finally:
        free_buf(&b)
    return rs, ys, dys, conts, status


cdef void free_buf(Buf* b) noexcept:
    free(b.r)
    free(b.y)
    free(b.dy)
    free(b.cont)


cdef void copy_out(double[::1] rs, double[::1] ys, double[::1] dys,
                   double[::1] conts, Buf* b) noexcept:
    cdef Py_ssize_t i
    for i in range(b.size):
        rs[i] = b.r[i]
        ys[i] = b.y[i]
        dys[i] = b.dy[i]
    for i in range(5 * (b.size - 1)):
        conts[i] = b.cont[i]
