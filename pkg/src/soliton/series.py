"""Exact power-series solution at the origin.

The odd series ``phi(r) = sum_i a_i (r/n)^(2i+1)`` solves the radial
equation near ``r = 0``.  Coefficients come from a cubic convolution
recursion and are kept as exact rationals; floats only appear when the
series is evaluated or its decay is measured.

Exact sums are accumulated over a common denominator (one lcm pass,
then a single reduction), which is far cheaper than adding reduced
fractions term by term.  ``gmpy2`` is used for the big integers when it
is installed; plain Python ints are the fallback.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ode import DomainError, Method, RadialProfile, check_dimension

try:
    import gmpy2
except ImportError:  # pragma: no cover - exercised only without gmpy2
    gmpy2 = None

Rational = Fraction

if gmpy2 is not None:
    _Z, _Q, _lcm = gmpy2.mpz, gmpy2.mpq, gmpy2.lcm
else:  # pragma: no cover
    _Z, _Q, _lcm = int, Fraction, math.lcm


def _csum(nums, dens):
    """Exact ``sum(nums[i] / dens[i])`` via one common denominator."""
    if not nums:
        return _Q(0)
    L = _Z(1)
    for d in dens:
        L = _lcm(L, d)
    s = _Z(0)
    for p, d in zip(nums, dens):
        s += p * (L // d)
    return _Q(s, L)


def _to_fraction(q):
    return Fraction(int(q.numerator), int(q.denominator))


def _log_abs(q):
    """``log|q|`` for a nonzero rational of any size."""
    return math.log(abs(int(q.numerator))) - math.log(int(q.denominator))


# ---------------------------------------------------------------------------
# combinatorial sums

@dataclass(frozen=True)
class SumTable:
    """``sigma2[l]`` and ``sigma3[l]`` for ``0 <= l <= L``."""

    sigma2: tuple
    sigma3: tuple

    @property
    def max_l(self):
        return len(self.sigma2) - 1


_SUMS = SumTable((), ())


def sum_table(max_l):
    """Exact pair and triple reciprocal sums up to ``max_l``.

    ``sigma2[l]`` sums ``1/(i j)`` over ``i + j = l`` and ``sigma3[l]``
    sums ``1/(i j k)`` over ``i + j + k = l`` (all parts positive).  The
    triple sum is the convolution of ``1/i`` with the cached pair sums.
    Results are memoized and extended on demand.
    """
    global _SUMS
    if max_l < 0:
        raise DomainError("max_l must be non-negative")
    have = len(_SUMS.sigma2)
    if have > max_l:
        return SumTable(_SUMS.sigma2[:max_l + 1], _SUMS.sigma3[:max_l + 1])
    s2 = [_Q(q.numerator, q.denominator) for q in _SUMS.sigma2]
    s3 = [_Q(q.numerator, q.denominator) for q in _SUMS.sigma3]
    for l in range(have, max_l + 1):
        s2.append(_csum([_Z(1)] * max(l - 1, 0),
                        [_Z(i * (l - i)) for i in range(1, l)]))
        s3.append(_csum([s2[l - i].numerator for i in range(1, l - 1)],
                        [i * s2[l - i].denominator for i in range(1, l - 1)]))
    _SUMS = SumTable(tuple(_to_fraction(q) for q in s2),
                     tuple(_to_fraction(q) for q in s3))
    return SumTable(_SUMS.sigma2, _SUMS.sigma3)


def sigma2(l):
    """Exact ``sum 1/(i j)`` over ``i, j >= 1`` with ``i + j = l``."""
    if l < 0:
        raise DomainError("l must be non-negative")
    return sum_table(l).sigma2[l]


def sigma3(l):
    """Exact ``sum 1/(i j k)`` over positive triples with ``i + j + k = l``."""
    if l < 0:
        raise DomainError("l must be non-negative")
    return sum_table(l).sigma3[l]


def sigma2_integral_bound(k):
    """Upper bound ``2 log(k-2)/(k-1) + 2/(k-2)`` for ``sigma2(k - 1)``."""
    if k < 3:
        raise DomainError("bound holds for k >= 3")
    return 2 * math.log(k - 2) / (k - 1) + 2 / (k - 2)


def sigma3_integral_bound(l):
    """Upper bound for ``sigma3(l - 1)``, valid for ``l >= 4``."""
    if l < 4:
        raise DomainError("bound holds for l >= 4")
    return (4 * math.log(l - 2) * math.log(l - 3) / (l - 1)
            + 5 * math.log(l - 3) / (l - 2) + 4 / (l - 3))


def verification_lines(max_l=500):
    """Text report of the near-extremal pair and triple sums.

    Lists ``l: 1 - sigma2(l)`` whenever ``sigma2(l) > 4/5``, a blank
    line, then ``l: 2 - sigma3(l)`` whenever ``sigma3(l) > 9/5``, for
    ``l <= max_l``.  Every printed margin is non-negative exactly when
    the uniform bounds 1 and 2 hold.
    """
    t = sum_table(max_l)
    out = []
    for l, s in enumerate(t.sigma2):
        if s > Fraction(4, 5):
            out.append(f"{l}: {1 - s}")
    out.append("")
    for l in range(3, max_l + 1):
        s = t.sigma3[l]
        if s > Fraction(9, 5):
            out.append(f"{l}: {2 - s}")
    return out


# ---------------------------------------------------------------------------
# coefficients

@dataclass(frozen=True)
class CoefficientTable:
    """Exact coefficients ``a_0 .. a_L`` for dimension ``n``."""

    n: int
    coeffs: tuple

    @property
    def max_l(self):
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, l):
        return self.coeffs[l]

    def floats(self, M=None):
        M = self.max_l if M is None else M
        return np.array([float(c) for c in self.coeffs[:M + 1]])


_TABLES = {}


def _recursion(n, L):
    a = [_Q(1), _Q(1, n + 2)]
    P = [_Z(1), _Z(1)]
    Q = [_Z(1), _Z(n + 2)]
    # pair sums over i + j = m with i, j >= 1, stored as num/den
    s2P = [_Z(0)] * (L + 1)
    s2Q = [_Z(1)] * (L + 1)
    for l in range(2, L + 1):
        m = l - 1
        nums, dens = [], []
        for i in range(1, (m + 1) // 2):
            nums.append(2 * P[i] * P[m - i])
            dens.append(Q[i] * Q[m - i])
        if m % 2 == 0:
            h = m // 2
            nums.append(P[h] * P[h])
            dens.append(Q[h] * Q[h])
        s2 = _csum(nums, dens)
        s2P[m], s2Q[m] = s2.numerator, s2.denominator
        s3 = _csum([P[i] * s2P[m - i] for i in range(1, m - 1)],
                   [Q[i] * s2Q[m - i] for i in range(1, m - 1)])
        al = (-(n - 1) * s3 + (-2 * n + 3) * s2 + (-n + 3) * a[l - 1]) \
            / (2 * l + n)
        a.append(al)
        P.append(al.numerator)
        Q.append(al.denominator)
    return a[:L + 1]


def coefficients(n, L):
    """Exact series coefficients ``a_0 .. a_L``.

    ``a_0 = 1``, ``a_1 = 1/(n+2)`` and for ``l >= 2``::

        (2l + n) a_l = -(n-1) T_{l-1} + (3 - 2n) S_{l-1} + (3 - n) a_{l-1}

    where ``S_m`` and ``T_m`` sum ``a_i a_j`` and ``a_i a_j a_k`` over
    positive indices adding up to ``m``.

    Parameters
    ----------
    n : int
        Dimension, at least 2.
    L : int
        Highest index.

    Returns
    -------
    CoefficientTable
    """
    n = check_dimension(n)
    if L < 0:
        raise DomainError("L must be non-negative")
    cached = _TABLES.get(n)
    if cached is None or cached.max_l < L:
        coeffs = tuple(_to_fraction(q) for q in _recursion(n, L))
        cached = CoefficientTable(n, coeffs)
        _TABLES[n] = cached
    return CoefficientTable(n, cached.coeffs[:L + 1])


def coefficients_precancellation(n, L):
    """Coefficients from the uncancelled recursion (independent check).

    ``(2l + n) a_l = n S'_{l-1} - (n-1) T'_{l-1}`` with ``S'`` and ``T'``
    the pair and triple convolutions over indices ``>= 0``.  Uses plain
    :class:`fractions.Fraction` arithmetic.
    """
    n = check_dimension(n)
    a = [Fraction(1)]
    S = []   # S[m] = sum_{i+j=m} a_i a_j
    T = []   # T[m] = sum_{i+j+k=m} a_i a_j a_k
    for l in range(1, L + 1):
        m = l - 1
        S.append(sum((a[i] * a[m - i] for i in range(m + 1)), Fraction(0)))
        T.append(sum((a[i] * S[m - i] for i in range(m + 1)), Fraction(0)))
        a.append((n * S[m] - (n - 1) * T[m]) / (2 * l + n))
    return CoefficientTable(n, tuple(a))


# ---------------------------------------------------------------------------
# evaluation

def eval_series(table, r, M=None):
    """Evaluate the truncated series and its derivative.

    Parameters
    ----------
    table : CoefficientTable
    r : float or array_like
    M : int, optional
        Highest coefficient index used; defaults to the whole table.

    Returns
    -------
    (phi, dphi)
        Same shape as ``r``.
    """
    M = table.max_l if M is None else M
    if M < 0 or M > table.max_l:
        raise DomainError(
            f"truncation {M} exceeds table of length {len(table)}")
    n = table.n
    r = np.asarray(r, dtype=float)
    if np.any(np.abs(r) >= n):
        warnings.warn(f"series evaluated at |r| >= {n}, outside the proven "
                      "disc of convergence", RuntimeWarning, stacklevel=2)
    c = table.floats(M)
    u = r / n
    x = u * u
    p = np.zeros_like(x)
    dp = np.zeros_like(x)
    for k in range(M, -1, -1):
        dp = dp * x + p
        p = p * x + c[k]
    # phi = u p(x), dphi/dr = (p + 2 x p'(x)) / n
    phi = u * p
    dphi = (p + 2.0 * x * dp) / n
    if phi.ndim == 0:
        return float(phi), float(dphi)
    return phi, dphi


def default_truncation(n, r_max, tol=1e-17):
    """Smallest ``M`` whose dropped tail is negligible on ``[0, r_max]``."""
    x = (r_max / n) ** 2
    # coefficients decay at least like exp(-lambda l) with lambda ~ 0.3
    lam = 0.3
    q = x * math.exp(-lam)
    if q >= 1:
        raise DomainError(f"r_max={r_max} is too close to the radius of "
                          "convergence for a truncation estimate")
    M = math.ceil(math.log(tol * (1 - q)) / math.log(q))
    return max(M, 4)


def series_profile(n, grid, M=None):
    """Series solution sampled on ``grid`` as a :class:`RadialProfile`."""
    n = check_dimension(n)
    grid = np.asarray(grid, dtype=float)
    if M is None:
        M = min(default_truncation(n, float(np.max(np.abs(grid)))), 400)
    table = coefficients(n, M)
    phi, dphi = eval_series(table, grid, M)
    return RadialProfile(grid, np.atleast_1d(phi), np.atleast_1d(dphi), n,
                         Method.SERIES, {"truncation": M})


# ---------------------------------------------------------------------------
# decay and radius

@dataclass
class DecayReport:
    """Result of checking ``|a_l| <= 1/(4l)`` exactly."""

    n: int
    max_l: int
    violations: list

    @property
    def passed(self):
        return not self.violations

    @property
    def first_violation(self):
        return self.violations[0] if self.violations else None

    def to_json(self):
        return json.dumps({"n": self.n, "max_l": self.max_l,
                           "violations": self.violations}, sort_keys=True)


def check_decay_bound(table):
    """Compare ``|a_l|`` with ``1/(4l)`` in exact arithmetic for ``l >= 1``."""
    bad = [l for l in range(1, len(table))
           if abs(table[l]) * 4 * l > 1]
    return DecayReport(table.n, table.max_l, bad)


def _neg_log_points(table, lo, hi):
    ls = [l for l in range(lo, hi + 1) if table[l] != 0]
    return np.array(ls, dtype=float), np.array([-_log_abs(table[l])
                                                for l in ls])


def estimate_radius(table, window=None):
    """Radius of convergence from the tail decay of the coefficients.

    Fits ``-log|a_l| ~ c + lambda l`` by least squares over the window
    and returns ``n exp(lambda / 2)``, the radius at which the terms
    ``a_l (r/n)^(2l+1)`` stop decaying.  Zero coefficients are skipped.

    Parameters
    ----------
    table : CoefficientTable
    window : (int, int), optional
        Inclusive index range; defaults to ``(L/2, L)`` with
        ``L = min(450, table.max_l)``.
    """
    if window is None:
        L = min(450, table.max_l)
        window = (L // 2, L)
    lo, hi = window
    if lo < 1 or hi > table.max_l or lo > hi:
        raise DomainError(f"window {window} outside table 1..{table.max_l}")
    ls, y = _neg_log_points(table, lo, hi)
    if len(ls) < 4:
        raise DomainError("fewer than 4 nonzero coefficients in window")
    A = np.vstack([ls, np.ones_like(ls)]).T
    (lam, _), *_ = np.linalg.lstsq(A, y, rcond=None)
    return table.n * math.exp(lam / 2)


def check_decay_rate(table):
    """Largest ``lambda`` with ``|a_l| <= exp(-lambda l)`` on the table.

    Computed as the minimum of ``-log|a_l| / l`` over ``1 <= l <= L``,
    skipping zero coefficients.
    """
    if len(table) < 100:
        raise DomainError("decay rate needs at least 100 coefficients")
    ls, y = _neg_log_points(table, 1, table.max_l)
    return float(np.min(y / ls))


# ---------------------------------------------------------------------------
# polynomial approximants and their residual

def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                if b:
                    out[i + j] += a * b
    return out


def _padd(p, q):
    out = [Fraction(0)] * max(len(p), len(q))
    for i, a in enumerate(p):
        out[i] += a
    for i, b in enumerate(q):
        out[i] += b
    return out


def _pscale(p, c):
    return [c * a for a in p]


def _horner(c, r):
    acc = 0.0 * r
    for a in reversed(c):
        acc = acc * r + a
    return acc


@dataclass(frozen=True)
class ApproxPolynomial:
    """Polynomial ``h(r) = sum_k coeffs[k] r^k`` with exact coefficients.

    ``order`` is the declared vanishing order of the residual
    ``h' - (1 + h^2)(1 - (n-1) h / r)`` at ``r = 0``.
    """

    n: int
    coeffs: tuple
    order: int

    def __call__(self, r):
        return _horner([float(c) for c in self.coeffs], np.asarray(r, float))

    def derivative(self, r):
        d = [float(k * c) for k, c in enumerate(self.coeffs)][1:]
        return _horner(d, np.asarray(r, float))


def approx_polynomial(n, M):
    """Odd truncation ``sum_{i <= M} a_i (r/n)^(2i+1)`` of the series.

    Its residual vanishes to order ``2M + 2`` at the origin.
    """
    n = check_dimension(n)
    if M < 0:
        raise DomainError("M must be non-negative")
    table = coefficients(n, M)
    c = [Fraction(0)] * (2 * M + 2)
    for i in range(M + 1):
        c[2 * i + 1] = table[i] / Fraction(n) ** (2 * i + 1)
    return ApproxPolynomial(n, tuple(c), 2 * M + 2)


def residual_polynomial(h):
    """Exact coefficients of ``h' - (1 + h^2)(1 - (n-1) h / r)``.

    Raises
    ------
    DomainError
        If ``h(0) != 0``, which makes ``h / r`` singular.
    """
    c = list(h.coeffs) or [Fraction(0)]
    if c[0] != 0:
        raise DomainError("residual has a pole at r=0: h(0) must vanish")
    dh = [k * c[k] for k in range(1, len(c))] or [Fraction(0)]
    h_over_r = c[1:] or [Fraction(0)]
    one_plus_h2 = _padd([Fraction(1)], _pmul(c, c))
    bracket = _padd([Fraction(1)], _pscale(h_over_r, -(h.n - 1)))
    res = _padd(dh, _pscale(_pmul(one_plus_h2, bracket), -1))
    while len(res) > 1 and res[-1] == 0:
        res.pop()
    return res


def residual_order(h):
    """Lowest power with a nonzero coefficient in the exact residual.

    Returns ``None`` when the residual vanishes identically.
    """
    res = residual_polynomial(h)
    for k, v in enumerate(res):
        if v != 0:
            return k
    return None


# ---------------------------------------------------------------------------
# export

def write_coefficients_csv(table, fh, header_comment=None):
    """CSV rows ``l, numerator, denominator, float_value``."""
    if header_comment:
        fh.write(f"# {header_comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["l", "numerator", "denominator", "float_value"])
    for l, a in enumerate(table.coeffs):
        w.writerow([l, a.numerator, a.denominator, f"{float(a):.17g}"])
