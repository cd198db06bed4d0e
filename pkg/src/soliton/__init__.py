"""Numerical solvers for rotationally symmetric translating solitons.

The graph ``u(|x|)`` over ``R^n`` translates under mean curvature flow
when ``phi = u'`` solves

    phi' = (1 + phi^2) (1 - (n - 1) phi / r),    phi(0) = 0,

which is singular at the origin.  The package treats it five ways: an
exact-rational power series, a weighted fixed-point iteration near the
origin, shooting in the exponential coordinate ``t = -log r``, a shifted
regular equation, and initial values placed at ``r = 1/k``.
"""
__version__ = "0.1.0"

from .kernels import BACKEND, compiled_available
from .ode import (DomainError, IntegratorConfig, Method, NumericalError,
                  PhiEpsField, PhiField, PsiField, RadialProfile, Termination,
                  Trajectory, integrate)
from .series import (approx_polynomial, check_decay_bound, check_decay_rate,
                     coefficients, estimate_radius, eval_series,
                     residual_order, residual_polynomial, series_profile,
                     sigma2, sigma3)
from .picard import PicardConfig, picard_solve
from .shooting import bisect_initial, psi_to_phi
from .approx import (solve_one_over_k, solve_regularized, sweep_one_over_k,
                     sweep_regularized)
from .validation import (check_asymptotic_expansion, check_origin_regularity,
                         check_psi_asymptotics, compare_methods, ode_residual,
                         validate)

__all__ = [
    "BACKEND", "compiled_available", "DomainError", "IntegratorConfig",
    "Method", "NumericalError", "PhiEpsField", "PhiField", "PsiField",
    "RadialProfile", "Termination", "Trajectory", "integrate",
    "approx_polynomial", "check_decay_bound", "check_decay_rate",
    "coefficients", "estimate_radius", "eval_series", "residual_order",
    "residual_polynomial", "series_profile", "sigma2", "sigma3",
    "PicardConfig", "picard_solve", "bisect_initial", "psi_to_phi",
    "solve_one_over_k", "solve_regularized", "sweep_one_over_k",
    "sweep_regularized", "check_asymptotic_expansion",
    "check_origin_regularity", "check_psi_asymptotics", "compare_methods",
    "ode_residual", "validate",
]
