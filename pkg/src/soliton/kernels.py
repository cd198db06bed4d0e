"""Backend selection for the integrator kernel.

The compiled core is used when it imports; set ``SOLITON_PURE_PYTHON=1``
to force the pure-Python twin (useful for debugging and benchmarks).
"""
import os

from . import _pycore

KIND_PHI = _pycore.KIND_PHI
KIND_PSI = _pycore.KIND_PSI
KIND_PHI_EPS = _pycore.KIND_PHI_EPS


def _load_compiled():
    if os.environ.get("SOLITON_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _core
    except ImportError:
        return None
    return _core


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "python"


def dopri_builtin(kind, n, eps, r0, y0, r1, atol, rtol, hmax, hmin, blowup,
                  backend=None):
    """Run the built-in kernel ``kind`` on the selected backend.

    ``backend`` may be ``"cython"`` or ``"python"`` to override the
    import-time choice.
    """
    use = backend or BACKEND
    if use == "cython":
        if _compiled is None:
            raise RuntimeError("compiled core is not available")
        impl = _compiled.dopri_builtin
    elif use == "python":
        impl = _pycore.dopri_builtin
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return impl(int(kind), float(n), float(eps), float(r0), float(y0),
                float(r1), float(atol), float(rtol), float(hmax),
                float(hmin), float(blowup))


def dopri_callable(f, r0, y0, r1, atol, rtol, hmax, hmin, blowup):
    """Integrate an arbitrary Python right-hand side."""
    return _pycore.dopri(f, float(r0), float(y0), float(r1), float(atol),
                         float(rtol), float(hmax), float(hmin), float(blowup))


def compiled_available():
    return _compiled is not None
