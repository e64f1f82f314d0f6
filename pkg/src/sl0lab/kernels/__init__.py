"""Backend dispatch for the hot numeric kernels.

Two interchangeable implementations exist: a numba-compiled one and a
pure-numpy fallback.  The active backend is picked once at import time from
the ``SL0LAB_BACKEND`` environment variable:

* ``auto`` (default) - numba when importable, else numpy
* ``numba``          - require the compiled backend
* ``numpy``          - force the fallback

``use_backend`` swaps the implementation at runtime (used by the tests and
by ``benchmarks/bench_backends.py`` to compare both in one process).
"""

import os

from . import numpy_backend

_BACKENDS = {"numpy": numpy_backend}

try:
    from . import numba_backend

    _BACKENDS["numba"] = numba_backend
except ImportError:  # pragma: no cover - exercised only without numba
    numba_backend = None

_active = None
_active_name = None


def available_backends():
    return sorted(_BACKENDS)

def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def use_backend(name):
    """Select the kernel implementation; returns the previous backend name."""
    global _active, _active_name
    previous = _active_name
    _active = get_backend(name)
    _active_name = name
    return previous


def active_backend():
    return _active_name


def _initial_choice():
    requested = os.environ.get("SL0LAB_BACKEND", "auto").strip().lower()
    if requested == "auto":
        return "numba" if "numba" in _BACKENDS else "numpy"
    if requested not in _BACKENDS:
        raise ValueError(
            f"SL0LAB_BACKEND={requested!r} not available; "
            f"choose from {available_backends()} or 'auto'"
        )
    return requested


use_backend(_initial_choice())


def descent_direction(x, sigma):
    return _active.descent_direction(x, sigma)


def inner_loop_pinv(x, a, q1, r, y, mu, sigma, cap, eps):
    return _active.inner_loop_pinv(x, a, q1, r, y, mu, sigma, cap, eps)


def inner_loop_q2(x, q2, mu, sigma, cap, eps):
    return _active.inner_loop_q2(x, q2, mu, sigma, cap, eps)


def sl0_loop_pinv(x, a, q1, r, y, mus, caps, sigma0, sigma_up, eps):
    return _active.sl0_loop_pinv(x, a, q1, r, y, mus, caps, sigma0, sigma_up, eps)


def sl0_loop_q2(x, q2, mus, caps, sigma0, sigma_up, eps):
    return _active.sl0_loop_q2(x, q2, mus, caps, sigma0, sigma_up, eps)


def iht_loop(a, y, k, step, max_iters, tol):
    return _active.iht_loop(a, y, k, step, max_iters, tol)
