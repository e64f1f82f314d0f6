"""Pure-numpy implementations of the solver inner loops.

Reference backend: always available, used when SL0LAB_BACKEND=numpy or when
numba is not importable.  Semantics must match ``numba_backend`` exactly up
to floating-point rounding.
"""

import numpy as np
import scipy.linalg

NAME = "numpy"


def descent_direction(x, sigma):
    """d_i = x_i * exp(-x_i^2 / (2 sigma^2)), the scaled sparsity gradient."""
    return x * np.exp(-(x * x) / (2.0 * sigma * sigma))


def inner_loop_pinv(x, a, q1, r, y, mu, sigma, cap, eps):
    """Run up to ``cap`` gradient steps with pseudo-inverse re-projection.

    Each pass takes an unconstrained step along the descent direction and
    re-projects onto {x : a @ x = y} via the triangular factor.  When
    ``eps > 0`` the loop exits early once the iterate moves by no more than
    ``sigma * eps``.  ``x`` is updated in place; returns the number of
    passes executed.
    """
    check = eps > 0.0
    threshold = sigma * eps
    x_prev = np.zeros_like(x)
    i = 0
    while i < cap:
        if check:
            if np.linalg.norm(x - x_prev) <= threshold:
                break
            np.copyto(x_prev, x)
        x -= mu * (x * np.exp(-(x * x) / (2.0 * sigma * sigma)))
        resid = a @ x
        resid -= y
        u = scipy.linalg.solve_triangular(r, resid, trans="T", check_finite=False)
        x -= q1 @ u
        i += 1
    return i


def inner_loop_q2(x, q2, mu, sigma, cap, eps):
    """Same loop with the projected step taken through the null basis.

    The update x -= mu * q2 @ (q2.T @ d) never leaves the feasible set, so
    no re-projection is needed.  ``x`` is updated in place.
    """
    if q2.shape[1] == 0:
        return 0
    check = eps > 0.0
    threshold = sigma * eps
    x_prev = np.zeros_like(x)
    i = 0
    while i < cap:
        if check:
            if np.linalg.norm(x - x_prev) <= threshold:
                break
            np.copyto(x_prev, x)
        d = x * np.exp(-(x * x) / (2.0 * sigma * sigma))
        v = q2.T @ d
        x -= mu * (q2 @ v)
        i += 1
    return i


def sl0_loop_pinv(x, a, q1, r, y, mus, caps, sigma0, sigma_up, eps):
    """Full solve: one entry per sigma round in mus/caps."""
    sigma = sigma0
    total = 0
    for m in range(len(caps)):
        total += inner_loop_pinv(x, a, q1, r, y, mus[m], sigma, caps[m], eps)
        sigma *= sigma_up
    return total


def sl0_loop_q2(x, q2, mus, caps, sigma0, sigma_up, eps):
    sigma = sigma0
    total = 0
    for m in range(len(caps)):
        total += inner_loop_q2(x, q2, mus[m], sigma, caps[m], eps)
        sigma *= sigma_up
    return total


def iht_loop(a, y, k, step, max_iters, tol):
    """Iterative hard thresholding with relaxed step and oracle sparsity.

    Returns (best iterate by relative residual, iterations run, best
    relative residual).
    """
    n, big_n = a.shape
    x = np.zeros(big_n)
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        return x, 0, 0.0
    best_x = x.copy()
    best_rel = 1.0
    resid = y.copy()
    iters = 0
    for _ in range(max_iters):
        x = x + step * (a.T @ resid)
        if k < big_n:
            drop = np.argpartition(np.abs(x), big_n - k)[: big_n - k]
            x[drop] = 0.0
        resid = y - a @ x
        rel = np.linalg.norm(resid) / y_norm
        iters += 1
        if rel < best_rel:
            best_rel = rel
            best_x = x.copy()
        if rel < tol:
            break
    return best_x, iters, best_rel
