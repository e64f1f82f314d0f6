"""Numba-compiled twins of the numpy kernels.

Same call signatures and semantics as ``numpy_backend``; the whole inner
loop runs in nopython mode so per-iteration interpreter overhead disappears.
Compiled code is cached on disk, so the JIT cost is paid once per machine.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _solve_upper_transposed(r, v):
    # Forward substitution for r.T @ u = v with r upper triangular.
    n = r.shape[0]
    u = np.empty(n)
    for i in range(n):
        acc = v[i]
        for j in range(i):
            acc -= r[j, i] * u[j]
        u[i] = acc / r[i, i]
    return u


@njit(cache=True)
def descent_direction(x, sigma):
    d = np.empty_like(x)
    two_s2 = 2.0 * sigma * sigma
    for i in range(x.shape[0]):
        d[i] = x[i] * np.exp(-(x[i] * x[i]) / two_s2)
    return d


@njit(cache=True)
def inner_loop_pinv(x, a, q1, r, y, mu, sigma, cap, eps):
    n = a.shape[0]
    big_n = x.shape[0]
    check = eps > 0.0
    threshold = sigma * eps
    two_s2 = 2.0 * sigma * sigma
    x_prev = np.zeros(big_n)
    i = 0
    while i < cap:
        if check:
            s = 0.0
            for j in range(big_n):
                t = x[j] - x_prev[j]
                s += t * t
            if np.sqrt(s) <= threshold:
                break
            for j in range(big_n):
                x_prev[j] = x[j]
        for j in range(big_n):
            x[j] -= mu * (x[j] * np.exp(-(x[j] * x[j]) / two_s2))
        resid = np.dot(a, x)
        for j in range(n):
            resid[j] -= y[j]
        u = _solve_upper_transposed(r, resid)
        corr = np.dot(q1, u)
        for j in range(big_n):
            x[j] -= corr[j]
        i += 1
    return i


@njit(cache=True)
def inner_loop_q2(x, q2, mu, sigma, cap, eps):
    if q2.shape[1] == 0:
        return 0
    big_n = x.shape[0]
    check = eps > 0.0
    threshold = sigma * eps
    two_s2 = 2.0 * sigma * sigma
    x_prev = np.zeros(big_n)
    d = np.empty(big_n)
    i = 0
    while i < cap:
        if check:
            s = 0.0
            for j in range(big_n):
                t = x[j] - x_prev[j]
                s += t * t
            if np.sqrt(s) <= threshold:
                break
            for j in range(big_n):
                x_prev[j] = x[j]
        for j in range(big_n):
            d[j] = x[j] * np.exp(-(x[j] * x[j]) / two_s2)
        v = np.dot(q2.T, d)
        step = np.dot(q2, v)
        for j in range(big_n):
            x[j] -= mu * step[j]
        i += 1
    return i


@njit(cache=True)
def sl0_loop_pinv(x, a, q1, r, y, mus, caps, sigma0, sigma_up, eps):
    # Full solve: one entry per sigma round in mus/caps.
    sigma = sigma0
    total = 0
    for m in range(caps.shape[0]):
        total += inner_loop_pinv(x, a, q1, r, y, mus[m], sigma, caps[m], eps)
        sigma *= sigma_up
    return total


@njit(cache=True)
def sl0_loop_q2(x, q2, mus, caps, sigma0, sigma_up, eps):
    sigma = sigma0
    total = 0
    for m in range(caps.shape[0]):
        total += inner_loop_q2(x, q2, mus[m], sigma, caps[m], eps)
        sigma *= sigma_up
    return total


@njit(cache=True)
def iht_loop(a, y, k, step, max_iters, tol):
    n = a.shape[0]
    big_n = a.shape[1]
    x = np.zeros(big_n)
    y_norm = np.linalg.norm(y)
    if y_norm == 0.0:
        return x, 0, 0.0
    best_x = x.copy()
    best_rel = 1.0
    resid = y.copy()
    mag = np.empty(big_n)
    iters = 0
    for _ in range(max_iters):
        grad = np.dot(a.T, resid)
        for j in range(big_n):
            x[j] += step * grad[j]
        if k < big_n:
            for j in range(big_n):
                mag[j] = abs(x[j])
            cut = np.partition(mag, big_n - k)[big_n - k]
            # Keep all entries strictly above the cut, then fill the
            # remaining slots with cut-magnitude entries in index order.
            n_above = 0
            for j in range(big_n):
                if mag[j] > cut:
                    n_above += 1
            remaining = k - n_above
            for j in range(big_n):
                if mag[j] < cut:
                    x[j] = 0.0
                elif mag[j] == cut:
                    if remaining > 0:
                        remaining -= 1
                    else:
                        x[j] = 0.0
        resid = y - np.dot(a, x)
        rel = np.linalg.norm(resid) / y_norm
        iters += 1
        if rel < best_rel:
            best_rel = rel
            best_x = x.copy()
        if rel < tol:
            break
    return best_x, iters, best_rel
