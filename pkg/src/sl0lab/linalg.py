"""QR-based dense linear algebra shared by all solvers.

Everything is built on one factorization of the transposed measurement
matrix: ``A.T = Q1 @ R`` (reduced) or ``A.T = [Q1 Q2] @ [[R], [0]]`` (full).
``Q1`` spans the row space of ``A``, ``Q2`` the null space, and ``R`` is
upper triangular.  The pseudo-inverse and the null-space projector are never
formed explicitly; every operation is a short matrix-vector pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg


class RankDeficientError(ValueError):
    """The measurement matrix does not have full row rank."""


class MissingNullBasisError(ValueError):
    """A null-space basis was requested from a reduced factorization."""


class FactorizationMode(Enum):
    REDUCED = "reduced"
    FULL = "full"


class ProjectionForm(Enum):
    """The three equivalent ways to apply the null-space projector."""

    VIA_PSEUDO_INVERSE = "pinv"
    VIA_Q1 = "q1"
    VIA_Q2_SPLIT = "q2-split"


# Relative threshold on R's diagonal below which A is treated as rank
# deficient.  Random dense matrices sit far above this; it only guards
# degenerate user input.
RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class MatrixFactorization:
    """QR-derived operators of a full-row-rank matrix ``A`` (n x N, n <= N).

    Attributes
    ----------
    a : ndarray, shape (n, N)
        The matrix that was factorized (C-contiguous float64 copy).
    q1 : ndarray, shape (N, n)
        Orthonormal basis of the row space of ``a``.
    q2 : ndarray, shape (N, N - n) or None
        Orthonormal basis of the null space; only present in FULL mode.
    r : ndarray, shape (n, n)
        Upper-triangular factor with nonnegative diagonal.
    """

    a: np.ndarray
    n: int
    N: int
    q1: np.ndarray
    q2: np.ndarray | None
    r: np.ndarray
    mode: FactorizationMode

    @property
    def delta(self) -> float:
        """Indeterminacy n/N of the factorized matrix."""
        return self.n / self.N


def factorize(a, mode=FactorizationMode.REDUCED) -> MatrixFactorization:
    """Factorize ``a.T`` by Householder QR.

    Parameters
    ----------
    a : array_like, shape (n, N)
        Measurement matrix with n <= N and full row rank.
    mode : FactorizationMode
        FULL additionally materializes the null-space basis ``q2``.

    Raises
    ------
    RankDeficientError
        If any diagonal entry of R falls below ``RANK_RTOL * ||a||_F``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={a.ndim}")
    n, big_n = a.shape
    if n == 0 or big_n == 0 or n > big_n:
        raise ValueError(f"need 1 <= n <= N, got shape {a.shape}")

    if mode is FactorizationMode.FULL:
        q, r_full = scipy.linalg.qr(a.T, mode="full", check_finite=False)
        q1, q2 = q[:, :n], q[:, n:]
        r = r_full[:n, :]
    else:
        q1, r = scipy.linalg.qr(a.T, mode="economic", check_finite=False)
        q2 = None

    # Normalize signs so diag(R) >= 0; makes the factorization unique and
    # comparable across BLAS/LAPACK builds.
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    q1 = np.ascontiguousarray(q1 * signs)
    r = np.ascontiguousarray(signs[:, None] * r)

    threshold = RANK_RTOL * np.linalg.norm(a)
    min_diag = np.min(np.abs(np.diag(r)))
    if min_diag < threshold:
        raise RankDeficientError(
            f"matrix is rank deficient: min |R_ii| = {min_diag:.3e} "
            f"< {threshold:.3e}"
        )

    if q2 is not None:
        q2 = np.ascontiguousarray(q2)
    return MatrixFactorization(
        a=a, n=n, N=big_n, q1=q1, q2=q2, r=r, mode=mode
    )


def apply_pseudo_inverse(f: MatrixFactorization, v) -> np.ndarray:
    """Apply the Moore-Penrose pseudo-inverse of ``f.a`` to ``v``.

    Computed as the substitution pipeline: solve ``R.T u = v`` then
    ``Q1 @ u``; the inverse of R is never formed.
    """
    v = np.asarray(v, dtype=np.float64)
    u = scipy.linalg.solve_triangular(f.r, v, trans="T", check_finite=False)
    return f.q1 @ u


def least_norm_solution(f: MatrixFactorization, y) -> np.ndarray:
    """Minimum-norm solution of ``f.a @ x = y`` (full-row-rank system)."""
    return apply_pseudo_inverse(f, y)


def project_null_space(
    f: MatrixFactorization, d, form=ProjectionForm.VIA_Q1
) -> np.ndarray:
    """Project ``d`` onto the null space of ``f.a``.

    All three forms compute the same projection; they differ only in
    arithmetic cost and in which factors they touch.  VIA_Q2_SPLIT requires
    a FULL factorization.
    """
    d = np.asarray(d, dtype=np.float64)
    if form is ProjectionForm.VIA_PSEUDO_INVERSE:
        w = f.a @ d
        u = scipy.linalg.solve_triangular(f.r, w, trans="T", check_finite=False)
        return d - f.q1 @ u
    if form is ProjectionForm.VIA_Q1:
        return d - f.q1 @ (f.q1.T @ d)
    if form is ProjectionForm.VIA_Q2_SPLIT:
        if f.q2 is None:
            raise MissingNullBasisError(
                "q2-split projection needs a FULL factorization"
            )
        return f.q2 @ (f.q2.T @ d)
    raise ValueError(f"unknown projection form: {form!r}")


def preferred_form(n: int, N: int) -> ProjectionForm:
    """Cheaper projector form for an n x N system.

    The split product through the null-space basis wins once the system is
    less than half undetermined; the boundary n/N = 0.5 goes to the
    pseudo-inverse form (reduced factorization is cheaper to build there).
    """
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    if 2 * n <= N:
        return ProjectionForm.VIA_PSEUDO_INVERSE
    return ProjectionForm.VIA_Q2_SPLIT


def flops_direct(N: int) -> int:
    """Flops to apply the explicit N x N projector to a vector."""
    return N * (2 * N - 1)


def flops_split(n: int, N: int) -> int:
    """Flops to apply the projector as two products with the null basis."""
    return (N - n) * (2 * N - 1) + N * (2 * (N - n) - 1)


@dataclass(frozen=True)
class FlopModel:
    """Arithmetic-cost model deciding between projector applications."""

    n: int
    N: int

    def direct(self) -> int:
        return flops_direct(self.N)

    def split(self) -> int:
        return flops_split(self.n, self.N)

    def split_wins(self) -> bool:
        return self.split() < self.direct()


def split_crossover(N: int) -> int:
    """Smallest n for which the split application needs fewer flops."""
    for n in range(1, N + 1):
        if flops_split(n, N) < flops_direct(N):
            return n
    return N
