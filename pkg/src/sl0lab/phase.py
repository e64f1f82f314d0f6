"""Phase-transition experiments: grid sweeps, success counting, and
logistic-regression estimation of the 50%-success boundary.

For each indeterminacy value on the grid, seeded Monte Carlo trials run up
the density axis; the per-cell success counts are then turned into a
transition location, either by a ridge-regularized logistic fit or, for
completely separated data, by the midpoint between the last all-success and
first all-failure densities.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .ensembles import ProblemInstance, Suite, derive_instance_seed, make_instance
from .linalg import RankDeficientError
from .solvers import Algorithm, MssImplementation, reconstruct


class ZeroTruthError(ValueError):
    pass


class FitMethod(Enum):
    LOGISTIC = "logistic"
    SEPARATION_MIDPOINT = "separation-midpoint"


SUCCESS_THRESHOLD = 1e-4

# Exceptions that count as a failed reconstruction rather than a crash.
_NUMERICAL_FAILURES = (RankDeficientError, np.linalg.LinAlgError, FloatingPointError)


def default_delta_grid() -> tuple[float, ...]:
    return tuple(round(0.025 * i, 6) for i in range(1, 41))


def default_rho_grid() -> tuple[float, ...]:
    return tuple(round(0.01 * i, 6) for i in range(1, 101))


@dataclass(frozen=True)
class PhaseGridSpec:
    """Configuration of one phase-transition sweep."""

    algorithm: Algorithm
    suite: Suite
    N: int = 800
    delta_values: tuple[float, ...] = field(default_factory=default_delta_grid)
    rho_values: tuple[float, ...] = field(default_factory=default_rho_grid)
    trials: int = 10
    base_seed: int = 0
    # Stop scanning up the density axis after this many consecutive
    # all-failure cells; 0 disables the cutoff.
    early_cutoff: int = 3
    mss_impl: MssImplementation = MssImplementation.AUTO

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.early_cutoff < 0:
            raise ValueError(f"early_cutoff must be >= 0, got {self.early_cutoff}")
        for name, grid in (("delta", self.delta_values), ("rho", self.rho_values)):
            if not grid:
                raise ValueError(f"{name} grid is empty")
            if any(not 0.0 < v <= 1.0 for v in grid):
                raise ValueError(f"{name} grid values must lie in (0, 1]")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} grid must be strictly increasing")


@dataclass(frozen=True)
class PhaseCell:
    """Monte Carlo outcome at one (delta, rho) grid point."""

    delta: float
    rho: float
    successes: int
    trials: int
    mean_time_success: float | None

    def __post_init__(self):
        if self.successes > self.trials:
            raise ValueError("successes cannot exceed trials")


class LogisticFit(NamedTuple):
    beta0: float
    beta1: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class TransitionCurve:
    """Estimated 50%-success density per indeterminacy value."""

    delta_values: tuple[float, ...]
    rho_star: tuple[float, ...]
    fit_method: tuple[FitMethod, ...]
    beta0: tuple[float | None, ...]
    beta1: tuple[float | None, ...]
    fit_converged: tuple[bool, ...]
    monotone_violation: tuple[float, ...]

    def rho_star_at(self, delta: float) -> float:
        """Linearly interpolated transition location at ``delta``."""
        lo, hi = self.delta_values[0], self.delta_values[-1]
        if not lo <= delta <= hi:
            raise ValueError(
                f"delta={delta} outside the fitted range [{lo}, {hi}]"
            )
        return float(np.interp(delta, self.delta_values, self.rho_star))


def success_criterion(x_hat, x) -> bool:
    """True when the squared relative reconstruction error is below 1e-4."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ZeroTruthError("true signal has zero norm")
    diff = x_hat - x
    err = float(np.dot(diff, diff))
    if not math.isfinite(err):
        return False
    return err / denom < SUCCESS_THRESHOLD


SolverOverride = Callable[[ProblemInstance], np.ndarray]


def run_cell(
    spec: PhaseGridSpec,
    delta: float,
    rho: float,
    solver_override: SolverOverride | None = None,
) -> PhaseCell:
    """Run the configured trials at one grid point and count successes.

    A numerical failure inside a solver scores as an unsuccessful trial.
    ``solver_override`` (tests only) replaces the algorithm with a callable
    returning a reconstruction.
    """
    successes = 0
    times = []
    for trial in range(spec.trials):
        seed = derive_instance_seed(spec.base_seed, delta, rho, trial)
        instance = make_instance(spec.N, delta, rho, spec.suite, seed)
        try:
            if solver_override is not None:
                x_hat = solver_override(instance)
                elapsed = 0.0
            else:
                result = reconstruct(spec.algorithm, instance, impl=spec.mss_impl)
                x_hat = result.x_hat
                elapsed = result.elapsed
        except _NUMERICAL_FAILURES:
            continue
        if success_criterion(x_hat, instance.x):
            successes += 1
            times.append(elapsed)
    mean_time = sum(times) / len(times) if times else None
    return PhaseCell(
        delta=delta,
        rho=rho,
        successes=successes,
        trials=spec.trials,
        mean_time_success=mean_time,
    )


def _log_likelihood(beta, rhos, successes, trials, ridge):
    eta = beta[0] + beta[1] * rhos
    # log(1 + exp(eta)) evaluated stably
    softplus = np.logaddexp(0.0, eta)
    ll = float(np.sum(successes * eta - trials * softplus))
    return ll - 0.5 * ridge * float(beta @ beta)


def fit_logistic(
    samples: Sequence[tuple[float, int, int]],
    ridge: float = 1e-6,
    max_iterations: int = 100,
    grad_tol: float = 1e-10,
) -> LogisticFit:
    """Penalized ML fit of P(success | rho) = sigmoid(beta0 + beta1 rho).

    Newton iterations with an L2 penalty on the coefficients and step
    halving; the ridge keeps the optimum finite even for nearly separated
    counts.  A fit that fails to converge is still returned, flagged.
    """
    rhos = np.array([s[0] for s in samples], dtype=np.float64)
    successes = np.array([s[1] for s in samples], dtype=np.float64)
    trials = np.array([s[2] for s in samples], dtype=np.float64)

    beta = np.zeros(2)
    ll = _log_likelihood(beta, rhos, successes, trials, ridge)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        eta = beta[0] + beta[1] * rhos
        p = 1.0 / (1.0 + np.exp(-eta))
        resid = successes - trials * p
        grad = np.array(
            [np.sum(resid), np.sum(resid * rhos)]
        ) - ridge * beta
        if np.max(np.abs(grad)) < grad_tol:
            converged = True
            break
        w = trials * p * (1.0 - p)
        h00 = np.sum(w) + ridge
        h01 = np.sum(w * rhos)
        h11 = np.sum(w * rhos * rhos) + ridge
        det = h00 * h11 - h01 * h01
        step = np.array(
            [(h11 * grad[0] - h01 * grad[1]) / det,
             (h00 * grad[1] - h01 * grad[0]) / det]
        )
        # Halve until the penalized likelihood does not decrease.
        scale = 1.0
        for _ in range(50):
            candidate = beta + scale * step
            new_ll = _log_likelihood(candidate, rhos, successes, trials, ridge)
            if new_ll >= ll - 1e-12:
                break
            scale *= 0.5
        beta = beta + scale * step
        ll = _log_likelihood(beta, rhos, successes, trials, ridge)
    return LogisticFit(float(beta[0]), float(beta[1]), converged, iterations)


def _separation(samples):
    """Detect completely separated counts: pure cells, successes below
    failures with no overlap.  Returns the separating (lo, hi) densities or
    None."""
    success_rhos = []
    failure_rhos = []
    for rho, s, t in samples:
        if s == t:
            success_rhos.append(rho)
        elif s == 0:
            failure_rhos.append(rho)
        else:
            return None
    if not success_rhos or not failure_rhos:
        return None
    lo, hi = max(success_rhos), min(failure_rhos)
    if lo >= hi:
        return None
    return lo, hi


def transition_location(
    samples: Sequence[tuple[float, int, int]]
) -> tuple[float, FitMethod, LogisticFit | None]:
    """50%-success density from per-cell counts.

    Completely separated data take the midpoint of the separating gap;
    all-success and all-failure columns clamp to the grid edge; everything
    else goes through the logistic fit, with the crossing -beta0/beta1
    clamped to slightly beyond the sampled range.
    """
    if not samples:
        raise ValueError("samples must be nonempty")
    samples = sorted(samples, key=lambda s: s[0])
    rhos = [s[0] for s in samples]

    if all(s == t for _, s, t in samples):
        return rhos[-1], FitMethod.SEPARATION_MIDPOINT, None
    if all(s == 0 for _, s, _ in samples):
        return rhos[0], FitMethod.SEPARATION_MIDPOINT, None
    gap = _separation(samples)
    if gap is not None:
        return (gap[0] + gap[1]) / 2.0, FitMethod.SEPARATION_MIDPOINT, None

    fit = fit_logistic(samples)
    if fit.beta1 == 0.0:
        crossing = rhos[-1] if fit.beta0 > 0 else rhos[0]
    else:
        crossing = -fit.beta0 / fit.beta1
    lo = max(0.0, rhos[0] - 0.01)
    hi = min(1.0, rhos[-1] + 0.01)
    return float(np.clip(crossing, lo, hi)), FitMethod.LOGISTIC, fit


def monotone_violation(successes: Sequence[int]) -> float:
    """L1 distance from the success counts to their best non-increasing fit.

    Pool-adjacent-violators projection; a large value signals more success
    jitter along the density axis than Monte Carlo noise should produce.
    """
    values = [float(s) for s in successes]
    if not values:
        return 0.0
    # PAVA for a non-increasing fit: negate, fit non-decreasing, negate.
    blocks = [[-v, 1.0] for v in values]
    merged: list[list[float]] = []
    for mean, weight in blocks:
        merged.append([mean, weight])
        while len(merged) > 1 and merged[-2][0] > merged[-1][0]:
            m2, w2 = merged.pop()
            m1, w1 = merged.pop()
            merged.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    fitted = []
    for mean, weight in merged:
        fitted.extend([-mean] * int(round(weight)))
    return float(sum(abs(a - b) for a, b in zip(values, fitted)))


def _run_column(
    spec: PhaseGridSpec,
    delta: float,
    solver_override: SolverOverride | None = None,
) -> list[PhaseCell]:
    """All cells of one delta column, scanning rho upward with the cutoff."""
    cells = []
    consecutive_failures = 0
    cut = False
    for rho in spec.rho_values:
        if cut:
            cells.append(
                PhaseCell(
                    delta=delta,
                    rho=rho,
                    successes=0,
                    trials=spec.trials,
                    mean_time_success=None,
                )
            )
            continue
        cell = run_cell(spec, delta, rho, solver_override)
        cells.append(cell)
        if cell.successes == 0:
            consecutive_failures += 1
            if spec.early_cutoff and consecutive_failures >= spec.early_cutoff:
                cut = True
        else:
            consecutive_failures = 0
    return cells


def _column_task(args):
    spec, delta = args
    return _run_column(spec, delta)


def run_phase_grid(
    spec: PhaseGridSpec,
    parallelism: int = 1,
    solver_override: SolverOverride | None = None,
) -> tuple[list[PhaseCell], TransitionCurve]:
    """Evaluate the full grid and fit the transition curve per delta.

    Columns are independent given their derived seeds, so any parallelism
    level yields identical cells and curve (timing fields excepted);
    ``parallelism=0`` uses one worker per CPU.
    """
    deltas = spec.delta_values
    if parallelism == 0:
        parallelism = min(len(deltas), max(1, _cpu_count()))
    if parallelism > 1 and len(deltas) > 1 and solver_override is None:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            columns = list(pool.map(_column_task, [(spec, d) for d in deltas]))
    else:
        columns = [_run_column(spec, d, solver_override) for d in deltas]

    rho_star = []
    methods = []
    beta0s: list[float | None] = []
    beta1s: list[float | None] = []
    converged_flags = []
    violations = []
    for delta, cells in zip(deltas, columns):
        samples = [(c.rho, c.successes, c.trials) for c in cells]
        location, method, fit = transition_location(samples)
        rho_star.append(location)
        methods.append(method)
        beta0s.append(fit.beta0 if fit else None)
        beta1s.append(fit.beta1 if fit else None)
        converged_flags.append(fit.converged if fit else True)
        violation = monotone_violation([c.successes for c in cells])
        violations.append(violation)
        if violation > 2.0:
            warnings.warn(
                f"success counts at delta={delta} deviate from monotone by "
                f"{violation:.1f} trials; consider re-running this column",
                stacklevel=2,
            )

    curve = TransitionCurve(
        delta_values=tuple(deltas),
        rho_star=tuple(rho_star),
        fit_method=tuple(methods),
        beta0=tuple(beta0s),
        beta1=tuple(beta1s),
        fit_converged=tuple(converged_flags),
        monotone_violation=tuple(violations),
    )
    all_cells = [cell for column in columns for cell in column]
    return all_cells, curve


def _cpu_count() -> int:
    import os

    return os.cpu_count() or 1
