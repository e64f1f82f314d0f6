"""Reconstruction-time benchmarks on the safely-solvable part of the grid.

Points qualify when they sit at least ``margin`` below the algorithm's own
empirically fitted transition on the density axis.  Timed solves run
strictly sequentially and only successful reconstructions enter the
averages.  Cache and allocation effects are kept out of the numbers two
ways: one discarded warm-up solve per (problem size, indeterminacy) pair,
and one discarded warm-up pass over each timed instance (fresh random
matrices otherwise pay an unstable first-touch tax that favors algorithms
with bigger iteration budgets).  Recorded times cover the iteration phase
of each solve; the shared QR factorization is excluded so that
iteration-cost differences between algorithms stay visible at desk problem
sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .ensembles import Suite, derive_instance_seed, make_instance
from .phase import SUCCESS_THRESHOLD, TransitionCurve, success_criterion
from .solvers import Algorithm, MssImplementation, prepared_solver, reconstruct

_WARMUP_TRIAL_OFFSET = 1_000_000


class EmptyEligibleSetError(ValueError):
    pass


def default_timing_grid() -> tuple[float, ...]:
    return tuple(round(0.1 * i, 6) for i in range(1, 11))


@dataclass(frozen=True)
class TimingSpec:
    """Configuration of one timing sweep."""

    transition: TransitionCurve
    suite: Suite = Suite.USE_RADEMACHER
    N_values: tuple[int, ...] = (200, 400, 800)
    delta_values: tuple[float, ...] = field(default_factory=default_timing_grid)
    rho_values: tuple[float, ...] = field(default_factory=default_timing_grid)
    margin: float = 0.025
    trials: int = 10
    base_seed: int = 0
    mss_impl: MssImplementation = MssImplementation.AUTO

    def __post_init__(self):
        if self.margin < 0.0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


class TrialRecord(NamedTuple):
    seed: int
    success: bool
    elapsed: float


@dataclass(frozen=True)
class TimingRow:
    """Aggregate and per-trial timings at one (N, delta, rho) point."""

    N: int
    delta: float
    rho: float
    trials: int
    successes: int
    mean_time_s: float | None
    records: tuple[TrialRecord, ...]


def eligible_points(spec: TimingSpec) -> list[tuple[float, float]]:
    """Grid points at least ``margin`` below the interpolated transition."""
    points = []
    for delta in spec.delta_values:
        rho_star = spec.transition.rho_star_at(delta)
        for rho in spec.rho_values:
            if rho <= rho_star - spec.margin:
                points.append((delta, rho))
    if not points:
        raise EmptyEligibleSetError(
            "no grid point lies below the transition by the requested margin"
        )
    return points


def run_timing(spec: TimingSpec, algorithm: Algorithm) -> list[TimingRow]:
    """Timed Monte Carlo trials over every eligible point at every size."""
    points = eligible_points(spec)
    deltas_in_order = [d for d in spec.delta_values if any(p[0] == d for p in points)]
    rows = []
    for big_n in spec.N_values:
        for delta in deltas_in_order:
            rhos = [rho for d, rho in points if d == delta]
            _warm_up(spec, algorithm, big_n, delta, rhos[0])
            for rho in rhos:
                rows.append(_run_point(spec, algorithm, big_n, delta, rho))
    return rows


def _warm_up(spec, algorithm, big_n, delta, rho):
    seed = derive_instance_seed(spec.base_seed, delta, rho, _WARMUP_TRIAL_OFFSET)
    instance = make_instance(big_n, delta, rho, spec.suite, seed)
    reconstruct(algorithm, instance, impl=spec.mss_impl)


def _run_point(spec, algorithm, big_n, delta, rho) -> TimingRow:
    records = []
    for trial in range(spec.trials):
        seed = derive_instance_seed(spec.base_seed, delta, rho, trial)
        instance = make_instance(big_n, delta, rho, spec.suite, seed)
        solve = prepared_solver(algorithm, instance, impl=spec.mss_impl)
        solve()  # discarded warm pass over this instance
        result = solve()
        success = success_criterion(result.x_hat, instance.x)
        records.append(
            TrialRecord(seed=seed, success=success, elapsed=result.solve_elapsed)
        )
    times = [r.elapsed for r in records if r.success]
    return TimingRow(
        N=big_n,
        delta=delta,
        rho=rho,
        trials=spec.trials,
        successes=len(times),
        mean_time_s=sum(times) / len(times) if times else None,
        records=tuple(records),
    )


def aggregate_by_delta(rows: list[TimingRow], N: int) -> list[tuple[float, float]]:
    """Mean of the per-point success times over eligible rho, per delta."""
    out = []
    for delta in sorted({r.delta for r in rows if r.N == N}):
        times = [
            r.mean_time_s
            for r in rows
            if r.N == N and r.delta == delta and r.mean_time_s is not None
        ]
        if times:
            out.append((delta, sum(times) / len(times)))
    return out


def aggregate_by_size(rows: list[TimingRow], delta: float) -> list[tuple[int, float]]:
    """Mean of the per-point success times at one delta, per problem size."""
    out = []
    for big_n in sorted({r.N for r in rows if r.delta == delta}):
        times = [
            r.mean_time_s
            for r in rows
            if r.N == big_n and r.delta == delta and r.mean_time_s is not None
        ]
        if times:
            out.append((big_n, sum(times) / len(times)))
    return out
