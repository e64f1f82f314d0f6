"""Seeded generation of the benchmark problem suites.

Measurement matrices are drawn from the uniform spherical ensemble (i.i.d.
unit-norm Gaussian columns); signals are exactly k-sparse with Rademacher or
standard-Gaussian nonzeros.  All randomness flows from explicit integer
seeds through numpy's PCG64 generator, with independent SeedSequence
substreams for the matrix and the signal, so instances are reproducible
bit-for-bit and nothing is shared between trials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class InvalidDimsError(ValueError):
    pass


class InvalidSparsityError(ValueError):
    pass


class Suite(Enum):
    USE_RADEMACHER = "use-rademacher"
    USE_GAUSSIAN = "use-gaussian"


class NonzeroDist(Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"


_SUITE_DIST = {
    Suite.USE_RADEMACHER: NonzeroDist.RADEMACHER,
    Suite.USE_GAUSSIAN: NonzeroDist.GAUSSIAN,
}


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """One reconstruction problem: measurements ``y = A @ x`` of a sparse x."""

    A: np.ndarray
    x: np.ndarray
    y: np.ndarray
    k: int
    delta: float
    rho: float
    seed: int
    suite: Suite

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]


def generate_use_matrix(n: int, N: int, seed: int) -> np.ndarray:
    """n x N matrix with i.i.d. columns uniform on the unit sphere in R^n."""
    if n < 1 or n > N:
        raise InvalidDimsError(f"need 1 <= n <= N, got n={n}, N={N}")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, N))
    a /= np.linalg.norm(a, axis=0)
    return a


def generate_sparse_signal(N: int, k: int, dist: NonzeroDist, seed: int) -> np.ndarray:
    """Length-N vector with a uniformly random k-subset of nonzero entries."""
    if k < 0 or k > N:
        raise InvalidSparsityError(f"need 0 <= k <= N, got k={k}, N={N}")
    x = np.zeros(N)
    if k == 0:
        return x
    rng = np.random.default_rng(seed)
    support = rng.choice(N, size=k, replace=False)
    if dist is NonzeroDist.RADEMACHER:
        values = rng.integers(0, 2, size=k) * 2.0 - 1.0
    elif dist is NonzeroDist.GAUSSIAN:
        values = rng.standard_normal(k)
    else:
        raise ValueError(f"unknown nonzero distribution: {dist!r}")
    x[support] = values
    return x


def _round_half_away(value: float) -> int:
    return int(math.floor(value + 0.5))


def sparsity_for(delta: float, rho: float, N: int) -> tuple[int, int]:
    """Map grid coordinates to integer problem sizes (n, k), k clamped >= 1."""
    n = _round_half_away(delta * N)
    k = max(1, _round_half_away(rho * n))
    return n, k


def make_instance(
    N: int, delta: float, rho: float, suite: Suite, seed: int
) -> ProblemInstance:
    """Draw one seeded problem instance at phase-space point (delta, rho).

    The matrix and the signal come from independent substreams derived from
    ``seed``, so identical inputs reproduce the instance exactly.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    n, k = sparsity_for(delta, rho, N)
    seed_a, seed_x = np.random.SeedSequence(seed).generate_state(2, np.uint64)
    a = generate_use_matrix(n, N, int(seed_a))
    x = generate_sparse_signal(N, k, _SUITE_DIST[suite], int(seed_x))
    y = a @ x
    return ProblemInstance(
        A=a, x=x, y=y, k=k, delta=n / N, rho=k / n, seed=int(seed), suite=suite
    )


def derive_instance_seed(base_seed: int, delta: float, rho: float, trial: int) -> int:
    """Disjoint per-(grid point, trial) seed for Monte Carlo sweeps."""
    key = (int(round(delta * 1e6)), int(round(rho * 1e6)), int(trial))
    seq = np.random.SeedSequence(entropy=int(base_seed), spawn_key=key)
    return int(seq.generate_state(1, np.uint64)[0])


# Debug-friendly text serialization: one JSON header line followed by CSV
# blocks for A, x, and y.  Floats are written with repr so a round trip is
# exact.


def _write_block(fh, name, array_2d):
    fh.write(f"# {name}\n")
    for row in array_2d:
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def dump_instance(instance: ProblemInstance, fh) -> None:
    header = {
        "format": "sl0lab-instance v1",
        "n": instance.n,
        "N": instance.N,
        "k": instance.k,
        "delta": instance.delta,
        "rho": instance.rho,
        "seed": instance.seed,
        "suite": instance.suite.value,
    }
    fh.write(json.dumps(header, sort_keys=True) + "\n")
    _write_block(fh, "A", instance.A)
    _write_block(fh, "x", instance.x[None, :])
    _write_block(fh, "y", instance.y[None, :])


def load_instance(fh) -> ProblemInstance:
    header = json.loads(fh.readline())
    if header.get("format") != "sl0lab-instance v1":
        raise ValueError(f"unrecognized instance header: {header!r}")
    blocks: dict[str, list[list[float]]] = {}
    current = None
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith("# "):
            current = line[2:]
            blocks[current] = []
        else:
            blocks[current].append([float(v) for v in line.split(",")])
    a = np.array(blocks["A"])
    x = np.array(blocks["x"][0])
    y = np.array(blocks["y"][0])
    return ProblemInstance(
        A=a,
        x=x,
        y=y,
        k=int(header["k"]),
        delta=float(header["delta"]),
        rho=float(header["rho"]),
        seed=int(header["seed"]),
        suite=Suite(header["suite"]),
    )
