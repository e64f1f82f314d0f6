import functools

import pytest

from sl0lab.ensembles import Suite
from sl0lab.phase import PhaseGridSpec, run_phase_grid
from sl0lab.solvers import Algorithm

RHO_STEP_05 = tuple(round(0.05 * i, 6) for i in range(1, 21))


@functools.lru_cache(maxsize=None)
def transition_at_half(algorithm: Algorithm):
    """Single-column transition at N=800, delta=0.5, rho step 0.05.

    Session-cached: shared by the variant-ordering, timing-ratio, and
    consistency tests so the Monte Carlo cost is paid once.
    """
    spec = PhaseGridSpec(
        algorithm=algorithm,
        suite=Suite.USE_RADEMACHER,
        N=800,
        delta_values=(0.5,),
        rho_values=RHO_STEP_05,
        trials=10,
        base_seed=0,
    )
    cells, curve = run_phase_grid(spec)
    return cells, curve


@pytest.fixture(scope="session")
def mss_transition_800():
    return transition_at_half(Algorithm.SL0_MSS)


@pytest.fixture(scope="session")
def std_transition_800():
    return transition_at_half(Algorithm.SL0_STD)


@pytest.fixture(scope="session")
def min_transition_800():
    return transition_at_half(Algorithm.SL0_MIN)
