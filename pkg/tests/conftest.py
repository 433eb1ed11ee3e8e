"""Shared Monte Carlo fixtures and the acceptance summary hook.

The expensive simulations are session-scoped so that the acceptance
criteria and the slower unit checks share one set of replications.
"""

from __future__ import annotations

import time

import numpy as np
import pytest
from hypothesis import settings

from tailfield import core, sim, stattest

settings.register_profile("tailfield", deadline=None, max_examples=100)
settings.load_profile("tailfield")

N_GRID, N_OBS, K, DELTA = 20, 500, 50, 2
NULL_REPS, ALT_REPS = 1000, 500
MC_SEED = 20240611

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def smith_null():
    """1000 null replications; any prefix equals a shorter run with the same seed."""
    start = time.perf_counter()
    res = stattest.monte_carlo_experiment("smith", [0.0], N_OBS, K, N_GRID, DELTA,
                                          NULL_REPS, seed=MC_SEED)
    res.settings["elapsed_seconds"] = time.perf_counter() - start
    return res


@pytest.fixture(scope="session")
def smith_alternatives():
    return stattest.monte_carlo_experiment("smith", [0.5, 1.0], N_OBS, K, N_GRID, DELTA,
                                           ALT_REPS, seed=MC_SEED)


@pytest.fixture(scope="session")
def smith_theory_sigma():
    return stattest.theoretical_VN_covariance("smith", N_GRID, DELTA)


@pytest.fixture(scope="session")
def smith_local_statistics():
    """``sqrt(k) * I_hat`` for 2000 Smith samples, plus the first 200 rank matrices."""
    grid = sim.Grid.uniform(N_GRID)
    stats, ranks = [], []
    for i, ss in enumerate(np.random.SeedSequence(7).spawn(2000)):
        r = core.compute_ranks(sim.simulate_smith(N_OBS, grid, seed=ss))
        stats.append(np.sqrt(K) * stattest.integral_statistic(r, K, DELTA))
        if i < 200:
            ranks.append(r)
    return np.array(stats), ranks
