"""Shared fixtures; the session-scoped ensemble runs are reused across tests."""

import numpy as np
import pytest

from twinchi2.model import SystemSpec
from twinchi2.ppsde import IntegrationGrid, EnsembleConfig, run_ensemble


@pytest.fixture(scope="session")
def concurrent_run_big():
    """Concurrent travelling-wave ensemble at reference parameters.

    chi = 1e-2, beta_1(0) = beta_2(0) = 1e3, xi in [0, 0.4], 1e5 trajectories;
    41 sample points every 0.01 in xi.
    """
    spec = SystemSpec.concurrent_tw(1e-2, 1e-2, 1e3, 1e3)
    grid = IntegrationGrid.spatial(spec, 0.4, n_steps=400)
    cfg = EnsembleConfig(n_traj=100_000, seed=7)
    samples = np.arange(0, 401, 10) * (grid.step * grid.scale)
    series = run_ensemble(spec, grid, cfg, samples)
    return spec, series


@pytest.fixture(scope="session")
def cascaded_run_mid():
    """Cascaded travelling-wave ensemble, symmetric couplings, 5e4 trajectories."""
    spec = SystemSpec.cascaded_tw(1e-2, 1e-2, 1e3, 1e3)
    grid = IntegrationGrid.spatial(spec, 0.4, n_steps=400)
    cfg = EnsembleConfig(n_traj=50_000, seed=915237)
    samples = np.arange(0, 401, 40) * (grid.step * grid.scale)
    series = run_ensemble(spec, grid, cfg, samples)
    return spec, series


@pytest.fixture(scope="session")
def concurrent_run_small():
    """Short concurrent ensemble for cheap statistical checks."""
    spec = SystemSpec.concurrent_tw(1e-2, 1e-2, 1e3, 1e3)
    grid = IntegrationGrid.spatial(spec, 0.2, n_steps=200)
    cfg = EnsembleConfig(n_traj=20_000, seed=77)
    samples = np.array([0.0, 0.1, 0.2])
    series = run_ensemble(spec, grid, cfg, samples)
    return spec, series
