"""Shared fixtures: the phase-plane workhorse parameter set and a few
expensive trajectories reused across test modules."""
from __future__ import annotations

import warnings

import pytest

from riotdyn import (ExplicitSchedule, ModelParams, Shock, SiteState,
                     integrate_site)

# the single-site analysis set: omega=0.4, theta=0.7, p=0.7, beta=3, a=1, z0=2
BASE = ModelParams()

SLOW = ModelParams(omega=0.2, theta=0.1, p=1.0, beta=10.0, a=6.0, z0=10.0)


@pytest.fixture(autouse=True)
def _quiet_model_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*excitability.*")
        warnings.filterwarnings("ignore", message=".*tension decay.*")
        warnings.filterwarnings("ignore", message=".*activity coupling.*")
        yield


@pytest.fixture(scope="session")
def strong_shock_run():
    """A=30 burst on the workhorse set, dense records."""
    return integrate_site(BASE, ExplicitSchedule([Shock(0.0, 30.0)]),
                          SiteState(0.01, 0.0), t_end=80.0, dt=1e-3,
                          record_stride=1)


@pytest.fixture(scope="session")
def slow_burst_run():
    """The slow-relaxation preset: burst, plateau, monotone decay."""
    return integrate_site(SLOW, ExplicitSchedule([Shock(0.0, 5.0)]),
                          SiteState(0.1, 2.0), t_end=160.0, dt=1e-3,
                          record_stride=10)
