import pytest

from perftrack.config import ScenarioConfig
from perftrack.harness import run_experiment


@pytest.fixture(scope="session")
def ev_session_result():
    """One moderately sized fleet-charging run shared by the statistical tests.

    200 replications keep the per-step tail fits alive (the fitter needs 100
    samples) while the whole run stays under a couple of seconds.
    """
    return run_experiment(ScenarioConfig(replications=200, seed=20240811))


@pytest.fixture
def tiny_config():
    """Factory for fast throwaway scenarios."""

    def make(**overrides):
        base = dict(stations=3, horizon=12, replications=2, batch_size=4,
                    seed=7, x0_radius=2.0)
        base.update(overrides)
        return ScenarioConfig(**base)

    return make
