import pytest
from hypothesis import HealthCheck, settings

from adlsense import harness

settings.register_profile(
    "suite", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


def fast_harness_config(**experiment_overrides):
    """Small synthetic datasets and a quick-converging trainer for tests."""
    settings = dict(learning_rate=0.5, target_error=5e-3, max_iterations=4000, iters_scale=1.0)
    settings.update(experiment_overrides)
    return harness.HarnessConfig(
        experiment=harness.ExperimentConfig(**settings),
        synth_counts={"adl": 150, "env": 135, "standing": 90},
    )


@pytest.fixture(scope="session")
def trained_pipeline():
    pipeline, _ = harness.train_pipeline(fast_harness_config())
    return pipeline
