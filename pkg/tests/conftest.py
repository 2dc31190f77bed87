import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from aftrack.model import GaussMarkovModel, NetworkScenario, preset, sample_channel

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_scenario(rng, n, *, sum_power=None, path_loss_exp=1.0, noise_hi=0.5, fc_noise_var=0.5, indiv=None):
    """Random geometry in the simulation-section ranges (noise variances strictly positive)."""
    return NetworkScenario(
        distances=rng.uniform(2.0, 8.0, n),
        meas_noise_vars=noise_hi * (1.0 - rng.random(n)),
        model=GaussMarkovModel.from_stationary(0.9, 1.0),
        path_loss_exp=path_loss_exp,
        fc_noise_var=fc_noise_var,
        sum_power=float(10 ** rng.uniform(0.5, 3.5)) if sum_power is None else sum_power,
        indiv_powers=indiv,
        initial_mse=0.5,
    )


def random_instance(rng, n, **kw):
    sc = random_scenario(rng, n, **kw)
    return sc, sample_channel(sc, rng).gains


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sec7():
    return preset("paper-sec7")


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d} {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
