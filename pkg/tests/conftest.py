import numpy as np
import pytest

from gpcert.config import asymptotics_defaults, robot_defaults, synthetic_defaults
from gpcert.experiments import fit_and_certify, run_asymptotics, run_robot, run_synthetic

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    # keys are ints or strings such as "7a"
    for number in sorted(ACCEPTANCE, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {str(number):>3}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def se_oracle(X, Z, signal_variance, lengthscales):
    """Squared-exponential ARD kernel written out independently of the package."""
    X, Z = np.atleast_2d(X), np.atleast_2d(Z)
    l = np.asarray(lengthscales, float)
    sq = (((X[:, None, :] - Z[None, :, :]) / l) ** 2).sum(-1)
    return signal_variance * np.exp(-0.5 * sq)


@pytest.fixture(scope="session")
def synthetic_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("synthetic")
    return run_synthetic(synthetic_defaults(), out)


@pytest.fixture(scope="session")
def robot_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("robot")
    return run_robot(robot_defaults(), out)


@pytest.fixture(scope="session")
def asymptotics_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("asymptotics")
    return run_asymptotics(asymptotics_defaults(), out)


@pytest.fixture(scope="session")
def synthetic_model():
    """Posterior, constants and certificate of the synthetic configuration, without simulation."""
    dataset, posterior, constants, lip, cert, _, _ = fit_and_certify(synthetic_defaults())
    return dataset, posterior, constants, lip, cert
