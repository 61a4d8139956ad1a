import numpy as np
import pytest

import kdeknn.evaluation.forest
import kdeknn.evaluation.svm
import kdeknn.kde
import kdeknn.knn
from kdeknn._backend import available_backends
from kdeknn.dataset import benchmark_cohorts, prepare, split

BACKENDS = available_backends()
KERNEL_USERS = (kdeknn.knn, kdeknn.kde, kdeknn.evaluation.svm, kdeknn.evaluation.forest)

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    module = BACKENDS[request.param]
    for user in KERNEL_USERS:
        monkeypatch.setattr(user, "kernels", module)
    return request.param


@pytest.fixture(scope="session")
def benchmark_split():
    """Default benchmark cohorts, split with seed 42 and normalized with training stats."""
    cohort, external = benchmark_cohorts(42)
    train_raw, test_raw = split(cohort, 0.85, 42)
    stats, train, test, ext = prepare(train_raw, test_raw, external)
    return {
        "cohort": cohort, "external_raw": external, "train_raw": train_raw, "test_raw": test_raw,
        "stats": stats, "train": train, "test": test, "external": ext,
    }


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
