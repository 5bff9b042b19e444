import pytest

from seedmine.backends import SimulatorBackend, simulate_world
from seedmine.catalog import default_catalog


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def world():
    return simulate_world(world_seed=11)


@pytest.fixture()
def backend(world):
    return SimulatorBackend(world)


class CountingBackend:
    """Wraps a backend and counts generate/evaluate calls; the resume tests
    assert the second pass over a finished run makes zero new calls."""

    def __init__(self, inner):
        self.inner = inner
        self.generate_calls = 0
        self.evaluate_calls = 0

    @property
    def backend_tag(self):
        return self.inner.backend_tag

    def generate(self, request):
        self.generate_calls += 1
        return self.inner.generate(request)

    def evaluate(self, request):
        self.evaluate_calls += 1
        return self.inner.evaluate(request)

    def health(self):
        return self.inner.health()


@pytest.fixture()
def counting_backend(world):
    return CountingBackend(SimulatorBackend(world))
