import numpy as np
import pytest

from flatform import config, sim
from flatform.collision import SafetyConfig
from flatform.flat_dynamics import pack_state
from flatform.graph import DirectedGraph, FormationSpec


class RunCache:
    """Closed-loop runs shared across the session (each takes several seconds)."""

    def __init__(self):
        self._runs = {}

    def config(self, fixture, strategy):
        return config.load_fixture(fixture).with_overrides(strategy=strategy)

    def get(self, fixture, strategy):
        key = (fixture, strategy)
        if key not in self._runs:
            self._runs[key] = sim.run(self.config(fixture, strategy))
        return self._runs[key]

    def items(self):
        return self._runs.items()


@pytest.fixture(scope="session")
def runs():
    return RunCache()


@pytest.fixture(scope="session")
def four_uav():
    return config.load_fixture("four_uav")


@pytest.fixture(scope="session")
def seven_uav():
    return config.load_fixture("seven_uav")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_spec(n, edges, mu=None, omega=None, offsets=None, gamma=None):
    """FormationSpec from 1-based edges with unit defaults."""
    g = DirectedGraph.from_one_based(n, edges)
    e = len(edges)
    return FormationSpec(
        g,
        np.ones(e) if mu is None else np.asarray(mu, float),
        np.ones(e) if omega is None else np.asarray(omega, float),
        np.zeros((e, 3)) if offsets is None else np.asarray(offsets, float).reshape(e, 3),
        np.ones(n) if gamma is None else np.asarray(gamma, float),
    )


def make_scenario(spec, p, v=None, strategy="basic", r=1.5, **kw):
    n = spec.n_uavs
    p = np.asarray(p, float).reshape(n, 3)
    v = np.zeros((n, 3)) if v is None else np.asarray(v, float).reshape(n, 3)
    r0 = pack_state(p, v)
    return sim.ScenarioConfig(spec, SafetyConfig.uniform(n, r, strategy=strategy), r0, **kw)


def random_state(rng, n, scale=5.0):
    r = rng.normal(scale=scale, size=12 * n + 1)
    r[-1] = 1.0
    return r


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
