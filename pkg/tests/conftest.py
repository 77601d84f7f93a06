import numpy as np
import pytest

import wrcosim as w
from wrcosim import _kernels


@pytest.fixture(scope="session")
def graph_a():
    return w.load_netlist("circuit_a.net")


@pytest.fixture(scope="session")
def graph_b():
    return w.load_netlist("circuit_b.net")


@pytest.fixture(scope="session")
def systems_a(graph_a):
    return w.build_systems(graph_a)


@pytest.fixture(scope="session")
def systems_b(graph_b):
    return w.build_systems(graph_b)


@pytest.fixture(params=sorted(_kernels.available()))
def lane(request):
    with _kernels.use_lane(request.param) as mod:
        yield mod


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
