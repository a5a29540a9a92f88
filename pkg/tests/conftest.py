import math

import numpy as np
import pytest

from serrinlab.boundary2d import cap_boundary, perturbed_boundary
from serrinlab.fem2d import solve_mixed
from serrinlab.geom_core import cap_from_constants
from serrinlab.mesh2d import generate


@pytest.fixture(scope="session")
def spec():
    return cap_from_constants(2, 0.3, -0.15)


@pytest.fixture(scope="session")
def cap(spec):
    return cap_boundary(spec)


@pytest.fixture(scope="session")
def bumped(spec):
    return perturbed_boundary(spec, 0.1, [(2, 0.0)])


@pytest.fixture(scope="session")
def cap_solutions(spec, cap):
    return [solve_mixed(generate(cap, n, n // 4), spec.c) for n in (16, 32, 64)]


@pytest.fixture(scope="session")
def bumped_solutions(spec, bumped):
    return [solve_mixed(generate(bumped, n, n // 4), spec.c) for n in (16, 32, 64)]


def random_specs(n, dims=(2,), seed=7):
    """Valid caps with random constants; invalid draws are rejected."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        d = int(rng.choice(dims))
        c0 = rng.uniform(0.1, 0.5) / d * 2
        c = rng.uniform(-0.9, 0.9) * c0
        tilt = rng.uniform(-0.3, 0.3)
        try:
            out.append(cap_from_constants(d, c0, c, tilt))
        except ValueError:
            continue
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
