from __future__ import annotations

import math

import pytest
from hypothesis import HealthCheck, settings

from graspforge import shapes
from graspforge.planners import PlannerParams
from graspforge.stability import PhysicalParams

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DEG = math.pi / 180

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")


@pytest.fixture(scope="session")
def cube():
    return shapes.cube(40.0)


@pytest.fixture(scope="session")
def icosphere():
    return shapes.icosphere(2, 30.0)


@pytest.fixture(scope="session")
def t_shape():
    return shapes.t_shape()


@pytest.fixture(scope="session")
def small_handle():
    return shapes.sphere_with_handle(0.25)


@pytest.fixture
def params():
    return PlannerParams(phys=PhysicalParams(mass=0.2))


def make_params(**kw):
    phys = kw.pop("phys", None) or PhysicalParams(mass=kw.pop("mass", 0.2))
    return PlannerParams(phys=phys, **kw)
