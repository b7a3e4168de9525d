import os

import pytest

from simkit.assets import parse_urdf
from simkit.config import load_scenario
from simkit.demos import collect_demos

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def asset_path(name: str) -> str:
    return os.path.join(FIXTURES, "assets", name)


def scenario_path(name: str) -> str:
    return os.path.join(FIXTURES, "scenarios", name)


@pytest.fixture(scope="session")
def arm9():
    return parse_urdf(asset_path("arm9.urdf"))


@pytest.fixture(scope="session")
def arm6():
    return parse_urdf(asset_path("arm6.urdf"))


@pytest.fixture(scope="session")
def planar2():
    return parse_urdf(asset_path("planar2.urdf"))


@pytest.fixture(scope="session")
def pick_cube():
    return load_scenario(scenario_path("pick_cube.scn"))


@pytest.fixture(scope="session")
def two_spheres():
    return load_scenario(scenario_path("two_spheres.scn"))


@pytest.fixture(scope="session")
def box_drop():
    return load_scenario(scenario_path("box_drop.scn"))


@pytest.fixture(scope="session")
def door_open():
    return load_scenario(scenario_path("door_open.scn"))


@pytest.fixture(scope="session")
def source_demos(pick_cube):
    demos = collect_demos(pick_cube, count=5, seed=11)
    assert len(demos) == 5
    return demos
