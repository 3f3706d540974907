import pytest

from elid.geometry import NADIR
from elid.model import RoadCorridor
from elid.placement import uniform_plan
from elid.presets import OS1, VELARRAY


@pytest.fixture
def table1_road():
    return RoadCorridor(1000.0, lanes=4, lane_width=3.7, safety_margin=3.0)


@pytest.fixture
def velarray():
    return VELARRAY


@pytest.fixture
def os1():
    return OS1


@pytest.fixture
def velarray_plan(table1_road):
    return uniform_plan(VELARRAY, table1_road, NADIR)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
