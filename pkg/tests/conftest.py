from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

# Source line of the guarded accumulation statement in sum.mh.
SUM_LINE = 9


@pytest.fixture(scope="session")
def sum_source() -> str:
    return (FIXTURES / "sum.mh").read_text()


@pytest.fixture()
def sum_program(sum_source):
    from hgdbg.frontend import parse

    return parse(sum_source, "sum.mh")
