import pytest

from nullgvn.ir import Program
from nullgvn.parse import parse_program


def parse_ok(src: str) -> Program:
    program = parse_program(src)
    assert isinstance(program, Program), f"unexpected diagnostics: {program}"
    return program


@pytest.fixture(scope="session")
def bundled():
    from nullgvn.corpus import bundled_programs

    return bundled_programs()
