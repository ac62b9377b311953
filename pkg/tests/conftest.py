import math

import pytest

from fluxtune.hilbert import build_basis
from fluxtune.noise import NoiseEnv
from fluxtune.params import derive_scales, reference_device
from fluxtune.schedule import build_schedule, f_grid

TARGET = 2.00005254655

_ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""

    def log(tag: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return log


@pytest.fixture(scope="session")
def scales():
    return derive_scales(reference_device("rounded"))


@pytest.fixture(scope="session")
def scales_si():
    return derive_scales(reference_device("si2019"))


@pytest.fixture(scope="session")
def basis():
    return build_basis(15, 20)


@pytest.fixture(scope="session")
def env():
    return NoiseEnv()


@pytest.fixture(scope="session")
def small_exact_schedule(scales, basis):
    """Twelve exact-engine points spanning the reference range."""
    return build_schedule(scales, f_grid(0.96, 0.9995, 12), TARGET, "exact", basis=basis)


@pytest.fixture(scope="session")
def pi():
    return math.pi
