import numpy as np
import pytest

from archdmem.arch_model import Material, build_circular_arch, with_point_load

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    """Print a PASS/FAIL line now and repeat it in the terminal summary."""
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def elastic_material():
    """Strong material: every law stays elastic for the small displacements used in checks."""
    return Material(E=5000.0, nu=0.25, f_t=50.0, G_t=1e3, f_m=1e3, G_m=1e3, c=50.0, mu=0.6, G_s=1e3, w=20.0)


@pytest.fixture
def no_tension_material():
    return Material(E=5000.0, nu=0.3, w=22.0, mu=0.6)


@pytest.fixture
def small_arch(no_tension_material):
    """13 voussoirs, 8 fibers: a fast symmetric arch (crown inside the central voussoir)."""
    return build_circular_arch(4000.0, 1500.0, 300.0, 1000.0, 13, no_tension_material, 8)


@pytest.fixture
def small_arch_crown_load(small_arch):
    return with_point_load(small_arch, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
