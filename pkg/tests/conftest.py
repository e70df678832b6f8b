import numpy as np
import pytest

from semiclab.hartree import scf_solve
from semiclab.lattice import Grid, ModelParams
from semiclab.potentials import PowerLaw, harmonic
from semiclab.thomas_fermi import tf_solve


@pytest.fixture(scope="session")
def trap():
    return harmonic()


@pytest.fixture(scope="session")
def model_grid():
    return Grid.uniform(3.0, 2048)


@pytest.fixture(scope="session")
def tf_interacting(trap, model_grid):
    return tf_solve(trap, PowerLaw(0.2, 0.5), model_grid)


@pytest.fixture(scope="session")
def scf16(trap, tf_interacting):
    params = ModelParams.from_particles(16, 3.0, 2048)
    return scf_solve(trap, PowerLaw(0.2, 0.5), tf_interacting.mu, params)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and echo it."""
    lines = request.config.acceptance_lines

    def report(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        lines.append((number, line))
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
