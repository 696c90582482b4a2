import pytest

from sgfem_elasticity.assembly import assemble_fe_blocks, build_operator
from sgfem_elasticity.mesh import build_mesh, build_spaces
from sgfem_elasticity.random_field import kl_2d_modes
from sgfem_elasticity.stochastic_basis import build_couplings, build_multi_index_set

# lines appended by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def small_problem(level=3, M=2, p=2, sigma=0.17, nu=0.4, family="P-1"):
    spaces = build_spaces(build_mesh(level), family)
    field_ = kl_2d_modes(M, sigma)
    blocks = assemble_fe_blocks(spaces, field_)
    ix = build_multi_index_set(M, p)
    cp = build_couplings(ix)
    return spaces, field_, blocks, ix, cp, build_operator(blocks, cp, nu)


@pytest.fixture(scope="session")
def tiny():
    """Level 2, M = 1, p = 1 problem at nu = 0.4."""
    return small_problem(level=2, M=1, p=1)


@pytest.fixture(scope="session")
def small():
    """Level 3, M = 2, p = 2 problem at nu = 0.4."""
    return small_problem()
