import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import small_problem
from sgfem_elasticity.assembly import (assemble_fe_blocks, assemble_laplacian, assemble_rhs,
                                       assemble_sparse, build_operator, lame_constants,
                                       read_triplets, write_triplets)
from sgfem_elasticity.exceptions import InadmissibleFieldError, InvalidArgumentError
from sgfem_elasticity.mesh import BoundaryPartition, build_mesh, build_spaces
from sgfem_elasticity.random_field import RandomFieldExpansion, kl_2d_modes
from sgfem_elasticity.stochastic_basis import build_couplings, build_multi_index_set
from sgfem_elasticity.validation import dense_assemble_full, kron_assemble_dense


def test_lame_constants():
    a, b = lame_constants(0.4)
    assert a == pytest.approx(5 / 7) and b == pytest.approx(2.0)
    with pytest.raises(InvalidArgumentError):
        lame_constants(0.5)


@pytest.mark.parametrize("level", [3, 4])
def test_mean_laplacian_equals_scalar_laplacian(level):
    s = build_spaces(build_mesh(level))
    b = assemble_fe_blocks(s, kl_2d_modes(2, 0.1))
    A = (2.0 / 3.0) * (b.A11[0] + b.A22[0])
    L = assemble_laplacian(s, order=4)
    assert abs(A - L).max() <= 1e-12 * abs(L).max()


def test_p1_mass_matrix_is_diagonal_with_known_entries():
    s = build_spaces(build_mesh(3))
    b = assemble_fe_blocks(s, kl_2d_modes(1, 0.1))
    h = s.mesh.h
    C = b.C.toarray()
    np.testing.assert_array_equal(C, np.diag(np.diag(C)))
    # int 1 = h^2 and int ((x - c)/h)^2 = h^2/12 on each square
    np.testing.assert_allclose(np.diag(C), np.tile([h * h, h * h / 12, h * h / 12], 16), rtol=1e-14)
    assert (b.D[0] != b.C).nnz == 0


def test_q1_mass_matrix_total():
    s = build_spaces(build_mesh(3), "Q1")
    b = assemble_fe_blocks(s, RandomFieldExpansion(1.0))
    assert b.C.sum() == pytest.approx(4.0, abs=1e-13)


def free_traction_blocks(level=3):
    s = build_spaces(build_mesh(level), boundary=BoundaryPartition(()))
    return s, assemble_fe_blocks(s, RandomFieldExpansion(1.0))


def test_rigid_motions_in_kernel():
    s, b = free_traction_blocks()
    x, y = s.mesh.nodes[:, 0], s.mesh.nodes[:, 1]
    K = b.stiffness(0)
    one, zero = np.ones_like(x), np.zeros_like(x)
    for u in (np.r_[one, zero], np.r_[zero, one], np.r_[-y, x]):
        assert np.abs(K @ u).max() < 1e-12


def test_divergence_of_linear_field():
    s, b = free_traction_blocks()
    x = s.mesh.nodes[:, 0]
    # u = (x, 0) has div u = 1, so B u = -int q = -(h^2, 0, 0) per element
    Bu = b.B1 @ x
    h = s.mesh.h
    np.testing.assert_allclose(Bu, np.tile([-h * h, 0.0, 0.0], s.mesh.n_elements), atol=1e-14)


def test_strain_energy_of_shear():
    s, b = free_traction_blocks()
    y = s.mesh.nodes[:, 1]
    # u = (y, 0): eps:eps = 1/2 everywhere, area 4
    u = np.r_[y, np.zeros_like(y)]
    assert u @ (b.stiffness(0) @ u) == pytest.approx(2.0, rel=1e-13)


def test_load_vector_total():
    s, b = free_traction_blocks()
    assert b.f1.sum() == pytest.approx(4.0) and b.f2.sum() == pytest.approx(4.0)


def test_inadmissible_field_rejected():
    with pytest.raises(InadmissibleFieldError):
        assemble_fe_blocks(build_spaces(build_mesh(2)), kl_2d_modes(10, 0.5))


@pytest.mark.parametrize("nu", [0.4, 0.49999])
@pytest.mark.parametrize("family", ["P-1", "Q1"])
def test_operator_matches_dense_kron(nu, family):
    *_, b, ix, cp, op = small_problem(level=3, M=2, p=2, nu=nu, family=family)
    D = dense_assemble_full(op)
    K = kron_assemble_dense(b, cp, nu)
    assert np.abs(D - K).max() <= 1e-12 * np.abs(K).max()
    assert np.abs(D - D.T).max() <= 1e-12 * np.abs(D).max()
    S = assemble_sparse(b, cp, nu).toarray()
    assert np.abs(S - K).max() <= 1e-12 * np.abs(K).max()


def test_zero_blocks(small):
    *_, b, ix, cp, op = small
    D = dense_assemble_full(op)
    n_u, n_p, n_y = op.dims
    nu2 = 2 * n_u * n_y
    assert not D[:nu2, nu2:nu2 + n_p * n_y].any()
    assert not D[nu2 + n_p * n_y:, nu2 + n_p * n_y:].any()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_operator_linear(seed):
    *_, op = small_problem(level=2, M=2, p=1)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, op.shape[0]))
    a, c = rng.standard_normal(2)
    lhs = op @ (a * x + c * y)
    rhs = a * (op @ x) + c * (op @ y)
    assert np.abs(lhs - rhs).max() <= 1e-12 * (np.abs(lhs).max() + 1)


def test_operator_size_check(tiny):
    with pytest.raises(InvalidArgumentError):
        tiny[-1].matvec(np.zeros(3))


def test_rhs_layout(small):
    *_, b, ix, cp, op = small
    rhs = assemble_rhs(b, cp)
    u, pt, p = op.split(rhs)
    np.testing.assert_array_equal(u[0, 0], b.f1)
    assert not u[:, 1:].any() and not pt.any() and not p.any()


def test_triplet_round_trip(tmp_path, tiny):
    b = tiny[2]
    path = tmp_path / "K.txt"
    write_triplets(b.stiffness(0), path)
    first = path.read_text().splitlines()[0].split()
    assert int(first[0]) == 2 * b.n_u and int(first[2]) == b.stiffness(0).nnz
    assert abs(read_triplets(path) - b.stiffness(0)).max() == 0


def test_coupling_mismatch(tiny):
    b = tiny[2]
    with pytest.raises(InvalidArgumentError):
        build_operator(b, build_couplings(build_multi_index_set(3, 1)), 0.4)
