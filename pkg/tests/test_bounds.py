import math

import numpy as np
import pytest

from conftest import small_problem
from sgfem_elasticity.assembly import assemble_fe_blocks
from sgfem_elasticity.bounds import (combined_field_bounds, compute_bound_report, in_union,
                                     inf_sup_estimate, korn_estimate, saddle_union)
from sgfem_elasticity.exceptions import InvalidArgumentError
from sgfem_elasticity.mesh import BoundaryPartition, build_mesh, build_spaces
from sgfem_elasticity.random_field import RandomFieldExpansion, field_bounds, kl_2d_modes
from sgfem_elasticity.solver import Variant
from sgfem_elasticity.stochastic_basis import build_couplings, build_multi_index_set


def unit_blocks(level, family="P-1"):
    return assemble_fe_blocks(build_spaces(build_mesh(level), family), RandomFieldExpansion(1.0))


def test_korn_range_and_stability():
    k3 = korn_estimate(build_spaces(build_mesh(3)))
    k4 = korn_estimate(build_spaces(build_mesh(4)))
    assert 0 < k4 <= k3 <= 1
    assert abs(k3 - k4) <= 0.1 * k4


def test_korn_pure_dirichlet():
    s = build_spaces(build_mesh(3), boundary=BoundaryPartition(("left", "right", "bottom", "top")))
    assert korn_estimate(s) >= 0.5 - 1e-12


def test_korn_is_capped_at_max_level():
    assert korn_estimate(build_spaces(build_mesh(5))) == korn_estimate(build_spaces(build_mesh(4)))


def test_inf_sup_range_and_stability():
    g3, g4 = inf_sup_estimate(unit_blocks(3)), inf_sup_estimate(unit_blocks(4))
    assert 0 < g3 <= math.sqrt(2) and 0 < g4 <= math.sqrt(2)
    assert abs(g3 - g4) <= 0.1 * g4
    # regression baseline measured at level 3
    assert g3 > 0.2
    assert g3 == pytest.approx(0.39016, abs=1e-4)


def test_inf_sup_q1():
    g = inf_sup_estimate(unit_blocks(3, "Q1"))
    assert 0 < g <= math.sqrt(2)


def test_saddle_union_formula():
    (a, b), (c, d) = saddle_union(1.0, 1.0, 1.0, 1.0)
    s5 = math.sqrt(5)
    assert (a, b, c, d) == pytest.approx(((1 - s5) / 2, (1 - s5) / 2, 1.0, (1 + s5) / 2))
    # widening the parameters can only widen the union
    (a2, b2), (c2, d2) = saddle_union(0.5, 1.5, 0.2, 2.0)
    assert a2 <= a and b2 >= b and c2 <= c and d2 >= d


def test_constant_field_is_exact():
    s = build_spaces(build_mesh(2))
    f = kl_2d_modes(0, 1.0)
    b = assemble_fe_blocks(s, f)
    cp = build_couplings(build_multi_index_set(0, 0))
    rep = compute_bound_report(b, field_bounds(f), 0.4, Variant.MEAN_BASED_FULL, cp, exact=True)
    assert rep.mean_full_interval == (1.0, 1.0)
    np.testing.assert_allclose(rep.mu_interval, (1.0, 1.0), atol=1e-12)


def test_exact_mode_refuses_large_problems():
    *_, b, ix, cp, op = small_problem(level=4, M=3, p=2)
    with pytest.raises(InvalidArgumentError):
        compute_bound_report(b, field_bounds(kl_2d_modes(3, 0.17)), 0.4, couplings=cp, exact=True)


def test_intervals_ordered():
    *_, b, ix, cp, op = small_problem(level=2, M=2, p=1)
    rep = compute_bound_report(b, field_bounds(kl_2d_modes(2, 0.17)), 0.4)
    for lo, hi in (rep.mean_full_interval, rep.laplacian_interval, rep.component_interval,
                   rep.schur_interval, *rep.analytic_union):
        assert lo <= hi
    assert rep.analytic_union[0][1] < 0 < rep.analytic_union[1][0]


@pytest.mark.parametrize("variant", list(Variant))
def test_level2_containment(variant):
    spaces, f, b, ix, cp, op = small_problem(level=2, M=2, p=1, sigma=0.17)
    rep = compute_bound_report(b, combined_field_bounds(spaces, f), 0.4, variant, cp, exact=True)
    lo, hi = rep.leading_interval
    assert np.all((rep.leading_eigenvalues >= lo - 1e-9) & (rep.leading_eigenvalues <= hi + 1e-9))
    assert in_union(rep.spectrum, rep.analytic_union).all()
    assert in_union(rep.spectrum, rep.exact_union).all()
