"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is echoed in the terminal summary.
The table reproduction (criteria 2-4) runs the full grid of 90 solves at
levels 5 and 6 once per session, which takes a few hours on one core.
Set ``SGFEM_RESULTS_DIR`` to keep the CSV files of that run.
"""

import itertools
import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, small_problem
from sgfem_elasticity import experiments as ex
from sgfem_elasticity.assembly import assemble_rhs
from sgfem_elasticity.bounds import (combined_field_bounds, compute_bound_report, in_union,
                                     inf_sup_estimate, korn_estimate)
from sgfem_elasticity.mesh import build_mesh, build_spaces
from sgfem_elasticity.random_field import kl_2d_modes
from sgfem_elasticity.assembly import assemble_fe_blocks, build_operator
from sgfem_elasticity.solver import Variant, build_preconditioner, minres_solve
from sgfem_elasticity.stochastic_basis import build_couplings, build_multi_index_set
from sgfem_elasticity.validation import (SurrogateEvaluation, couplings_by_quadrature,
                                         dense_assemble_full, kron_assemble_dense,
                                         surrogate_error)

NUS = ex.NU_GRID

# published reference values ------------------------------------------------

TABLE1 = [(4, 240, 192, 864), (5, 992, 768, 3520), (6, 4032, 3072, 14208)]
TABLE2 = {(3, 5): 56, (3, 8): 165, (3, 10): 286, (4, 5): 126, (4, 8): 495, (4, 10): 1001}

# (level, M, nu) -> (neg_lo, neg_hi, pos_lo, pos_hi)
TABLE3 = {
    (5, 5, 0.4): (-0.8287, -0.3369, 0.2737, 1.8332),
    (5, 5, 0.49999): (-0.9347, -0.1892, 0.2878, 1.8886),
    (5, 8, 0.4): (-0.8305, -0.3368, 0.2722, 1.8408),
    (5, 8, 0.49999): (-0.9058, -0.1891, 0.2859, 1.8934),
    (5, 10, 0.4): (-0.8311, -0.3367, 0.2720, 1.8427),
    (5, 10, 0.49999): (-0.9064, -0.1891, 0.2857, 1.8949),
    (6, 5, 0.4): (-0.8291, -0.3368, 0.2731, 1.8358),
    (6, 5, 0.49999): (-0.9047, -0.1890, 0.2866, 1.8910),
    (6, 8, 0.4): (-0.8323, -0.3366, 0.2715, 1.8448),
    (6, 8, 0.49999): (-0.9084, -0.1890, 0.2849, 1.8986),
    (6, 10, 0.4): (-0.8334, -0.3366, 0.2713, 1.8469),
    (6, 10, 0.49999): (-0.9094, -0.1890, 0.2848, 1.9006),
}
TABLE4 = {
    (5, 5, 0.4): (-0.9291, -0.3178, 0.2318, 1.9435),
    (5, 5, 0.49999): (-0.9491, -0.1789, 0.2428, 1.9935),
    (5, 8, 0.4): (-0.8797, -0.3171, 0.2268, 1.9566),
    (5, 8, 0.49999): (-0.9538, -0.1789, 0.2358, 2.0052),
    (5, 10, 0.4): (-0.8817, -0.3169, 0.2264, 1.9604),
    (5, 10, 0.49999): (-0.9555, -0.1788, 0.2352, 2.0086),
    (6, 5, 0.4): (-0.9206, -0.3176, 0.2307, 1.9454),
    (6, 5, 0.49999): (-0.9507, -0.1787, 0.2413, 1.9964),
    (6, 8, 0.4): (-0.8836, -0.3167, 0.2254, 1.9623),
    (6, 8, 0.49999): (-0.9581, -0.1787, 0.2346, 2.0126),
    (6, 10, 0.4): (-0.8857, -0.3166, 0.2251, 1.9663),
    (6, 10, 0.49999): (-0.9600, -0.1785, 0.2336, 2.0167),
}

# (level, M) -> counts for nu in NUS
TABLE5 = {(5, 5): (56, 74, 78, 78, 78), (5, 8): (56, 75, 78, 79, 79), (5, 10): (56, 75, 79, 79, 79),
          (6, 5): (56, 75, 79, 79, 79), (6, 8): (56, 75, 79, 79, 79), (6, 10): (56, 75, 79, 79, 79)}
TABLE6 = {(5, 5): (66, 86, 90, 92, 92), (5, 8): (67, 88, 92, 93, 93), (5, 10): (67, 88, 93, 93, 93),
          (6, 5): (66, 88, 92, 92, 92), (6, 8): (67, 88, 93, 93, 93), (6, 10): (67, 89, 93, 95, 95)}
TABLE7 = {(5, 5): (67, 90, 95, 95, 95), (5, 8): (70, 93, 97, 98, 98), (5, 10): (70, 93, 98, 98, 98),
          (6, 5): (69, 91, 95, 96, 96), (6, 8): (70, 94, 98, 98, 98), (6, 10): (70, 94, 98, 98, 98)}
ITER_TABLES = {"T5": TABLE5, "T6": TABLE6, "T7": TABLE7}


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


# criterion 1 ---------------------------------------------------------------

def test_criterion_1_dof_tables():
    t0 = time.perf_counter()
    t1 = ex.run_table("T1")
    t2 = {(p, M): ny for p, M, ny in ex.run_table("T2")}
    elapsed = time.perf_counter() - t0
    ok = t1 == TABLE1 and t2 == TABLE2 and elapsed < 1.0
    assert report(1, ok, f"DOF rows {t1}, n_y {sorted(t2.values())}, {elapsed:.3f} s")


# tables: one session-wide run ------------------------------------------------

@pytest.fixture(scope="session")
def table_results(tmp_path_factory):
    out = os.environ.get("SGFEM_RESULTS_DIR") or str(tmp_path_factory.mktemp("tables"))
    os.makedirs(out, exist_ok=True)
    results = {}
    for tid in ("T5", "T6", "T7"):
        recs = ex.run_table(tid, os.path.join(out, f"{tid}.csv"),
                            progress=lambda r: print(_cell_line(r), flush=True))
        results[tid] = {(r.config.level, r.config.M, r.config.nu): r for r in recs}
    return results


def _cell_line(r):
    c = r.config
    return (f"sigma={c.sigma} p={c.p} level={c.level} M={c.M} nu={c.nu}: iters={r.iterations} "
            f"time={r.wall_time:.1f}s ritz={r.ritz_negative}U{r.ritz_positive} {r.error}")


# criterion 2 ---------------------------------------------------------------

def test_criterion_2_ritz_intervals(table_results):
    worst, failures = 0.0, []
    for tid, ref in (("T5", TABLE3), ("T6", TABLE4)):
        for key, paper in ref.items():
            rec = table_results[tid][key]
            got = (*rec.ritz_negative, *rec.ritz_positive)
            for g, p in zip(got, paper):
                rel = abs(g - p) / abs(p)
                worst = max(worst, rel if not math.isnan(rel) else math.inf)
                if not rel <= 0.05:
                    failures.append(f"{tid} {key}: {g:.4f} vs {p:.4f}")
    ok = not failures
    assert report(2, ok, f"24 cells, worst endpoint deviation {100 * worst:.2f}% "
                         f"(limit 5%){'; ' + '; '.join(failures) if failures else ''}")


# criterion 3 ---------------------------------------------------------------

def test_criterion_3_iteration_counts(table_results):
    failures, worst = [], 0.0
    for tid, table in ITER_TABLES.items():
        for (level, M), counts in table.items():
            for nu, paper in zip(NUS, counts):
                rec = table_results[tid][(level, M, nu)]
                it = rec.iterations
                worst = max(worst, abs(it - paper) / paper)
                if not (rec.converged and abs(it - paper) <= 0.1 * paper and it <= paper + 8):
                    failures.append(f"{tid} l={level} M={M} nu={nu}: {it} vs {paper}")
    big = table_results["T7"][(6, 10, 0.49999)]
    slow = max(r.wall_time for r in table_results["T7"].values())
    ok = not failures and slow < 1200
    assert report(3, ok, f"90 cells, worst deviation {100 * worst:.1f}% (limit 10%, +8), "
                         f"largest cell dim={big.dim} solved in {big.wall_time:.0f} s, "
                         f"slowest cell {slow:.0f} s (limit 1200 s)"
                         f"{'; ' + '; '.join(failures) if failures else ''}")


# criterion 4 ---------------------------------------------------------------

def test_criterion_4_nu_robustness(table_results):
    failures = []
    for tid, table in ITER_TABLES.items():
        for (level, M) in table:
            c = [table_results[tid][(level, M, nu)].iterations for nu in NUS]
            growth_ok = all(b >= a for a, b in zip(c[:-1], c[1:])) and c[-1] <= 1.5 * c[0]
            plateau_ok = abs(c[3] - c[4]) <= 2
            if not (growth_ok and plateau_ok):
                failures.append(f"{tid} l={level} M={M}: {c}")
    ok = not failures
    assert report(4, ok, "18 rows non-decreasing in nu, growth <= 50%, "
                         f"nu=0.4999 vs 0.49999 within 2{'; ' + '; '.join(failures) if failures else ''}")


# criteria 5 and 8 -------------------------------------------------------------

def oracle_configs():
    for level, M, p, sigma, nu in itertools.product((2, 3, 4), (0, 1, 2, 3), (0, 1, 2),
                                                    (0.085, 0.17), (0.4, 0.49999)):
        per_mode = build_spaces(build_mesh(level)).dofs
        if per_mode * math.comb(M + p, p) <= 5000:
            yield level, M, p, sigma, nu


def test_criteria_5_and_8_oracles_and_structure():
    worst_op = worst_g = worst_sol = worst_sym = 0.0
    struct_ok = True
    n = 0
    for level, M, p, sigma, nu in oracle_configs():
        n += 1
        spaces, f, b, ix, cp, op = small_problem(level, M, p, sigma, nu)
        D = dense_assemble_full(op)
        K = kron_assemble_dense(b, cp, nu)
        scale = np.abs(K).max()
        worst_op = max(worst_op, np.abs(D - K).max() / scale)
        worst_sym = max(worst_sym, np.abs(D - D.T).max() / scale)
        for G, R in zip(cp.G, couplings_by_quadrature(ix)):
            worst_g = max(worst_g, np.abs(G.toarray() - R).max())
        struct_ok &= bool(np.array_equal(cp.G[0].toarray(), np.eye(cp.n_y)))
        struct_ok &= all(np.diff(G.indptr).max(initial=0) <= 2 for G in cp.G[1:])
        struct_ok &= (b.D[0] != b.C).nnz == 0
        rhs = assemble_rhs(b, cp)
        P = build_preconditioner(b, cp, nu, constant_e0=1.0)
        x = minres_solve(op, P, rhs, tol=1e-12, maxit=5000, spectrum=False).solution
        ref = np.linalg.solve(K, rhs)
        worst_sol = max(worst_sol, np.linalg.norm(x - ref) / np.linalg.norm(ref))
    ok5 = worst_op <= 1e-12 and worst_g <= 1e-13 and worst_sol <= 1e-8
    ok8 = struct_ok and worst_sym <= 1e-12
    report(5, ok5, f"{n} configurations: operator {worst_op:.1e} (1e-12), G_k {worst_g:.1e} "
                   f"(1e-13), MINRES vs direct {worst_sol:.1e} (1e-8)")
    report(8, ok8, f"{n} configurations: G_0 = I, <= 2 nonzeros per row, D_0 = C exactly, "
                   f"symmetry {worst_sym:.1e} (1e-12)")
    assert ok5 and ok8


# criterion 6 -----------------------------------------------------------------

def test_criterion_6_bound_containment():
    slack = 1e-9
    violations, n = [], 0
    for level in (2, 3):
        spaces = build_spaces(build_mesh(level))
        korn = korn_estimate(spaces)
        gamma = inf_sup_estimate(assemble_fe_blocks(spaces, kl_2d_modes(0, 1.0)))
        for (M, p), sigma, nu, variant in itertools.product(((1, 2), (2, 1), (3, 2)),
                                                            (0.085, 0.17), (0.4, 0.49999),
                                                            list(Variant)):
            f = kl_2d_modes(M, sigma)
            b = assemble_fe_blocks(spaces, f)
            cp = build_couplings(build_multi_index_set(M, p))
            rep = compute_bound_report(b, combined_field_bounds(spaces, f), nu, variant, cp,
                                       exact=True, korn=korn, gamma=gamma)
            n += 1
            lo, hi = rep.leading_interval
            mu = rep.leading_eigenvalues
            s_lo, s_hi = rep.schur_interval
            sch = rep.schur_eigenvalues
            tag = f"l={level} M={M} p={p} sigma={sigma} nu={nu} {variant.value}"
            if mu.min() < lo - slack or mu.max() > hi + slack:
                violations.append(f"{tag}: leading block {mu.min():.4f}, {mu.max():.4f}")
            if sch.min() < s_lo - slack or sch.max() > s_hi + slack:
                violations.append(f"{tag}: Schur {sch.min():.4f}, {sch.max():.4f}")
            if not in_union(rep.spectrum, rep.analytic_union, slack).all():
                violations.append(f"{tag}: spectrum outside the analytic union")
            if not in_union(rep.spectrum, rep.exact_union, slack).all():
                violations.append(f"{tag}: spectrum outside the union of exact constants")
    ok = not violations
    assert report(6, ok, f"{n} instances, {len(violations)} violations beyond {slack:g}"
                         f"{'; ' + '; '.join(violations) if violations else ''}")


# criterion 7 -----------------------------------------------------------------

def test_criterion_7_surrogate_convergence():
    spaces = build_spaces(build_mesh(4))
    f = kl_2d_modes(3, 0.17)
    b = assemble_fe_blocks(spaces, f)
    means = []
    for p in (1, 2, 3):
        ix = build_multi_index_set(3, p)
        cp = build_couplings(ix)
        res = minres_solve(build_operator(b, cp, 0.4),
                           build_preconditioner(b, cp, 0.4, constant_e0=1.0),
                           assemble_rhs(b, cp), tol=1e-10, maxit=2000)
        sg = SurrogateEvaluation.from_vector(res.solution, ix, spaces.n_u, spaces.n_p)
        means.append(surrogate_error(sg, spaces, f, 0.4, samples=100, seed=2024).mean)
    ok = means[0] > means[1] > means[2] > 0
    assert report(7, ok, "mean relative energy error p=1,2,3: "
                         + ", ".join(f"{m:.3e}" for m in means))
