# %% [markdown]
# # Surrogate accuracy against sampled deterministic solves
#
# The stochastic Galerkin solution is a polynomial surrogate in y. For
# random parameter samples we compare it with a direct deterministic solve
# in the parameter-dependent energy norm. The error should fall as the
# total degree p grows.

# %%
from sgfem_elasticity import (assemble_fe_blocks, assemble_rhs, build_couplings, build_mesh,
                              build_multi_index_set, build_operator, build_preconditioner,
                              build_spaces, kl_2d_modes, minres_solve)
from sgfem_elasticity.validation import SurrogateEvaluation, surrogate_error

level, M, sigma, nu = 3, 3, 0.17, 0.4
spaces = build_spaces(build_mesh(level))
field_ = kl_2d_modes(M, sigma)
blocks = assemble_fe_blocks(spaces, field_)

# %%
for p in (1, 2, 3):
    ix = build_multi_index_set(M, p)
    cp = build_couplings(ix)
    res = minres_solve(build_operator(blocks, cp, nu), build_preconditioner(blocks, cp, nu),
                       assemble_rhs(blocks, cp), tol=1e-10)
    sg = SurrogateEvaluation.from_vector(res.solution, ix, spaces.n_u, spaces.n_p)
    stats = surrogate_error(sg, spaces, field_, nu, (1.0, 1.0), samples=20, seed=1)
    print(f"p={p}  mean relative error {stats.mean:.3e}  max {stats.max:.3e}")
