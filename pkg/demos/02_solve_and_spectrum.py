# %% [markdown]
# # One stochastic Galerkin solve
#
# Build the Q2-P1 spaces on a uniform grid and the Legendre chaos basis,
# then solve the four-field saddle-point system with block-diagonal
# preconditioned MINRES. The Lanczos coefficients from the solve give
# Ritz estimates of the preconditioned spectrum at no extra cost: harmonic
# Ritz values for the endpoints next to zero, ordinary ones for the outer ends.

# %%
from sgfem_elasticity import (assemble_fe_blocks, assemble_rhs, build_couplings, build_mesh,
                              build_multi_index_set, build_operator, build_preconditioner,
                              build_spaces, estimate_spectrum, kl_2d_modes, minres_solve)

level, M, p, sigma = 4, 3, 2, 0.17
spaces = build_spaces(build_mesh(level))
field_ = kl_2d_modes(M, sigma)
blocks = assemble_fe_blocks(spaces, field_)
couplings = build_couplings(build_multi_index_set(M, p))
print(f"n_u={spaces.n_u} n_p={spaces.n_p} n_y={couplings.n_y}")

# %% [markdown]
# The iteration count should barely move as nu approaches 1/2.

# %%
for nu in (0.4, 0.49, 0.499, 0.4999, 0.49999):
    op = build_operator(blocks, couplings, nu)
    P = build_preconditioner(blocks, couplings, nu)
    res = minres_solve(op, P, assemble_rhs(blocks, couplings), tol=1e-6)
    neg, pos = estimate_spectrum(res)
    print(f"nu={nu:<8} iters={res.iterations:3d}  "
          f"[{neg[0]:.4f}, {neg[1]:.4f}] U [{pos[0]:.4f}, {pos[1]:.4f}]")
