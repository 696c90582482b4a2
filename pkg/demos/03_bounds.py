# %% [markdown]
# # Analytic eigenvalue bounds against the true spectrum
#
# On a tiny instance the preconditioned matrix can be formed densely. We
# compare its eigenvalues with the analytic union of two intervals, which
# is built from the Korn constant, the inf-sup constant and the extremes
# of the random field.

# %%
import numpy as np

from sgfem_elasticity import (Variant, assemble_fe_blocks, build_couplings, build_mesh,
                              build_multi_index_set, build_spaces, compute_bound_report,
                              kl_2d_modes)
from sgfem_elasticity.bounds import combined_field_bounds

spaces = build_spaces(build_mesh(2))
field_ = kl_2d_modes(2, 0.17)
blocks = assemble_fe_blocks(spaces, field_)
couplings = build_couplings(build_multi_index_set(2, 1))

# %%
for variant in Variant:
    rep = compute_bound_report(blocks, combined_field_bounds(spaces, field_), 0.4, variant,
                               couplings, exact=True)
    (a, b), (c, d) = rep.analytic_union
    ev = rep.spectrum
    neg, pos = ev[ev < 0], ev[ev > 0]
    print(f"{variant.value:10s} C_K={rep.korn_constant:.4f} gamma={rep.inf_sup_gamma:.4f}")
    print(f"  bound    [{a:.4f}, {b:.4f}] U [{c:.4f}, {d:.4f}]")
    print(f"  spectrum [{neg.min():.4f}, {neg.max():.4f}] U [{pos.min():.4f}, {pos.max():.4f}]")
