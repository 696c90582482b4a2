# %% [markdown]
# # The random Young's modulus
#
# The modulus is a truncated Karhunen-Loeve expansion of an exponential
# covariance on the square (-1, 1)^2 with correlation length 2. Each 2D
# mode is a product of two 1D eigenfunctions, obtained from transcendental
# equations. This script lists the leading modes and checks that the
# expansion stays positive over the parameter box.

# %%
import numpy as np

from sgfem_elasticity import field_bounds, kl_2d_eigenpairs, kl_2d_modes

for k, pair in enumerate(kl_2d_eigenpairs(10), start=1):
    print(f"mode {k:2d}  index pair {pair.index_pair}  eigenvalue {pair.value:.6f}")

# %% [markdown]
# The standard deviation sigma scales every mode. Admissibility means the
# sum of the mode amplitudes stays below the mean, which keeps E > 0 for
# every y in [-1, 1]^M.

# %%
for sigma in (0.085, 0.17):
    for M in (5, 10):
        b = field_bounds(kl_2d_modes(M, sigma))
        print(f"sigma={sigma:<6} M={M:2d}  E in [{b.E_min:.4f}, {b.E_max:.4f}]  ratio {b.ratio:.3f}")

# %% [markdown]
# A single realisation evaluated on a coarse grid.

# %%
from sgfem_elasticity import evaluate_field

f = kl_2d_modes(5, 0.17)
t = np.linspace(-1, 1, 5)
X1, X2 = np.meshgrid(t, t)
E = evaluate_field(f, (X1, X2), np.full(5, 0.5))
print(np.round(E, 3))
