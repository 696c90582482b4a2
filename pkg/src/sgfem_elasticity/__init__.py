"""Stochastic Galerkin mixed FEM for nearly incompressible elasticity."""

from .assembly import (FeBlocks, KronSaddleOperator, apply_operator, assemble_fe_blocks,
                       assemble_laplacian, assemble_rhs, assemble_sparse, build_operator,
                       lame_constants, read_triplets, write_triplets)
from .bounds import BoundReport, compute_bound_report, inf_sup_estimate, korn_estimate
from .exceptions import (InadmissibleFieldError, InsufficientDataError, InvalidArgumentError,
                         NotSPDError, SingularSystemError)
from .experiments import ExperimentConfig, ResultRecord, run_experiment, run_table
from .mesh import BoundaryPartition, FeSpaces, Mesh, build_mesh, build_spaces
from .random_field import (FieldBounds, RandomFieldExpansion, evaluate_field, field_bounds,
                           kl_2d_eigenpairs, kl_2d_modes)
from .solver import (BlockPreconditioner, MinresResult, Variant, apply_preconditioner,
                     build_preconditioner, estimate_spectrum, minres_solve,
                     spectrum_intervals)
from .stochastic_basis import (MultiIndexSet, StochasticCouplings, build_couplings,
                               build_multi_index_set, evaluate_chaos)

__version__ = "0.1.0"
