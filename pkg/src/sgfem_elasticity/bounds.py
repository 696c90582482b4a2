"""Stability constants and eigenvalue bounds for the preconditioned system."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .assembly import FeBlocks, assemble_fe_blocks, assemble_sparse, lame_constants
from .exceptions import InvalidArgumentError
from .mesh import FeSpaces, build_mesh, build_spaces, quadrature_points
from .random_field import FieldBounds, RandomFieldExpansion, field_bounds
from .solver import BlockPreconditioner, Variant
from .stochastic_basis import StochasticCouplings

DENSE_LIMIT = 5000


def _unit_blocks(spaces: FeSpaces) -> FeBlocks:
    return assemble_fe_blocks(spaces, RandomFieldExpansion(1.0), check_field=False)


def _coarsen(spaces: FeSpaces, max_level: int) -> FeSpaces:
    if spaces.mesh.level <= max_level:
        return spaces
    return build_spaces(build_mesh(max_level), spaces.pressure_family, spaces.boundary)


def korn_estimate(spaces: FeSpaces, max_level: int = 4) -> float:
    """Discrete Korn constant.

    Smallest eigenvalue of the unit-coefficient symmetric-gradient stiffness
    matrix relative to ``blkdiag(L, L)``, with L the scalar Laplacian.  The
    computation is done on the given mesh or, if finer, at ``max_level``.
    Nested spaces make coarser estimates upper bounds of finer ones.
    """
    spaces = _coarsen(spaces, max_level)
    blocks = _unit_blocks(spaces)
    K = blocks.stiffness(0).toarray()
    L = blocks.laplacian.toarray()
    G = la.block_diag(L, L)
    val = la.eigh(K, G, eigvals_only=True, subset_by_index=[0, 0])[0]
    return float(min(max(val, 0.0), 1.0))


def inf_sup_estimate(blocks: FeBlocks, rtol: float = 1e-10) -> float:
    """Discrete inf-sup constant of the displacement/pressure pair.

    ``gamma**2`` is the smallest nonzero eigenvalue of the pencil
    ``(B K^-1 B^T, C)`` with ``K = blkdiag(L, L)``.  Only the unweighted
    matrices B, C and L enter, so any blocks on the mesh will do.
    """
    L = sp.csc_matrix(blocks.laplacian)
    lu = sp.linalg.splu(L)
    X = np.zeros((blocks.n_p, blocks.n_p))
    for Bc in (blocks.B1, blocks.B2):
        Bd = Bc.toarray()
        X += Bd @ lu.solve(Bd.T)
    X = 0.5 * (X + X.T)
    vals = la.eigh(X, blocks.C.toarray(), eigvals_only=True)
    vals = vals[vals > rtol * vals.max()]
    return float(math.sqrt(vals[0]))


def saddle_union(mu_min, mu_max, theta2, Theta2):
    """Inclusion intervals for the preconditioned saddle-point spectrum.

    ``mu`` bounds the preconditioned leading block, ``theta2`` and ``Theta2``
    the preconditioned Schur complement.
    """
    neg = (0.5 * (mu_min - math.sqrt(mu_min ** 2 + 4 * Theta2)),
           0.5 * (mu_max - math.sqrt(mu_max ** 2 + 4 * theta2)))
    pos = (mu_min, 0.5 * (mu_max + math.sqrt(mu_max ** 2 + 4 * Theta2)))
    return neg, pos


def in_union(values, union, slack: float = 1e-9) -> np.ndarray:
    """Mask of values inside either interval (widened by ``slack``)."""
    v = np.asarray(values, float)
    (a, b), (c, d) = union
    return ((v >= a - slack) & (v <= b + slack)) | ((v >= c - slack) & (v <= d + slack))


def quadrature_field_bounds(spaces: FeSpaces, field_: RandomFieldExpansion,
                            order: int = 3) -> FieldBounds:
    """Field extremes at the assembly quadrature points.

    These are the values the discrete forms actually see, so they give
    sharp bounds for Rayleigh quotients of assembled matrices.
    """
    pts, _ = quadrature_points(spaces.mesh, order)
    coef = field_.coefficient_values(pts[..., 0], pts[..., 1])
    e0 = coef[0]
    spread = np.abs(coef[1:]).sum(axis=0)
    ratio = float(np.abs(coef[1:]).reshape(field_.M, -1).max(axis=1).sum() / e0.min()) \
        if field_.M else 0.0
    return FieldBounds(float((e0 - spread).min()), float((e0 + spread).max()),
                       float(e0.min()), float(e0.max()), ratio)


def combined_field_bounds(spaces, field_) -> FieldBounds:
    """Outer envelope of grid-sampled and quadrature-point field bounds."""
    g = field_bounds(field_)
    q = quadrature_field_bounds(spaces, field_)
    return FieldBounds(min(g.E_min, q.E_min), max(g.E_max, q.E_max),
                       min(g.e0_min, q.e0_min), max(g.e0_max, q.e0_max),
                       max(g.ratio, q.ratio))


@dataclass
class BoundReport:
    """Analytic eigenvalue intervals and, optionally, exact spectra.

    The analytic union uses the interval of the chosen variant for the
    leading block and ``schur_interval`` for the Schur complement.  Exact
    fields are filled only by ``compute_bound_report(..., exact=True)``.
    """

    mean_full_interval: tuple
    laplacian_interval: tuple
    component_interval: tuple
    schur_interval: tuple
    analytic_union: tuple
    korn_constant: float
    inf_sup_gamma: float
    variant: Variant = Variant.LAPLACIAN_DIAG
    mu_interval: tuple | None = None
    schur_exact_interval: tuple | None = None
    exact_union: tuple | None = None
    leading_eigenvalues: np.ndarray | None = None
    schur_eigenvalues: np.ndarray | None = None
    spectrum: np.ndarray | None = None

    @property
    def leading_interval(self) -> tuple:
        return {Variant.MEAN_BASED_FULL: self.mean_full_interval,
                Variant.LAPLACIAN_DIAG: self.laplacian_interval,
                Variant.COMPONENT_DIAG: self.component_interval}[self.variant]


def compute_bound_report(blocks: FeBlocks, bounds: FieldBounds, nu: float,
                         variant=Variant.LAPLACIAN_DIAG,
                         couplings: StochasticCouplings | None = None,
                         exact: bool = False, korn: float | None = None,
                         gamma: float | None = None, scaled_schur: bool = True,
                         max_dim: int = DENSE_LIMIT) -> BoundReport:
    """Evaluate the analytic intervals and optionally the exact spectra.

    Parameters
    ----------
    blocks, bounds, nu
        Assembled blocks, field extremes and Poisson ratio.
    variant
        Preconditioner variant whose leading-block interval enters the union.
    couplings
        Required when ``exact`` is set.
    exact
        Also compute, by dense generalized eigensolves, the spectra of the
        preconditioned leading block, the preconditioned Schur complement
        and the whole preconditioned saddle-point matrix.
    korn, gamma
        Precomputed stability constants; estimated on the blocks' mesh if
        omitted.
    scaled_schur
        Use the Schur block scaled by the constant mean, giving
        ``[gamma^2, 2]`` instead of ``[gamma^2/e0_max, 2/e0_min]``.
    """
    variant = Variant.parse(variant)
    E_min, E_max, e0_min, e0_max = bounds
    if korn is None:
        korn = korn_estimate(blocks.spaces, max_level=max(blocks.spaces.mesh.level, 2))
    if gamma is None:
        gamma = inf_sup_estimate(blocks)
    l41 = (E_min / e0_max, E_max / e0_min)
    l42 = (korn * E_min / e0_max, E_max / e0_min)
    l43 = (korn * E_min / e0_max, 2 * E_max / e0_min)
    if scaled_schur:
        if blocks.constant_mean is None:
            raise InvalidArgumentError("the scaled Schur block needs a constant mean field")
        schur = (gamma ** 2, 2.0)
    else:
        schur = (gamma ** 2 / e0_max, 2.0 / e0_min)
    lead = {Variant.MEAN_BASED_FULL: l41, Variant.LAPLACIAN_DIAG: l42,
            Variant.COMPONENT_DIAG: l43}[variant]
    report = BoundReport(l41, l42, l43, schur,
                         saddle_union(lead[0], lead[1], schur[0], schur[1]),
                         korn, gamma, variant)
    if not exact:
        return report

    if couplings is None:
        raise InvalidArgumentError("exact mode needs the stochastic couplings")
    n_y = couplings.n_y
    dim = 2 * (blocks.n_u + blocks.n_p) * n_y
    if dim > max_dim:
        raise InvalidArgumentError(
            f"dimension {dim} exceeds the dense limit {max_dim}; use Ritz estimates instead")
    e0 = blocks.constant_mean if scaled_schur else None
    P = BlockPreconditioner(blocks, couplings, nu, variant, constant_e0=e0).matrix().toarray()
    K = assemble_sparse(blocks, couplings, nu).toarray()
    nA = (2 * blocks.n_u + blocks.n_p) * n_y
    A, Ap = K[:nA, :nA], P[:nA, :nA]
    Bm, PS = K[nA:, :nA], P[nA:, nA:]
    mu = la.eigh(A, Ap, eigvals_only=True)
    S = Bm @ la.solve(Ap, Bm.T, assume_a="pos")
    S = 0.5 * (S + S.T)
    sch = la.eigh(S, PS, eigvals_only=True)
    spec = la.eigh(K, P, eigvals_only=True)
    report.mu_interval = (float(mu[0]), float(mu[-1]))
    report.schur_exact_interval = (float(sch[0]), float(sch[-1]))
    report.exact_union = saddle_union(mu[0], mu[-1], sch[0], sch[-1])
    report.leading_eigenvalues = mu
    report.schur_eigenvalues = sch
    report.spectrum = spec
    return report
