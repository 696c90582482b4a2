"""Independent checks: sampled deterministic solves and dense oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (FeBlocks, KronSaddleOperator, assemble_fe_blocks, assemble_sparse,
                       lame_constants)
from .exceptions import InvalidArgumentError, SingularSystemError
from .mesh import FeSpaces
from .random_field import RandomFieldExpansion, check_parameter_point
from .stochastic_basis import MultiIndexSet, build_couplings, build_multi_index_set, evaluate_chaos

DENSE_LIMIT = 5000


@dataclass
class DeterministicProblem:
    """Three-field system for the field frozen at one parameter point.

    ``matrix`` is ordered ``[u1, u2, pt, p]`` like one chaos mode of the
    stochastic Galerkin operator.
    """

    y_sample: np.ndarray
    coefficient: RandomFieldExpansion = field(repr=False)
    blocks: FeBlocks = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    nu: float = 0.4


def deterministic_problem(spaces: FeSpaces, field_: RandomFieldExpansion, y, nu: float,
                          f=(1.0, 1.0)) -> DeterministicProblem:
    y = check_parameter_point(y, field_.M)
    coef = field_.at(y) if field_.M else field_
    blocks = assemble_fe_blocks(spaces, coef, f)
    one = build_couplings(build_multi_index_set(0, 0))
    K = assemble_sparse(blocks, one, nu)
    rhs = np.zeros(K.shape[0])
    rhs[:blocks.n_u] = blocks.f1
    rhs[blocks.n_u:2 * blocks.n_u] = blocks.f2
    return DeterministicProblem(y, coef, blocks, K, rhs, nu)


def deterministic_solve(spaces: FeSpaces, field_: RandomFieldExpansion, y, nu: float,
                        f=(1.0, 1.0), problem: DeterministicProblem | None = None):
    """Direct solve at a single parameter point.

    Returns
    -------
    u : ndarray, shape (2 n_u,)
        Displacement coefficients, x1 component first.
    p, pt : ndarray, shape (n_p,)
        Pressure and auxiliary pressure ``p / E``.
    """
    prob = problem or deterministic_problem(spaces, field_, y, nu, f)
    with np.errstate(all="raise"):
        try:
            lu = spla.splu(sp.csc_matrix(prob.matrix))
            x = lu.solve(prob.rhs)
        except (RuntimeError, FloatingPointError) as exc:
            raise SingularSystemError(f"deterministic system is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("deterministic solve produced non-finite values")
    n_u, n_p = spaces.n_u, spaces.n_p
    u = x[:2 * n_u]
    pt = x[2 * n_u:2 * n_u + n_p]
    p = x[2 * n_u + n_p:]
    return u, p, pt


@dataclass
class SurrogateEvaluation:
    """Stochastic Galerkin solution stored mode by mode.

    ``U`` has shape (n_y, 2 n_u); ``P`` and ``Pt`` have shape (n_y, n_p).
    """

    index_set: MultiIndexSet
    U: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    Pt: np.ndarray = field(repr=False)

    @classmethod
    def from_vector(cls, x, index_set: MultiIndexSet, n_u: int, n_p: int):
        n_y = index_set.n_y
        x = np.asarray(x, float)
        nu2 = 2 * n_u * n_y
        u = x[:nu2].reshape(2, n_y, n_u)
        U = np.concatenate([u[0], u[1]], axis=1)
        Pt = x[nu2:nu2 + n_p * n_y].reshape(n_y, n_p)
        P = x[nu2 + n_p * n_y:].reshape(n_y, n_p)
        return cls(index_set, U, P.copy(), Pt.copy())

    def evaluate(self, y):
        """``(u, p, pt)`` at parameter point ``y``."""
        psi = evaluate_chaos(self.index_set, check_parameter_point(y, self.index_set.M))
        return psi @ self.U, psi @ self.P, psi @ self.Pt


def norm_energy(v, blocks: FeBlocks, nu: float, n_y: int = 1) -> float:
    """Squared discrete energy norm of ``v = [u1, u2, pt, p]``.

    ``alpha |grad u|^2 + (1/alpha + 1/(alpha beta)) |p|^2 + |pt|^2 / (alpha beta)``
    with unit-coefficient Laplacian and mass matrices, summed over modes.
    """
    alpha, beta = lame_constants(nu)
    n_u, n_p = blocks.n_u, blocks.n_p
    v = np.asarray(v, float).ravel()
    if v.size != 2 * (n_u + n_p) * n_y:
        raise InvalidArgumentError(f"vector has length {v.size}, expected {2 * (n_u + n_p) * n_y}")
    nu2 = 2 * n_u * n_y
    U = v[:nu2].reshape(-1, n_u).T
    Pt = v[nu2:nu2 + n_p * n_y].reshape(n_y, n_p).T
    P = v[nu2 + n_p * n_y:].reshape(n_y, n_p).T
    grad = float(np.sum(U * (blocks.laplacian @ U)))
    mp = float(np.sum(P * (blocks.C @ P)))
    mpt = float(np.sum(Pt * (blocks.C @ Pt)))
    return alpha * grad + (1 / alpha + 1 / (alpha * beta)) * mp + mpt / (alpha * beta)


@dataclass
class SurrogateStats:
    mean: float
    max: float
    errors: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)


def surrogate_error(sg_solution: SurrogateEvaluation, spaces: FeSpaces,
                    field_: RandomFieldExpansion, nu: float, f=(1.0, 1.0),
                    samples: int = 100, seed: int = 0,
                    norm_blocks: FeBlocks | None = None) -> SurrogateStats:
    """Relative energy-norm error of the surrogate at random parameter points.

    Parameter points are drawn uniformly from [-1, 1]^M with a seeded
    generator; each is compared against a direct deterministic solve.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-1.0, 1.0, size=(samples, field_.M))
    nb = norm_blocks or assemble_fe_blocks(spaces, RandomFieldExpansion(1.0), f,
                                           check_field=False)
    errs = np.empty(samples)
    for s, y in enumerate(ys):
        u, p, pt = deterministic_solve(spaces, field_, y, nu, f)
        us, ps, pts = sg_solution.evaluate(y)
        ref = np.concatenate([u, pt, p])
        diff = np.concatenate([us, pts, ps]) - ref
        den = norm_energy(ref, nb, nu)
        errs[s] = math.sqrt(norm_energy(diff, nb, nu) / den) if den > 0 else \
            math.sqrt(norm_energy(diff, nb, nu))
    return SurrogateStats(float(errs.mean()), float(errs.max()), errs, ys)


def dense_assemble_full(op: KronSaddleOperator, max_dim: int = DENSE_LIMIT) -> np.ndarray:
    """Dense matrix of the operator, one unit vector at a time."""
    n = op.shape[0]
    if n > max_dim:
        raise InvalidArgumentError(f"dimension {n} exceeds the dense limit {max_dim}")
    out = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = op.matvec(e)
        e[j] = 0.0
    return out


def kron_assemble_dense(blocks: FeBlocks, couplings, nu: float,
                        max_dim: int = DENSE_LIMIT) -> np.ndarray:
    """Dense saddle-point matrix written out from ``sum_k G_k kron K_k``.

    Uses only dense numpy Kronecker products of the individual blocks.
    """
    alpha, beta = lame_constants(nu)
    ia = 1.0 / (alpha * beta)
    n_u, n_p, n_y = blocks.n_u, blocks.n_p, couplings.n_y
    n = 2 * (n_u + n_p) * n_y
    if n > max_dim:
        raise InvalidArgumentError(f"dimension {n} exceeds the dense limit {max_dim}")
    G = [g.toarray() for g in couplings.G]
    I = np.eye(n_y)

    def ksum(mats):
        return sum(np.kron(G[k], mats[k].toarray()) for k in range(len(mats)))

    nu_, npy = n_u * n_y, n_p * n_y
    s = np.cumsum([0, nu_, nu_, npy, npy])
    out = np.zeros((n, n))
    out[s[0]:s[1], s[0]:s[1]] = alpha * ksum(blocks.A11)
    out[s[0]:s[1], s[1]:s[2]] = alpha * ksum(blocks.A12)
    out[s[1]:s[2], s[0]:s[1]] = alpha * ksum(blocks.A21)
    out[s[1]:s[2], s[1]:s[2]] = alpha * ksum(blocks.A22)
    out[s[2]:s[3], s[2]:s[3]] = ia * ksum(blocks.D)
    B1 = np.kron(I, blocks.B1.toarray())
    B2 = np.kron(I, blocks.B2.toarray())
    C = np.kron(I, blocks.C.toarray())
    out[s[3]:, s[0]:s[1]] = B1
    out[s[3]:, s[1]:s[2]] = B2
    out[s[0]:s[1], s[3]:] = B1.T
    out[s[1]:s[2], s[3]:] = B2.T
    out[s[2]:s[3], s[3]:] = -ia * C
    out[s[3]:, s[2]:s[3]] = -ia * C
    return out


def couplings_by_quadrature(index_set: MultiIndexSet, order: int | None = None):
    """G_k computed by tensor Gauss-Legendre quadrature of ``y_k psi_a psi_b``.

    The rule is exact for the polynomial degrees involved; the probability
    measure is uniform on [-1, 1]^M, i.e. weights ``w / 2`` per direction.
    """
    M, p = index_set.M, index_set.p
    order = order or p + 2
    t, w = np.polynomial.legendre.leggauss(order)
    w = w / 2.0
    G = [np.eye(index_set.n_y)]
    if M == 0:
        return G
    # products factorize over directions, so quadrature can be done per direction
    vals = np.array([math.sqrt(2 * n + 1) * np.polynomial.legendre.Legendre.basis(n)(t)
                     for n in range(p + 2)])                 # (p+2, order)
    mass = (vals * w) @ vals.T                               # <psi_i psi_j>
    first = (vals * (w * t)) @ vals.T                        # <y psi_i psi_j>
    idx = index_set.indices
    for k in range(M):
        Gk = np.ones((idx.shape[0], idx.shape[0]))
        for m in range(M):
            table = first if m == k else mass
            Gk *= table[np.ix_(idx[:, m], idx[:, m])]
        G.append(Gk)
    return G
