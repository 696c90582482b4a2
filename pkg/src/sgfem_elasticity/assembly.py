"""Finite element blocks and the Kronecker-structured saddle-point operator.

Unknowns are ordered ``[u1, u2, pt, p]`` where ``pt`` is the auxiliary
pressure p/E.  Each block stores its coefficient vectors mode by mode:
the spatial index runs fastest and the chaos index slowest, so a block
vector ``x`` of length ``n * n_y`` is ``vec(X)`` for an ``n x n_y`` matrix X
and ``(G kron K) x = vec(K X G^T)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidArgumentError
from .mesh import FeSpaces, pressure_shape, q2_shape, quadrature_points, reference_rule
from .random_field import RandomFieldExpansion, field_bounds
from .stochastic_basis import StochasticCouplings

QUAD_ORDER = 3


def lame_constants(nu: float) -> tuple[float, float]:
    """alpha = 1/(1+nu) and beta = nu/(1-2nu)."""
    if not 0.0 < nu < 0.5:
        raise InvalidArgumentError(f"Poisson ratio must lie in (0, 1/2), got {nu}")
    return 1.0 / (1.0 + nu), nu / (1.0 - 2.0 * nu)


@dataclass(frozen=True)
class FeBlocks:
    """Deterministic matrices of the three-field discretisation.

    ``A11[k]`` etc. carry the weight ``e_k``.  ``A12[k][i, l]`` couples the
    x1 test function ``phi_i`` with the x2 trial function ``phi_l`` and
    ``A21[k] = A12[k].T``, so ``[[A11, A12], [A21, A22]]`` is the symmetric
    vector stiffness matrix.  ``laplacian`` is the unit-coefficient scalar
    stiffness matrix used for norms and stability constants.
    """

    spaces: FeSpaces
    A11: tuple = field(repr=False)
    A12: tuple = field(repr=False)
    A21: tuple = field(repr=False)
    A22: tuple = field(repr=False)
    B1: sp.csr_matrix = field(repr=False)
    B2: sp.csr_matrix = field(repr=False)
    C: sp.csr_matrix = field(repr=False)
    D: tuple = field(repr=False)
    f1: np.ndarray = field(repr=False)
    f2: np.ndarray = field(repr=False)
    laplacian: sp.csr_matrix = field(repr=False)
    f1_full: np.ndarray = field(repr=False, default=None)
    constant_mean: float | None = None

    @property
    def M(self) -> int:
        return len(self.A11) - 1

    @property
    def n_u(self) -> int:
        return self.spaces.n_u

    @property
    def n_p(self) -> int:
        return self.spaces.n_p

    def stiffness(self, k: int) -> sp.csr_matrix:
        """The 2n_u x 2n_u vector stiffness matrix weighted by e_k."""
        return sp.bmat([[self.A11[k], self.A12[k]], [self.A21[k], self.A22[k]]], format="csr")

    @property
    def B(self) -> sp.csr_matrix:
        return sp.hstack([self.B1, self.B2], format="csr")


def _scatter(rows, cols, local, shape):
    """Sum element matrices into a CSR matrix, skipping eliminated dofs."""
    r = np.broadcast_to(rows[:, :, None], local.shape)
    c = np.broadcast_to(cols[:, None, :], local.shape)
    keep = (r >= 0) & (c >= 0)
    A = sp.coo_matrix((local[keep], (r[keep], c[keep])), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def _drop_roundoff(A, rtol=1e-13):
    """Zero entries that are roundoff relative to their diagonal scale."""
    A = A.tocoo()
    d = np.sqrt(np.abs(A.diagonal()))
    keep = np.abs(A.data) > rtol * d[A.row] * d[A.col]
    A = sp.csr_matrix((A.data[keep], (A.row[keep], A.col[keep])), shape=A.shape)
    A.sort_indices()
    return A


def _scatter_vec(rows, local, n):
    keep = rows >= 0
    return np.bincount(rows[keep], weights=local[keep], minlength=n)


def _body_force(f, x1, x2):
    if f is None:
        f = (1.0, 1.0)
    if callable(f):
        v = f(x1, x2)
        return np.broadcast_to(np.asarray(v[0], float), x1.shape), \
            np.broadcast_to(np.asarray(v[1], float), x1.shape)
    return np.full(x1.shape, float(f[0])), np.full(x1.shape, float(f[1]))


def assemble_fe_blocks(spaces: FeSpaces, field_: RandomFieldExpansion,
                       f: Callable | tuple | None = (1.0, 1.0),
                       check_field: bool = True) -> FeBlocks:
    """Assemble all spatial matrices and load vectors by 3x3 Gauss quadrature.

    Coefficients are sampled at the quadrature points.  ``f`` is either a
    constant pair or a callable ``f(x1, x2) -> (f1, f2)``.
    """
    if check_field:
        field_bounds(field_)
    mesh = spaces.mesh
    xi, eta, w = reference_rule(QUAD_ORDER)
    N, Nxi, Neta = q2_shape(xi, eta)
    scale = 2.0 / mesh.h
    D1, D2 = Nxi * scale, Neta * scale
    Pq = pressure_shape(spaces.pressure_family, xi, eta)
    pts, wts = quadrature_points(mesh, QUAD_ORDER)
    x1, x2 = pts[..., 0], pts[..., 1]
    wq = wts[0]

    coef = field_.coefficient_values(x1, x2)                 # (M+1, nel, nq)
    cw = coef * wq

    p11 = np.einsum("aq,bq->qab", D1, D1) + 0.5 * np.einsum("aq,bq->qab", D2, D2)
    p22 = 0.5 * np.einsum("aq,bq->qab", D1, D1) + np.einsum("aq,bq->qab", D2, D2)
    p12 = 0.5 * np.einsum("aq,bq->qab", D2, D1)
    lap = np.einsum("aq,bq->qab", D1, D1) + np.einsum("aq,bq->qab", D2, D2)
    pmass = np.einsum("rq,sq->qrs", Pq, Pq)

    ud, pd = spaces.element_udofs, spaces.element_pdofs
    nu_, np_ = spaces.n_u, spaces.n_p
    A11, A12, A21, A22, D = [], [], [], [], []
    for k in range(coef.shape[0]):
        A11.append(_scatter(ud, ud, np.einsum("eq,qab->eab", cw[k], p11), (nu_, nu_)))
        A22.append(_scatter(ud, ud, np.einsum("eq,qab->eab", cw[k], p22), (nu_, nu_)))
        a12 = _scatter(ud, ud, np.einsum("eq,qab->eab", cw[k], p12), (nu_, nu_))
        A12.append(a12)
        A21.append(a12.T.tocsr())
        D.append(_scatter(pd, pd, np.einsum("eq,qrs->ers", cw[k], pmass), (np_, np_)))

    nel = mesh.n_elements
    b1_loc = -np.einsum("rq,aq,q->ra", Pq, D1, wq)
    b2_loc = -np.einsum("rq,aq,q->ra", Pq, D2, wq)
    B1 = _scatter(pd, ud, np.broadcast_to(b1_loc, (nel,) + b1_loc.shape), (np_, nu_))
    B2 = _scatter(pd, ud, np.broadcast_to(b2_loc, (nel,) + b2_loc.shape), (np_, nu_))
    c_loc = np.einsum("q,qrs->rs", wq, pmass)
    C = _scatter(pd, pd, np.broadcast_to(c_loc, (nel,) + c_loc.shape), (np_, np_))
    L_loc = np.einsum("q,qab->ab", wq, lap)
    L = _scatter(ud, ud, np.broadcast_to(L_loc, (nel,) + L_loc.shape), (nu_, nu_))

    if spaces.pressure_family == "P-1":
        # the centred linear basis is L2-orthogonal on rectangles
        C = _drop_roundoff(C)
        D = [_drop_roundoff(Dk) for Dk in D]
    if field_.constant_mean is not None:
        D[0] = (field_.constant_mean * C).tocsr()

    g1, g2 = _body_force(f, x1, x2)
    f1_loc = np.einsum("eq,aq->ea", g1 * wq, N)
    f2_loc = np.einsum("eq,aq->ea", g2 * wq, N)
    f1 = _scatter_vec(ud, f1_loc, nu_)
    f2 = _scatter_vec(ud, f2_loc, nu_)
    f1_full = np.bincount(mesh.element_nodes.ravel(), weights=f1_loc.ravel(),
                          minlength=mesh.n_nodes)
    return FeBlocks(spaces, tuple(A11), tuple(A12), tuple(A21), tuple(A22),
                    B1, B2, C, tuple(D), f1, f2, L, f1_full, field_.constant_mean)


def assemble_laplacian(spaces: FeSpaces, order: int = QUAD_ORDER) -> sp.csr_matrix:
    """Unit-coefficient Q2 stiffness matrix, int grad(phi_i) . grad(phi_l)."""
    mesh = spaces.mesh
    xi, eta, w = reference_rule(order)
    _, Nxi, Neta = q2_shape(xi, eta)
    # reference derivatives scale by 2/h, the Jacobian by h^2/4: they cancel
    loc = (Nxi * w) @ Nxi.T + (Neta * w) @ Neta.T
    ud = spaces.element_udofs
    return _scatter(ud, ud, np.broadcast_to(loc, (mesh.n_elements,) + loc.shape),
                    (spaces.n_u, spaces.n_u))


class KronSaddleOperator:
    """Matrix-free action of the stochastic Galerkin saddle-point matrix.

    The matrix is ``[[A, B^T], [B, 0]]`` with
    ``A = blkdiag(alpha sum_k G_k kron K_k, (alpha beta)^-1 sum_k G_k kron D_k)``
    and ``B = [I kron B1, I kron B2, -(alpha beta)^-1 I kron C]``, where
    ``K_k`` is the vector stiffness matrix weighted by ``e_k``.
    """

    def __init__(self, blocks: FeBlocks, couplings: StochasticCouplings, nu: float):
        if couplings.M != blocks.M:
            raise InvalidArgumentError(
                f"couplings have M = {couplings.M} but the blocks have M = {blocks.M}")
        self.blocks = blocks
        self.couplings = couplings
        self.nu = float(nu)
        self.alpha, self.beta = lame_constants(nu)
        self.inv_ab = 1.0 / (self.alpha * self.beta)
        self.n_u, self.n_p, self.n_y = blocks.n_u, blocks.n_p, couplings.n_y
        self._K = [blocks.stiffness(k) for k in range(blocks.M + 1)]
        self._D = list(blocks.D)
        self._G = [g.tocsr() for g in couplings.G]
        self._B = blocks.B
        self._Bt = self._B.T.tocsr()
        self._C = blocks.C

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.n_u, self.n_p, self.n_y

    @property
    def shape(self) -> tuple[int, int]:
        n = 2 * (self.n_u + self.n_p) * self.n_y
        return n, n

    @property
    def dtype(self):
        return np.dtype(float)

    def split(self, v):
        """Views ``(U, Pt, P)`` of shapes (n_y, 2n_u), (n_y, n_p), (n_y, n_p).

        Rows are chaos modes; ``U[:, :n_u]`` is the x1 component.
        """
        nu2 = 2 * self.n_u * self.n_y
        npy = self.n_p * self.n_y
        u = v[:nu2].reshape(2, self.n_y, self.n_u)
        pt = v[nu2:nu2 + npy].reshape(self.n_y, self.n_p)
        p = v[nu2 + npy:].reshape(self.n_y, self.n_p)
        return u, pt, p

    def _kron_sum(self, mats, Xt):
        """``sum_k G_k kron mats[k]`` applied to X, with Xt = X^T (n_y x n)."""
        out = None
        for G, K in zip(self._G, mats):
            if K.nnz == 0:
                continue
            Z = np.ascontiguousarray((G @ Xt).T)
            Y = K @ Z
            if out is None:
                out = Y
            else:
                out += Y
        if out is None:
            out = np.zeros((Xt.shape[1], Xt.shape[0]))
        return out

    def matvec(self, v):
        v = np.asarray(v, dtype=float).ravel()
        if v.size != self.shape[0]:
            raise InvalidArgumentError(f"vector has length {v.size}, expected {self.shape[0]}")
        u, pt, p = self.split(v)
        Ut = np.concatenate([u[0], u[1]], axis=1)               # (n_y, 2n_u)
        P = np.ascontiguousarray(p.T)                            # (n_p, n_y)
        Pt_ = np.ascontiguousarray(pt.T)

        Yu = self._kron_sum(self._K, Ut)                         # (2n_u, n_y)
        Yu *= self.alpha
        Yu += self._Bt @ P
        Ypt = self._kron_sum(self._D, pt)
        Ypt -= self._C @ P
        Ypt *= self.inv_ab
        Yp = self._B @ np.ascontiguousarray(Ut.T)
        Yp -= self.inv_ab * (self._C @ Pt_)

        n_u = self.n_u
        return np.concatenate([Yu[:n_u].T.ravel(), Yu[n_u:].T.ravel(),
                               Ypt.T.ravel(), Yp.T.ravel()])

    __call__ = matvec

    def __matmul__(self, v):
        return self.matvec(v)


def build_operator(blocks: FeBlocks, couplings: StochasticCouplings, nu: float) -> KronSaddleOperator:
    return KronSaddleOperator(blocks, couplings, nu)


def apply_operator(op: KronSaddleOperator, v) -> np.ndarray:
    return op.matvec(v)


def assemble_sparse(blocks: FeBlocks, couplings: StochasticCouplings, nu: float) -> sp.csr_matrix:
    """Explicit sparse saddle-point matrix from Kronecker products.

    Built term by term from ``sum_k G_k kron K_k`` without the matrix-free
    code path; meant for small problems and cross-checks.
    """
    alpha, beta = lame_constants(nu)
    inv_ab = 1.0 / (alpha * beta)
    G = couplings.G
    I = sp.identity(couplings.n_y, format="csr")

    def ksum(mats):
        return sum(sp.kron(G[k], mats[k], format="csr") for k in range(len(mats)))

    A11, A12, A21, A22 = (ksum(blocks.A11), ksum(blocks.A12),
                          ksum(blocks.A21), ksum(blocks.A22))
    Dk = ksum(blocks.D)
    B1, B2 = sp.kron(I, blocks.B1), sp.kron(I, blocks.B2)
    C = sp.kron(I, blocks.C)
    return sp.bmat([
        [alpha * A11, alpha * A12, None, B1.T],
        [alpha * A21, alpha * A22, None, B2.T],
        [None, None, inv_ab * Dk, -inv_ab * C],
        [B1, B2, -inv_ab * C, None],
    ], format="csr")


def assemble_rhs(blocks: FeBlocks, couplings: StochasticCouplings) -> np.ndarray:
    """``[g0 kron f1; g0 kron f2; 0; 0]`` in the operator's unknown ordering."""
    ny, n_u, n_p = couplings.n_y, blocks.n_u, blocks.n_p
    b = np.zeros(2 * (n_u + n_p) * ny)
    b[:n_u] = blocks.f1
    b[n_u * ny:n_u * ny + n_u] = blocks.f2
    return b


def write_triplets(A, path) -> None:
    """Write a sparse matrix as ``rows cols nnz`` followed by ``i j value`` lines."""
    A = sp.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{i} {j} {float(v)!r}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        rows, cols, nnz = (int(t) for t in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=(rows, cols))
