"""Block-diagonal preconditioners, preconditioned MINRES and Ritz estimates."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import FeBlocks, KronSaddleOperator, lame_constants
from .exceptions import InsufficientDataError, InvalidArgumentError, NotSPDError
from .stochastic_basis import StochasticCouplings


class Variant(str, Enum):
    """Approximation of the displacement block used by the preconditioner.

    MEAN_BASED_FULL keeps the coupled 2x2 mean stiffness matrix.
    LAPLACIAN_DIAG uses ``2 (A11^0 + A22^0) / 3`` for both components.
    COMPONENT_DIAG uses ``A11^0`` and ``A22^0`` separately.
    """

    MEAN_BASED_FULL = "mean-full"
    LAPLACIAN_DIAG = "laplacian"
    COMPONENT_DIAG = "component"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"meanbasedfull": cls.MEAN_BASED_FULL, "mean-based-full": cls.MEAN_BASED_FULL,
                   "laplaciandiag": cls.LAPLACIAN_DIAG, "laplacian-diag": cls.LAPLACIAN_DIAG,
                   "componentdiag": cls.COMPONENT_DIAG, "component-diag": cls.COMPONENT_DIAG}
        for v in cls:
            if key == v.value:
                return v
        if key.replace("-", "") in aliases:
            return aliases[key.replace("-", "")]
        if key in aliases:
            return aliases[key]
        raise InvalidArgumentError(f"unknown preconditioner variant {value!r}")


class SpdFactor:
    """Direct solver for a sparse SPD matrix.

    Diagonal matrices are inverted entrywise.  Otherwise a sparse LU with a
    symmetric fill-reducing ordering and diagonal pivots is used; positive
    pivots certify positive definiteness.
    """

    def __init__(self, A, name: str = "block"):
        A = sp.csc_matrix(A)
        self.n = A.shape[0]
        self.name = name
        off = A - sp.diags(A.diagonal())
        if off.count_nonzero() == 0:
            self._diag = A.diagonal().copy()
            if np.any(self._diag <= 0):
                raise NotSPDError(f"{name} has non-positive diagonal entries")
            self._lu = None
            return
        self._diag = None
        try:
            self._lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                 options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise NotSPDError(f"factorization of {name} failed: {exc}") from exc
        if np.any(self._lu.U.diagonal() <= 0):
            raise NotSPDError(f"{name} is not symmetric positive definite")

    def solve(self, R):
        """Solve for one or several right-hand sides (columns of ``R``)."""
        if self._lu is None:
            R = np.asarray(R)
            return R / (self._diag if R.ndim == 1 else self._diag[:, None])
        return self._lu.solve(np.asarray(R))


class BlockPreconditioner:
    """Block-diagonal preconditioner for the saddle-point operator.

    Displacement block ``alpha I kron A_hat`` (``A_hat`` per variant),
    auxiliary pressure block ``(alpha beta)^-1 I kron D_0`` and Schur block
    ``P_S = (1/alpha + 1/(alpha beta)) s I kron C`` with ``s = 1/e0`` when a
    constant mean is supplied and ``s = 1`` otherwise.
    """

    def __init__(self, blocks: FeBlocks, couplings: StochasticCouplings, nu: float,
                 variant=Variant.LAPLACIAN_DIAG, constant_e0: float | None = None):
        self.variant = Variant.parse(variant)
        self.alpha, self.beta = lame_constants(nu)
        self.nu = float(nu)
        self.n_u, self.n_p, self.n_y = blocks.n_u, blocks.n_p, couplings.n_y
        self.constant_e0 = constant_e0
        A11, A22 = blocks.A11[0], blocks.A22[0]
        if self.variant is Variant.LAPLACIAN_DIAG:
            self.A_hat = ((2.0 / 3.0) * (A11 + A22)).tocsr()
            self._disp = [SpdFactor(self.A_hat, "displacement block")]
        elif self.variant is Variant.COMPONENT_DIAG:
            self.A_hat = (A11, A22)
            self._disp = [SpdFactor(A11, "A11 mean block"), SpdFactor(A22, "A22 mean block")]
        else:
            self.A_hat = blocks.stiffness(0)
            self._disp = [SpdFactor(self.A_hat, "mean stiffness block")]
        self.D0 = blocks.D[0]
        self._d0 = SpdFactor(self.D0, "D0")
        self.C = blocks.C
        self._c = SpdFactor(self.C, "pressure mass matrix")
        s = 1.0 / constant_e0 if constant_e0 is not None else 1.0
        self.schur_scale = (1.0 / self.alpha + 1.0 / (self.alpha * self.beta)) * s

    @property
    def shape(self):
        n = 2 * (self.n_u + self.n_p) * self.n_y
        return n, n

    def apply(self, r):
        r = np.asarray(r, dtype=float).ravel()
        if r.size != self.shape[0]:
            raise InvalidArgumentError(f"vector has length {r.size}, expected {self.shape[0]}")
        n_u, n_p, n_y = self.n_u, self.n_p, self.n_y
        nu2 = 2 * n_u * n_y
        npy = n_p * n_y
        z = np.empty_like(r)

        ru = r[:nu2]
        if self.variant is Variant.LAPLACIAN_DIAG:
            Z = self._disp[0].solve(ru.reshape(2 * n_y, n_u).T)
            z[:nu2] = Z.T.ravel()
        elif self.variant is Variant.COMPONENT_DIAG:
            half = n_u * n_y
            for c, fac in enumerate(self._disp):
                Z = fac.solve(ru[c * half:(c + 1) * half].reshape(n_y, n_u).T)
                z[c * half:(c + 1) * half] = Z.T.ravel()
        else:
            R = ru.reshape(2, n_y, n_u).transpose(0, 2, 1).reshape(2 * n_u, n_y)
            Z = self._disp[0].solve(R)
            z[:nu2] = Z.reshape(2, n_u, n_y).transpose(0, 2, 1).ravel()
        z[:nu2] /= self.alpha

        Z = self._d0.solve(r[nu2:nu2 + npy].reshape(n_y, n_p).T)
        z[nu2:nu2 + npy] = (self.alpha * self.beta) * Z.T.ravel()
        Z = self._c.solve(r[nu2 + npy:].reshape(n_y, n_p).T)
        z[nu2 + npy:] = Z.T.ravel() / self.schur_scale
        return z

    __call__ = apply

    def matrix(self) -> sp.csr_matrix:
        """The preconditioner itself as a sparse matrix (small problems only)."""
        I = sp.identity(self.n_y, format="csr")
        if self.variant is Variant.LAPLACIAN_DIAG:
            disp = sp.block_diag([sp.kron(I, self.A_hat), sp.kron(I, self.A_hat)])
        elif self.variant is Variant.COMPONENT_DIAG:
            disp = sp.block_diag([sp.kron(I, self.A_hat[0]), sp.kron(I, self.A_hat[1])])
        else:
            n_u = self.n_u
            K = self.A_hat
            disp = sp.bmat([[sp.kron(I, K[:n_u, :n_u]), sp.kron(I, K[:n_u, n_u:])],
                            [sp.kron(I, K[n_u:, :n_u]), sp.kron(I, K[n_u:, n_u:])]])
        return sp.block_diag([self.alpha * disp,
                              sp.kron(I, self.D0) / (self.alpha * self.beta),
                              self.schur_scale * sp.kron(I, self.C)], format="csr")


class IdentityPreconditioner:
    """Stand-in preconditioner returning its input."""

    def __init__(self, n: int):
        self.shape = (n, n)

    def apply(self, r):
        return np.array(r, dtype=float, copy=True).ravel()

    __call__ = apply


def build_preconditioner(blocks, couplings, nu, variant=Variant.LAPLACIAN_DIAG,
                         constant_e0=None) -> BlockPreconditioner:
    return BlockPreconditioner(blocks, couplings, nu, variant, constant_e0)


def apply_preconditioner(P, r):
    return P.apply(r)


@dataclass
class MinresResult:
    solution: np.ndarray = field(repr=False)
    iterations: int
    residual_history: list = field(repr=False)
    converged: bool
    wall_time: float
    alphas: np.ndarray = field(repr=False)
    betas: np.ndarray = field(repr=False)
    breakdown: bool = False
    lanczos_vectors: list | None = field(default=None, repr=False)
    ritz_intervals: tuple | None = None

    @property
    def relative_residual(self) -> float:
        return self.residual_history[-1] / self.residual_history[0]


def _as_apply(obj):
    if obj is None:
        return None
    if hasattr(obj, "matvec"):
        return obj.matvec
    if hasattr(obj, "apply"):
        return obj.apply
    if sp.issparse(obj) or isinstance(obj, np.ndarray):
        return lambda v: obj @ v
    return obj


def minres_solve(op, P, rhs, tol: float = 1e-6, maxit: int = 1000,
                 record_vectors: int = 0, spectrum: bool = True) -> MinresResult:
    """Preconditioned MINRES with x0 = 0.

    Stops when the P^-1 norm of the residual falls below ``tol`` times its
    initial value.  The Lanczos coefficients of the preconditioned operator
    are kept in ``alphas`` (diagonal) and ``betas`` (``betas[0]`` is the
    initial residual norm, ``betas[j]`` the subdiagonal after step j).
    ``record_vectors`` keeps the first that many Lanczos vectors (tests).
    """
    if tol <= 0 or maxit < 1:
        raise InvalidArgumentError("need tol > 0 and maxit >= 1")
    A = _as_apply(op)
    M = _as_apply(P) or (lambda v: v.copy())
    t0 = time.perf_counter()
    b = np.asarray(rhs, dtype=float).ravel()
    n = b.size
    x = np.zeros(n)
    eps = np.finfo(float).eps

    r1 = b.copy()
    y = M(r1)
    beta1 = float(r1 @ y)
    if beta1 < 0:
        raise NotSPDError("preconditioner is indefinite")
    beta1 = math.sqrt(beta1)
    alphas, betas = [], [beta1]
    history = [beta1]
    vectors = [] if record_vectors else None
    if beta1 == 0:
        return MinresResult(x, 0, history, True, time.perf_counter() - t0,
                            np.array(alphas), np.array(betas))

    r2 = r1.copy()
    w = np.zeros(n)
    w1 = np.zeros(n)
    w2 = np.zeros(n)
    oldb, beta = 0.0, beta1
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    converged = breakdown = False
    itn = 0
    while itn < maxit:
        itn += 1
        v = y / beta
        if vectors is not None and len(vectors) < record_vectors:
            vectors.append(r2 / beta)
        y = A(v)
        if itn >= 2:
            y -= (beta / oldb) * r1
        alfa = float(v @ y)
        y -= (alfa / beta) * r2
        r1, r2 = r2, y
        y = M(r2)
        oldb = beta
        beta2 = float(r2 @ y)
        if beta2 < 0:
            raise NotSPDError("preconditioner is indefinite")
        beta = math.sqrt(beta2)
        alphas.append(alfa)
        betas.append(beta)

        oldeps = epsln
        delta = cs * dbar + sn * alfa
        gbar = sn * dbar - cs * alfa
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(math.hypot(gbar, beta), eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar

        w1, w2, w = w2, w, w1
        # w_new = (v - oldeps*w1 - delta*w2) / gamma, reusing the oldest buffer
        np.multiply(w1, -oldeps, out=w)
        w += v
        w -= delta * w2
        w /= gamma
        x += phi * w
        history.append(abs(phibar))

        if abs(phibar) <= tol * beta1:
            converged = True
            break
        if beta <= eps * beta1:
            converged = breakdown = True
            break
    res = MinresResult(x, itn, history, converged, time.perf_counter() - t0,
                       np.array(alphas), np.array(betas), breakdown, vectors)
    if spectrum and itn >= 2:
        res.ritz_intervals = spectrum_intervals(res.alphas, res.betas)
    return res


def lanczos_tridiagonal(alphas, betas, k: int | None = None):
    """``(T_k, beta_{k+1})`` from recorded Lanczos coefficients."""
    alphas = np.asarray(alphas, float)
    betas = np.asarray(betas, float)
    k = alphas.size if k is None else k
    T = np.diag(alphas[:k]) + np.diag(betas[1:k], 1) + np.diag(betas[1:k], -1)
    return T, float(betas[k])


def ritz_values(alphas, betas, k=None):
    T, _ = lanczos_tridiagonal(alphas, betas, k)
    return la.eigvalsh(T)


def harmonic_ritz_values(alphas, betas, k=None, floor: float = 1e-10):
    """Harmonic Ritz values theta with ``That^T That z = theta T_k z``.

    ``That`` is the (k+1) x k Lanczos matrix.  The symmetric-definite pencil
    ``(T_k, That^T That)`` is solved instead, giving ``1/theta``; values
    with ``|theta| < floor`` are dropped.
    """
    T, b_next = lanczos_tridiagonal(alphas, betas, k)
    k = T.shape[0]
    H = T @ T
    H[k - 1, k - 1] += b_next * b_next
    inv = la.eigh(T, H, eigvals_only=True)
    inv = inv[inv != 0]
    theta = np.sort(1.0 / inv)
    return theta[np.abs(theta) >= floor]


def ritz_intervals(values):
    """``((neg_lo, neg_hi), (pos_lo, pos_hi))`` spanned by the given values."""
    values = np.asarray(values, float)
    neg, pos = values[values < 0], values[values > 0]
    ni = (float(neg.min()), float(neg.max())) if neg.size else (math.nan, math.nan)
    pi = (float(pos.min()), float(pos.max())) if pos.size else (math.nan, math.nan)
    return ni, pi


def spectrum_intervals(alphas, betas, k=None, outer: str = "ritz"):
    """Negative and positive eigenvalue intervals from Lanczos data.

    Inner endpoints (closest to zero) come from harmonic Ritz values, which
    never enter the eigenvalue-free gap around zero.  With ``outer="ritz"``
    the outer endpoints come from ordinary Ritz values, which never leave
    the spectral hull; harmonic values occasionally produce transient
    outliers there when ``T_k`` is nearly singular.  ``outer="harmonic"``
    takes all four endpoints from harmonic Ritz values.
    """
    (nlo, nhi), (plo, phi) = ritz_intervals(harmonic_ritz_values(alphas, betas, k))
    if outer == "harmonic":
        return (nlo, nhi), (plo, phi)
    if outer != "ritz":
        raise InvalidArgumentError(f"outer must be 'ritz' or 'harmonic', got {outer!r}")
    (rlo, _), (_, rhi) = ritz_intervals(ritz_values(alphas, betas, k))
    if not math.isnan(rlo) and not math.isnan(nhi):
        nlo = min(rlo, nhi)
    if not math.isnan(rhi) and not math.isnan(plo):
        phi = max(rhi, plo)
    return (nlo, nhi), (plo, phi)


def estimate_spectrum(result: MinresResult, min_iterations: int = 5, outer: str = "ritz"):
    """Negative and positive spectral intervals, see :func:`spectrum_intervals`."""
    if len(result.alphas) < min_iterations:
        raise InsufficientDataError(
            f"need at least {min_iterations} Lanczos steps, have {len(result.alphas)}")
    return spectrum_intervals(result.alphas, result.betas, outer=outer)
