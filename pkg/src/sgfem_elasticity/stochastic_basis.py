"""Total-degree Legendre chaos and the stochastic coupling matrices G_k."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .exceptions import InvalidArgumentError


@dataclass(frozen=True)
class MultiIndexSet:
    """All multi-indices in N_0^M with total degree at most p.

    Ordered by degree, and within a degree in descending lexicographic
    order, so the zero index comes first and ``e_1`` precedes ``e_2``.
    """

    M: int
    p: int
    indices: np.ndarray = field(repr=False)

    def __len__(self):
        return self.indices.shape[0]

    @property
    def n_y(self) -> int:
        return self.indices.shape[0]

    def position(self) -> dict:
        return {tuple(a): i for i, a in enumerate(self.indices.tolist())}


def _compositions(total: int, parts: int):
    """Tuples of ``parts`` non-negative ints summing to ``total``, descending lex."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def build_multi_index_set(M: int, p: int) -> MultiIndexSet:
    if M < 0 or p < 0:
        raise InvalidArgumentError(f"need M >= 0 and p >= 0, got M={M}, p={p}")
    if M == 0:
        return MultiIndexSet(0, p, np.zeros((1, 0), dtype=np.int64))
    rows = [a for d in range(p + 1) for a in _compositions(d, M)]
    return MultiIndexSet(M, p, np.array(rows, dtype=np.int64))


def n_y(M: int, p: int) -> int:
    """Dimension of the total-degree space, (M+p)! / (M! p!)."""
    return math.comb(M + p, p)


def legendre_recurrence_coefficient(n: int) -> float:
    """``c_n = n / sqrt((2n-1)(2n+1))``.

    With psi_n the Legendre polynomials orthonormal for dy/2 on [-1, 1],
    ``y psi_{n-1} = c_n psi_n + c_{n-1} psi_{n-2}``.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    return n / math.sqrt((2 * n - 1) * (2 * n + 1))


@dataclass(frozen=True)
class StochasticCouplings:
    """``G[0] = I`` and ``G[k][a, b] = E[y_k psi_a psi_b]`` for k = 1..M."""

    index_set: MultiIndexSet
    G: tuple = field(repr=False)

    @property
    def n_y(self) -> int:
        return self.index_set.n_y

    @property
    def M(self) -> int:
        return self.index_set.M

    @property
    def g0(self) -> np.ndarray:
        e = np.zeros(self.n_y)
        e[0] = 1.0
        return e


def build_couplings(index_set: MultiIndexSet) -> StochasticCouplings:
    """Assemble G_0..G_M from the Legendre three-term recurrence."""
    ny = index_set.n_y
    pos = index_set.position()
    G = [sp.identity(ny, format="csr")]
    for k in range(index_set.M):
        rows, cols, vals = [], [], []
        for i, a in enumerate(index_set.indices.tolist()):
            b = list(a)
            b[k] += 1
            j = pos.get(tuple(b))
            if j is not None:
                c = legendre_recurrence_coefficient(b[k])
                rows += [i, j]
                cols += [j, i]
                vals += [c, c]
        G.append(sp.csr_matrix((vals, (rows, cols)), shape=(ny, ny)))
    return StochasticCouplings(index_set, tuple(G))


def legendre_orthonormal(n_max: int, y):
    """Values of psi_0..psi_{n_max} at ``y``; shape ``(n_max+1,) + y.shape``."""
    y = np.asarray(y, dtype=float)
    out = np.empty((n_max + 1,) + y.shape)
    out[0] = 1.0
    if n_max >= 1:
        out[1] = math.sqrt(3.0) * y
    for n in range(2, n_max + 1):
        c_n = legendre_recurrence_coefficient(n)
        c_prev = legendre_recurrence_coefficient(n - 1)
        out[n] = (y * out[n - 1] - c_prev * out[n - 2]) / c_n
    return out


def evaluate_chaos(index_set: MultiIndexSet, y):
    """Chaos basis values psi_alpha(y).

    ``y`` is a single point of length M (returns shape ``(n_y,)``) or an
    array of points of shape ``(S, M)`` (returns ``(S, n_y)``).
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != index_set.M:
        raise InvalidArgumentError(
            f"parameter points have length {y.shape[1]}, index set has M = {index_set.M}")
    vals = legendre_orthonormal(index_set.p, y)          # (p+1, S, M)
    out = np.ones((y.shape[0], index_set.n_y))
    for k in range(index_set.M):
        out *= vals[index_set.indices[:, k], :, k].T
    return out[0] if single else out
