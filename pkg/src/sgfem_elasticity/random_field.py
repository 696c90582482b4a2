"""Affine Young's modulus fields and the separable exponential KL expansion.

The field has the form ``E(x, y) = e0(x) + sum_k e_k(x) y_k`` with
``y_k in [-1, 1]``.  For the test problem the modes come from the
Karhunen-Loeve expansion of ``exp(-|x1 - x1'|/Lc - |x2 - x2'|/Lc)``,
whose eigenpairs are products of analytically known 1D eigenpairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .exceptions import InadmissibleFieldError, InvalidArgumentError

BOUNDS_GRID = 201


@dataclass(frozen=True)
class KlEigenpair1D:
    """Eigenpair of the 1D exponential covariance operator on (-a, a).

    The eigenfunction is ``cos(omega t)`` (even) or ``sin(omega t)`` (odd),
    scaled to unit L2 norm and multiplied by ``sign``.
    """

    value: float
    omega: float
    even: bool
    index: int
    halfwidth: float
    norm: float
    sign: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        wave = np.cos(self.omega * t) if self.even else np.sin(self.omega * t)
        return self.sign * wave / self.norm


def kl_1d_eigenpairs(count: int, correlation_length: float = 2.0,
                     interval_halfwidth: float = 1.0) -> list[KlEigenpair1D]:
    """Largest ``count`` eigenpairs of ``exp(-|t - t'| / Lc)`` on (-a, a).

    Even roots solve ``c cos(w a) - w sin(w a) = 0`` on
    ``((k-1) pi/a, (k-1/2) pi/a)``, odd roots ``w cos(w a) + c sin(w a) = 0``
    on ``((k-1/2) pi/a, k pi/a)``, with ``c = 1/Lc``.  The eigenvalue is
    ``2c / (w^2 + c^2)``.  Both forms are the usual tangent equations
    multiplied through by ``cos(w a)``, which removes the poles from the
    brackets.
    """
    if count < 1:
        raise InvalidArgumentError(f"count must be >= 1, got {count}")
    if correlation_length <= 0 or interval_halfwidth <= 0:
        raise InvalidArgumentError("correlation length and half-width must be positive")
    c = 1.0 / correlation_length
    a = float(interval_halfwidth)

    def even_eq(w):
        return c * math.cos(w * a) - w * math.sin(w * a)

    def odd_eq(w):
        return w * math.cos(w * a) + c * math.sin(w * a)

    pairs = []
    k = 1
    while len(pairs) < count:
        # roots alternate even/odd with increasing omega, i.e. decreasing eigenvalue
        for even in (True, False):
            if len(pairs) == count:
                break
            if even:
                lo, hi, fn = (k - 1) * math.pi / a, (k - 0.5) * math.pi / a, even_eq
            else:
                lo, hi, fn = (k - 0.5) * math.pi / a, k * math.pi / a, odd_eq
            flo, fhi = fn(lo), fn(hi)
            if flo * fhi > 0:
                raise RuntimeError(f"root bracketing failed on ({lo}, {hi})")
            w = brentq(fn, lo, hi, xtol=1e-15, rtol=1e-12, maxiter=500)
            s = math.sin(2 * w * a) / (2 * w)
            norm = math.sqrt(a + s) if even else math.sqrt(a - s)
            pairs.append(KlEigenpair1D(2 * c / (w * w + c * c), w, even,
                                       len(pairs) + 1, a, norm))
        k += 1
    return pairs


@dataclass(frozen=True)
class KlEigenpair:
    """2D eigenpair formed as a product of two 1D eigenpairs."""

    value: float
    first: KlEigenpair1D
    second: KlEigenpair1D
    sign: float = 1.0

    @property
    def index_pair(self) -> tuple[int, int]:
        return (self.first.index, self.second.index)

    def __call__(self, x1, x2):
        return self.sign * self.first(x1) * self.second(x2)


def kl_2d_eigenpairs(M: int, correlation_length: float = 2.0,
                     halfwidth: float = 1.0) -> list[KlEigenpair]:
    """The ``M`` largest product eigenpairs, sorted by value then index pair.

    Each mode's sign is chosen so that it is non-negative at the first
    point (x1 fastest, starting at (-1, -1)) of the 201 x 201 sampling grid
    where its magnitude exceeds 1e-8.
    """
    one_d = kl_1d_eigenpairs(M, correlation_length, halfwidth)
    prods = [(-(pi.value * pj.value), pi.index, pj.index, pi, pj)
             for pi in one_d for pj in one_d]
    prods.sort(key=lambda r: r[:3])
    t = np.linspace(-halfwidth, halfwidth, BOUNDS_GRID)
    X1, X2 = np.meshgrid(t, t)
    out = []
    for negval, _, _, pi, pj in prods[:M]:
        vals = (pi(X1) * pj(X2)).ravel()
        first = vals[np.flatnonzero(np.abs(vals) > 1e-8)[0]]
        out.append(KlEigenpair(-negval, pi, pj, 1.0 if first >= 0 else -1.0))
    return out


def _as_callable(f):
    if callable(f):
        return f
    value = float(f)
    return lambda x1, x2: np.full(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, value)


@dataclass(frozen=True)
class RandomFieldExpansion:
    """Affine field ``E(x, y) = e0(x) + sum_k e_k(x) y_k``.

    ``mean`` and each entry of ``modes`` are callables ``f(x1, x2)`` that
    accept broadcastable arrays (a float mean is accepted too).
    """

    mean: Callable = 1.0
    modes: Sequence[Callable] = ()
    sigma: float = 0.0
    eigenpairs: Sequence[KlEigenpair] = field(default=(), repr=False)
    constant_mean: float | None = None

    def __post_init__(self):
        if not callable(self.mean):
            object.__setattr__(self, "constant_mean", float(self.mean))
        object.__setattr__(self, "mean", _as_callable(self.mean))
        object.__setattr__(self, "modes", tuple(_as_callable(m) for m in self.modes))

    @property
    def M(self) -> int:
        return len(self.modes)

    def mean_values(self, x1, x2):
        return np.asarray(self.mean(x1, x2), dtype=float)

    def mode_values(self, x1, x2):
        """Stack of mode values, shape ``(M,) + broadcast shape``."""
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        if not self.modes:
            return np.zeros((0,) + shape)
        return np.stack([np.broadcast_to(m(x1, x2), shape) for m in self.modes])

    def coefficient_values(self, x1, x2):
        """Values of e_0, e_1, ..., e_M, shape ``(M+1,) + broadcast shape``."""
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        e0 = np.broadcast_to(self.mean_values(x1, x2), shape)
        return np.concatenate([e0[None], self.mode_values(x1, x2)])

    def at(self, y) -> "RandomFieldExpansion":
        """Deterministic field ``x -> E(x, y)`` with no modes."""
        y = check_parameter_point(y, self.M)
        return RandomFieldExpansion(lambda x1, x2: evaluate_field(self, (x1, x2), y))


def kl_2d_modes(M: int, sigma: float, correlation_length: float = 2.0) -> RandomFieldExpansion:
    """KL field ``1 + sigma sqrt(3) sum_m sqrt(lambda_m) phi_m(x) y_m``."""
    if M < 0:
        raise InvalidArgumentError(f"M must be >= 0, got {M}")
    if sigma < 0:
        raise InvalidArgumentError(f"sigma must be non-negative, got {sigma}")
    pairs = kl_2d_eigenpairs(M, correlation_length) if M > 0 else []
    modes = [_ScaledMode(sigma * math.sqrt(3.0) * math.sqrt(p.value), p) for p in pairs]
    return RandomFieldExpansion(1.0, modes, sigma, tuple(pairs))


@dataclass(frozen=True)
class _ScaledMode:
    scale: float
    pair: KlEigenpair

    def __call__(self, x1, x2):
        return self.scale * self.pair(x1, x2)


def check_parameter_point(y, M: int) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape[-1] != M:
        raise InvalidArgumentError(f"parameter vector has length {y.shape[-1]}, field has M = {M}")
    if np.any(np.abs(y) > 1.0 + 1e-14):
        raise InvalidArgumentError("parameters must lie in [-1, 1]")
    return y


def evaluate_field(field_: RandomFieldExpansion, x, y):
    """``E(x, y)`` for a point (or arrays of points) ``x = (x1, x2)``."""
    y = check_parameter_point(y, field_.M)
    x1, x2 = np.asarray(x[0], float), np.asarray(x[1], float)
    vals = field_.mean_values(x1, x2)
    if field_.M:
        vals = vals + np.tensordot(y, field_.mode_values(x1, x2), axes=(0, 0))
    return vals


@dataclass(frozen=True)
class FieldBounds:
    E_min: float
    E_max: float
    e0_min: float
    e0_max: float
    ratio: float

    def __iter__(self):
        return iter((self.E_min, self.E_max, self.e0_min, self.e0_max))


def field_bounds(field_: RandomFieldExpansion, grid: int = BOUNDS_GRID,
                 check: bool = True) -> FieldBounds:
    """Extremes of E over D x Gamma from a ``grid x grid`` sampling of D.

    ``ratio`` is ``sum_k max|e_k| / min e0``; the field is admissible when it
    is below one.  Raises :class:`InadmissibleFieldError` if ``E_min <= 0``
    and ``check`` is set.
    """
    t = np.linspace(-1.0, 1.0, grid)
    X1, X2 = np.meshgrid(t, t)
    e0 = np.broadcast_to(field_.mean_values(X1, X2), X1.shape)
    modes = np.abs(field_.mode_values(X1, X2))
    spread = modes.sum(axis=0)
    e0_min, e0_max = float(e0.min()), float(e0.max())
    E_min = float((e0 - spread).min())
    E_max = float((e0 + spread).max())
    ratio = float(modes.reshape(field_.M, -1).max(axis=1).sum() / e0_min) if field_.M else 0.0
    if check and E_min <= 0:
        raise InadmissibleFieldError(
            f"Young's modulus is not bounded away from zero (E_min = {E_min:.4g}); "
            "the field violates the positivity assumption on E")
    return FieldBounds(E_min, E_max, e0_min, e0_max, ratio)
