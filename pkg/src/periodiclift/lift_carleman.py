"""Carleman lifting with monomial coordinates ``x**alpha``.

The Taylor coefficients of a trigonometric polynomial about the origin are
exact finite sums over its Fourier support,

    f_beta = i**|beta| / beta! * sum_alpha g_alpha * alpha**beta,

and the lifted matrix couples monomial ``alpha`` to monomial ``beta`` through
``sum_j alpha_j f_{j, beta - alpha + e_j}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from math import factorial, prod

import numpy as np

from .errors import InvalidArgument, OrderOverflow
from .multiindex import GradedBasis, enumerate_layer, indices_up_to
from .trigsystem import FourierSystem, MaclaurinTable, MultiFreqSystem

SCHEMES = ("carleman", "fourier", "multifreq", "positive")


@lru_cache(maxsize=64)
def graded_basis(d: int, N: int) -> GradedBasis:
    """Cached :class:`GradedBasis`; bases are immutable so sharing is safe."""
    return GradedBasis(d, N)


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    """Truncated lifted linear system ``y' = matrix @ y + inhomogeneous``.

    ``embedding`` maps an original state ``x`` to the state whose monomials or
    exponentials are lifted (identity except for the extended schemes).
    ``observable`` is ``"monomial"`` for Carleman and ``"exponential"`` otherwise.
    """

    scheme: str
    basis: GradedBasis
    matrix: np.ndarray
    inhomogeneous: np.ndarray
    initial: np.ndarray
    embedding: np.ndarray
    observable: str
    _exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}")
        n = len(self.basis)
        if self.matrix.shape != (n, n) or self.inhomogeneous.shape != (n,) or self.initial.shape != (n,):
            raise InvalidArgument("lifted system arrays do not match the basis size")
        object.__setattr__(self, "_exponents", self.basis.as_array())

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def block_index(self) -> dict[tuple[int, int], tuple[slice, slice]]:
        sl = [self.basis.layer_slice(k) for k in range(1, self.N + 1)]
        return {(k + 1, l + 1): (sl[k], sl[l]) for k in range(self.N) for l in range(self.N)}

    def block(self, k: int, l: int) -> np.ndarray:
        return self.matrix[self.basis.layer_slice(k), self.basis.layer_slice(l)]

    def lift_state(self, x) -> np.ndarray:
        """Lifted coordinates of an original state ``x`` over the basis."""
        z = self.embedding @ np.asarray(x, dtype=complex)
        if self.observable == "exponential":
            return np.exp(1j * (self._exponents @ z))
        return np.prod(z[None, :] ** self._exponents, axis=1)

    def with_initial(self, x0) -> "LiftedSystem":
        """Same matrix, lifted initial state recomputed from ``x0``."""
        return replace(self, initial=self.lift_state(x0))


def maclaurin_from_fourier(sys: FourierSystem | MultiFreqSystem, max_order: int) -> MaclaurinTable:
    """Exact Taylor coefficients about the origin up to ``max_order``."""
    if isinstance(sys, MultiFreqSystem):
        sys = sys.to_fourier()
    if max_order < 0:
        raise InvalidArgument(f"max_order must be nonnegative, got {max_order}")
    freqs = sys.freqs.astype(float)
    f = {}
    for beta in indices_up_to(sys.d, max_order):
        weights = np.prod(freqs ** np.array(beta, dtype=float), axis=1)
        scale = 1j ** sum(beta) / prod(factorial(b) for b in beta)
        f[beta] = scale * (sys.matrix.T @ weights)
    return MaclaurinTable(sys.d, max_order, f, tail_bound=0.0)


def build_A_block(table: MaclaurinTable, k: int, l: int) -> np.ndarray:
    """Block coupling monomials of order ``k`` to monomials of order ``l``."""
    if k < 1 or l < 1:
        raise InvalidArgument(f"block orders must be positive, got ({k}, {l})")
    rows, cols = enumerate_layer(table.d, k), enumerate_layer(table.d, l)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    shift = l - k + 1
    if shift < 0:
        return out
    if shift > table.max_order:
        raise OrderOverflow(f"block ({k}, {l}) needs Taylor order {shift} > {table.max_order}")
    for r, alpha in enumerate(rows):
        for c, beta in enumerate(cols):
            total = 0j
            for j in range(table.d):
                if alpha[j] == 0:
                    continue
                gamma = tuple(b - a + (i == j) for i, (a, b) in enumerate(zip(alpha, beta)))
                if min(gamma) >= 0:
                    total += alpha[j] * table.f[gamma][j]
            out[r, c] = total
    return out


def carleman_matrix(table: MaclaurinTable, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated matrix and inhomogeneous term for orders ``1..N``."""
    if N < 1:
        raise InvalidArgument(f"truncation order must be positive, got {N}")
    if table.max_order < N:
        raise OrderOverflow(f"order-{N} truncation needs Taylor order {N} > {table.max_order}")
    d = table.d
    basis = graded_basis(d, N)
    n = len(basis)
    matrix = np.zeros((n, n), dtype=complex)
    inhom = np.zeros(n, dtype=complex)
    terms = [(g, sum(g), v) for g, v in table.f.items() if sum(g) <= N and np.any(v != 0)]
    for r, alpha in enumerate(basis):
        ka = sum(alpha)
        for j in range(d):
            if alpha[j] == 0:
                continue
            lowered = list(alpha)
            lowered[j] -= 1
            for gamma, kg, fvec in terms:
                if ka - 1 + kg > N or fvec[j] == 0:
                    continue
                beta = tuple(a + g for a, g in zip(lowered, gamma))
                coef = alpha[j] * fvec[j]
                if ka - 1 + kg == 0:
                    inhom[r] += coef
                else:
                    matrix[r, basis.position_of(beta)] += coef
    return matrix, inhom


def carleman_finite_section(
    sys: FourierSystem | MultiFreqSystem | MaclaurinTable, x0, N: int, max_order: int | None = None
) -> LiftedSystem:
    """Order-``N`` Carleman truncation with initial monomials ``x0**alpha``.

    ``sys`` may be a Fourier field or an already computed Maclaurin table.
    The Taylor table defaults to order ``N`` plus the largest Fourier order.
    """
    if N < 1:
        raise InvalidArgument(f"truncation order must be positive, got {N}")
    if isinstance(sys, MaclaurinTable):
        table = sys
    else:
        fourier = sys.to_fourier() if isinstance(sys, MultiFreqSystem) else sys
        table = maclaurin_from_fourier(fourier, max_order if max_order is not None else N + fourier.max_order())
    matrix, inhom = carleman_matrix(table, N)
    basis = graded_basis(table.d, N)
    lift = LiftedSystem(
        scheme="carleman",
        basis=basis,
        matrix=matrix,
        inhomogeneous=inhom,
        initial=np.zeros(len(basis), dtype=complex),
        embedding=np.eye(table.d, dtype=complex),
        observable="monomial",
    )
    x0 = np.atleast_1d(np.asarray(x0, dtype=complex))
    if x0.shape != (table.d,):
        raise InvalidArgument(f"initial state must have length {table.d}, got shape {x0.shape}")
    return lift.with_initial(x0)
