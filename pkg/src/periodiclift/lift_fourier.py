"""Carleman-Fourier lifting with exponential coordinates ``exp(i alpha . x)``.

For an analytic field (nonnegative frequency support) the lifted matrix is
block upper triangular: row ``alpha`` couples to column ``alpha + gamma`` with
weight ``i alpha . g_gamma``. Fields with mixed-sign support or several
fundamental frequencies are first rewritten on an extended state so that the
same construction applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AnalyticityViolation, InvalidArgument
from .lift_carleman import LiftedSystem, graded_basis
from .multiindex import enumerate_layer
from .trigsystem import DecayCertificate, FourierSystem, MultiFreqSystem, decay_certificate


def _require_analytic(sys: FourierSystem) -> None:
    if not isinstance(sys, FourierSystem):
        raise InvalidArgument(f"expected a FourierSystem, got {type(sys).__name__}")
    if not sys.is_analytic():
        raise AnalyticityViolation("the field has Fourier support outside the nonnegative orthant")


def _dot(alpha, g) -> complex:
    # left-to-right sum so diagonal entries are reproducible bit for bit
    total = 0j
    for a, v in zip(alpha, g):
        if a:
            total += a * v
    return total


def build_B_block(sys: FourierSystem, k: int, l: int) -> np.ndarray:
    """Block coupling exponentials of order ``k`` to exponentials of order ``l``."""
    _require_analytic(sys)
    if k < 1 or l < 1:
        raise InvalidArgument(f"block orders must be positive, got ({k}, {l})")
    rows, cols = enumerate_layer(sys.d, k), enumerate_layer(sys.d, l)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    if l < k:
        return out
    col_of = {beta: c for c, beta in enumerate(cols)}
    for r, alpha in enumerate(rows):
        for gamma, g in sys.coeffs.items():
            if sum(gamma) != l - k:
                continue
            beta = tuple(a + b for a, b in zip(alpha, gamma))
            out[r, col_of[beta]] += 1j * _dot(alpha, g)
    return out


def schur_norm(block) -> float:
    """Larger of the maximal row l1 sum and the maximal column l1 sum."""
    a = np.abs(np.atleast_2d(np.asarray(block)))
    if a.size == 0:
        return 0.0
    return float(max(a.sum(axis=1).max(), a.sum(axis=0).max()))


def fourier_matrix(sys: FourierSystem, N: int) -> np.ndarray:
    """Assembled order-``N`` matrix; blocks beyond the support order stay zero."""
    _require_analytic(sys)
    if N < 1:
        raise InvalidArgument(f"truncation order must be positive, got {N}")
    basis = graded_basis(sys.d, N)
    matrix = np.zeros((len(basis), len(basis)), dtype=complex)
    terms = [(gamma, sum(gamma), g) for gamma, g in sys.coeffs.items()]
    for r, alpha in enumerate(basis):
        ka = sum(alpha)
        for gamma, kg, g in terms:
            if ka + kg > N:
                continue
            beta = tuple(a + b for a, b in zip(alpha, gamma))
            matrix[r, basis.position_of(beta)] += 1j * _dot(alpha, g)
    return matrix


def _lift(scheme: str, system: FourierSystem, embedding: np.ndarray, x0, N: int) -> LiftedSystem:
    basis = graded_basis(system.d, N)
    n = len(basis)
    lift = LiftedSystem(
        scheme=scheme,
        basis=basis,
        matrix=fourier_matrix(system, N),
        inhomogeneous=np.zeros(n, dtype=complex),
        initial=np.ones(n, dtype=complex),
        embedding=embedding,
        observable="exponential",
    )
    x0 = np.atleast_1d(np.asarray(x0, dtype=complex))
    if x0.shape != (embedding.shape[1],):
        raise InvalidArgument(f"initial state must have length {embedding.shape[1]}, got shape {x0.shape}")
    return lift.with_initial(x0)


def fourier_finite_section(sys: FourierSystem, x0, N: int) -> LiftedSystem:
    """Order-``N`` truncation with initial state ``exp(i alpha . x0)``."""
    _require_analytic(sys)
    return _lift("fourier", sys, np.eye(sys.d, dtype=complex), x0, N)


@dataclass(frozen=True, eq=False)
class ExtendedSystem:
    """Analytic field on an extended state ``embedding @ x``.

    ``kind`` is ``"two-sided"`` (state ``(w_1 x, .., w_L x, -w_1 x, .., -w_L x)``)
    or ``"positive"`` (state ``(w_1 x, .., w_L x)``). Extended coordinate
    ``m*L*d + l*d + j`` (0-based ``m, l, j``) carries ``(-1)**m w_l x_j``.
    """

    base: MultiFreqSystem
    kind: str
    system: FourierSystem
    embedding: np.ndarray

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def L(self) -> int:
        return self.base.L

    @property
    def dimension(self) -> int:
        return self.system.d

    @property
    def omegas(self) -> tuple[complex, ...]:
        return self.base.omegas

    def coordinate(self, m: int, l: int, j: int) -> int:
        """0-based extended coordinate for copy ``m``, frequency ``l`` and component ``j``."""
        return m * self.L * self.d + l * self.d + j

    def lift_initial(self, x0) -> np.ndarray:
        return self.embedding @ np.asarray(x0, dtype=complex)

    def certificate(self, R: float) -> DecayCertificate:
        return decay_certificate(self.system, R)


def _embedding(omegas, d: int, signs) -> np.ndarray:
    blocks = [s * w * np.eye(d, dtype=complex) for s in signs for w in omegas]
    return np.vstack(blocks)


def extend_two_sided(sys: MultiFreqSystem) -> ExtendedSystem:
    """Rewrite a mixed-sign multi-frequency field as an analytic field in ``2dL`` variables."""
    if not isinstance(sys, MultiFreqSystem):
        raise InvalidArgument(f"expected a MultiFreqSystem, got {type(sys).__name__}")
    d, L = sys.d, sys.L
    coeffs: dict[tuple[int, ...], np.ndarray] = {}
    for alphas, g in sys.coeffs.items():
        plus = [max(v, 0) for a in alphas for v in a]
        minus = [max(-v, 0) for a in alphas for v in a]
        gamma = tuple(plus + minus)
        vec = np.zeros(2 * d * L, dtype=complex)
        for m in range(2):
            for l, w in enumerate(sys.omegas):
                start = m * L * d + l * d
                vec[start : start + d] = (-1) ** m * w * g
        coeffs[gamma] = coeffs.get(gamma, 0) + vec
    ext = FourierSystem(2 * d * L, coeffs)
    return ExtendedSystem(sys, "two-sided", ext, _embedding(sys.omegas, d, (1, -1)))


def extend_positive(sys: MultiFreqSystem) -> ExtendedSystem:
    """Rewrite a nonnegative-support multi-frequency field as an analytic field in ``dL`` variables."""
    if not isinstance(sys, MultiFreqSystem):
        raise InvalidArgument(f"expected a MultiFreqSystem, got {type(sys).__name__}")
    if not sys.has_nonnegative_support():
        raise InvalidArgument("positive extension needs nonnegative frequency support")
    d, L = sys.d, sys.L
    coeffs = {}
    for alphas, g in sys.coeffs.items():
        beta = tuple(v for a in alphas for v in a)
        coeffs[beta] = np.concatenate([w * g for w in sys.omegas])
    ext = FourierSystem(d * L, coeffs)
    return ExtendedSystem(sys, "positive", ext, _embedding(sys.omegas, d, (1,)))


def multifreq_finite_section(ext: ExtendedSystem, x0, N: int) -> LiftedSystem:
    """Order-``N`` truncation of an extended system started at ``embedding @ x0``."""
    scheme = "multifreq" if ext.kind == "two-sided" else "positive"
    return _lift(scheme, ext.system, ext.embedding, x0, N)
