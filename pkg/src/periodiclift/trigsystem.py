"""Periodic vector fields stored by their Fourier coefficients.

A :class:`FourierSystem` is the trigonometric polynomial

    g(x) = sum_alpha g_alpha * exp(i alpha . x)

with integer frequency tuples ``alpha`` (entries of either sign) and complex
coefficient vectors ``g_alpha`` of length ``d``. A :class:`MultiFreqSystem`
adds complex fundamental frequencies ``omega_1..omega_L`` so that each term
reads ``exp(i sum_l omega_l alpha_l . x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateSystem, InvalidArgument
from .multiindex import indices_up_to

Frequency = tuple[int, ...]


def _as_vector(value, d: int, what: str) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(value, dtype=complex))
    if vec.shape != (d,):
        raise InvalidArgument(f"{what} must have length {d}, got shape {vec.shape}")
    return vec


def _same_coeffs(a: Mapping, b: Mapping) -> bool:
    return a.keys() == b.keys() and all(np.array_equal(v, b[k]) for k, v in a.items())


def _as_frequency(alpha, d: int) -> Frequency:
    key = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(key) != d or any(k != a for k, a in zip(key, np.atleast_1d(alpha))):
        raise InvalidArgument(f"frequency {alpha!r} is not an integer tuple of length {d}")
    return key


@dataclass(frozen=True, eq=False)
class FourierSystem:
    """Trigonometric-polynomial vector field on ``C^d``.

    Coefficient vectors that are exactly zero are dropped on construction.
    """

    d: int
    coeffs: Mapping[Frequency, np.ndarray]
    freqs: np.ndarray = field(init=False, repr=False, compare=False)
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument(f"dimension must be positive, got {self.d}")
        clean: dict[Frequency, np.ndarray] = {}
        for alpha, g in self.coeffs.items():
            key = _as_frequency(alpha, self.d)
            vec = _as_vector(g, self.d, f"coefficient at {key}")
            if np.any(vec != 0):
                vec = clean.get(key, 0) + vec
                vec.setflags(write=False)
                clean[key] = vec
        keys = sorted(clean, key=lambda a: (sum(map(abs, a)), tuple(-v for v in a)))
        clean = {k: clean[k] for k in keys}
        freqs = np.array(keys, dtype=np.int64).reshape(len(keys), self.d)
        matrix = np.array([clean[k] for k in keys], dtype=complex).reshape(len(keys), self.d)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "matrix", matrix)

    def __eq__(self, other):
        if not isinstance(other, FourierSystem) or other.d != self.d:
            return NotImplemented
        return _same_coeffs(self.coeffs, other.coeffs)

    def is_analytic(self) -> bool:
        """True when every supported frequency has only nonnegative entries."""
        return bool(np.all(self.freqs >= 0))

    def constant_term(self) -> np.ndarray:
        return self.coeffs.get((0,) * self.d, np.zeros(self.d, dtype=complex))

    def max_order(self) -> int:
        """Largest ``sum |alpha_j|`` over the support (0 for an empty field)."""
        return int(np.abs(self.freqs).sum(axis=1).max(initial=0))

    def order_sums(self) -> dict[int, float]:
        """``S_k``: sum of the l1 norms of all coefficients whose frequency has order k."""
        sums: dict[int, float] = {}
        for alpha, g in self.coeffs.items():
            k = sum(map(abs, alpha))
            sums[k] = sums.get(k, 0.0) + float(np.abs(g).sum())
        return dict(sorted(sums.items()))

    def __call__(self, x) -> np.ndarray:
        return eval_field(self, x)


@dataclass(frozen=True, eq=False)
class MultiFreqSystem:
    """Vector field with fundamental frequencies ``omegas``.

    ``coeffs`` maps an ``L``-tuple of integer frequency tuples (one per
    fundamental frequency) to a coefficient vector of length ``d``.
    """

    d: int
    omegas: tuple[complex, ...]
    coeffs: Mapping[tuple[Frequency, ...], np.ndarray]
    phases: np.ndarray = field(init=False, repr=False)
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        omegas = tuple(complex(w) for w in self.omegas)
        if not omegas:
            raise InvalidArgument("at least one fundamental frequency is required")
        if any(w == 0 for w in omegas):
            raise InvalidArgument("fundamental frequencies must be nonzero")
        L = len(omegas)
        clean: dict[tuple[Frequency, ...], np.ndarray] = {}
        for alphas, g in self.coeffs.items():
            if len(alphas) != L:
                raise InvalidArgument(f"expected {L} frequency tuples, got {alphas!r}")
            key = tuple(_as_frequency(a, self.d) for a in alphas)
            vec = _as_vector(g, self.d, f"coefficient at {key}")
            if np.any(vec != 0):
                vec = clean.get(key, 0) + vec
                vec.setflags(write=False)
                clean[key] = vec
        # row r holds sum_l omega_l alpha_l for the r-th term
        phases = np.array(
            [sum(w * np.array(a) for w, a in zip(omegas, alphas)) for alphas in clean], dtype=complex
        ).reshape(len(clean), self.d)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "matrix", np.array(list(clean.values()), dtype=complex).reshape(len(clean), self.d))

    def __eq__(self, other):
        if not isinstance(other, MultiFreqSystem) or (other.d, other.omegas) != (self.d, self.omegas):
            return NotImplemented
        return _same_coeffs(self.coeffs, other.coeffs)

    @property
    def L(self) -> int:
        return len(self.omegas)

    def constant_term(self) -> np.ndarray:
        return self.coeffs.get(((0,) * self.d,) * self.L, np.zeros(self.d, dtype=complex))

    def order_sums(self) -> dict[int, float]:
        sums: dict[int, float] = {}
        for alphas, g in self.coeffs.items():
            k = sum(abs(v) for a in alphas for v in a)
            sums[k] = sums.get(k, 0.0) + float(np.abs(g).sum())
        return dict(sorted(sums.items()))

    def has_nonnegative_support(self) -> bool:
        return all(v >= 0 for alphas in self.coeffs for a in alphas for v in a)

    def to_fourier(self) -> FourierSystem:
        """Collapse to a single-frequency :class:`FourierSystem` when ``L == 1, omega == 1``."""
        if self.omegas != (1.0,):
            raise InvalidArgument("only a single unit fundamental frequency collapses to a FourierSystem")
        return FourierSystem(self.d, {alphas[0]: g for alphas, g in self.coeffs.items()})

    def __call__(self, x) -> np.ndarray:
        return eval_field(self, x)


@dataclass(frozen=True)
class DecayCertificate:
    """Tight constant ``D`` with ``S_k <= D * R**-k`` for every order ``k``."""

    R: float
    D: float
    per_order_sums: dict[int, float]

    def holds(self, rel_tol: float = 1e-12) -> bool:
        return all(s * self.R**k <= self.D * (1 + rel_tol) for k, s in self.per_order_sums.items())


def eval_field(sys: FourierSystem | MultiFreqSystem, x) -> np.ndarray:
    """Evaluate the field at the complex point ``x``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (sys.d,):
        raise InvalidArgument(f"state must have length {sys.d}, got shape {x.shape}")
    if isinstance(sys, FourierSystem):
        return sys.matrix.T @ np.exp(1j * (sys.freqs @ x))
    return sys.matrix.T @ np.exp(1j * (sys.phases @ x))


def decay_certificate(sys: FourierSystem | MultiFreqSystem, R: float) -> DecayCertificate:
    """Smallest ``D`` such that ``S_k R^k <= D`` for all supported orders ``k``.

    For a :class:`MultiFreqSystem` the sums are scaled by ``2 * sum_l |omega_l|``,
    which is the decay constant of its two-sided extension.
    """
    if not R > 0:
        raise InvalidArgument(f"radius must be positive, got {R}")
    if not sys.coeffs:
        raise DegenerateSystem("the field has no Fourier coefficients")
    sums = sys.order_sums()
    if isinstance(sys, MultiFreqSystem):
        scale = 2.0 * sum(abs(w) for w in sys.omegas)
        sums = {k: scale * s for k, s in sums.items()}
    D = max(s * R**k for k, s in sums.items())
    return DecayCertificate(R=float(R), D=float(D), per_order_sums=sums)


def mu0_of(sys: FourierSystem) -> float:
    """Smallest imaginary part among the entries of the constant Fourier coefficient."""
    return float(np.min(sys.constant_term().imag))


def scalar_example(a: complex, b: complex = 1.0) -> FourierSystem:
    """The one-dimensional field ``a (1 - b exp(i x))``."""
    if a == 0:
        raise InvalidArgument("a must be nonzero")
    return FourierSystem(1, {(0,): [a], (1,): [-a * b]})


def kuramoto_raw(theta, omega, K: float) -> np.ndarray:
    """All-to-all Kuramoto field ``omega_p + K/d sum_q sin(theta_q - theta_p)``."""
    theta = np.asarray(theta, dtype=complex)
    diff = theta[None, :] - theta[:, None]
    return np.asarray(omega, dtype=complex) + K / theta.size * np.sin(diff).sum(axis=1)


def kuramoto_analytic(omega: Sequence[float], K: float, d: int = 3) -> FourierSystem:
    """Three-oscillator Kuramoto field on the plane ``sum theta = 0`` with nonnegative frequencies.

    Uses the constraint to rewrite each ``exp(-i ...)`` as an order-3 exponential
    with nonnegative frequency. Agrees with :func:`kuramoto_raw` whenever the
    phases sum to zero.
    """
    if d != 3:
        raise InvalidArgument("only the three-oscillator case is available")
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (3,):
        raise InvalidArgument("omega must have three entries")
    if abs(omega.sum()) > 1e-12:
        raise InvalidArgument(f"natural frequencies must sum to zero, got {omega.sum()}")
    c = K / (2 * d * 1j)
    terms = {
        (2, 1, 0): (-1, 0, 1),
        (2, 0, 1): (-1, 1, 0),
        (1, 2, 0): (0, -1, 1),
        (1, 0, 2): (0, 1, -1),
        (0, 2, 1): (1, -1, 0),
        (0, 1, 2): (1, 0, -1),
    }
    coeffs = {alpha: c * np.array(v, dtype=complex) for alpha, v in terms.items()}
    coeffs[(0, 0, 0)] = omega.astype(complex)
    return FourierSystem(3, coeffs)


def kuramoto_pairfield(omega1: float, omega2: float, Ktilde: float) -> MultiFreqSystem:
    """Reduced two-phase Kuramoto field.

    ``theta1' = omega1 - Kt sin(theta1 - theta2) - Kt sin(2 theta1 + theta2)`` and
    the symmetric equation for ``theta2``; the third phase is ``-theta1 - theta2``.
    """
    if Ktilde not in (-1, 1):
        raise InvalidArgument(f"Ktilde must be +1 or -1, got {Ktilde}")
    c = Ktilde / 2j
    coeffs = {
        ((1, -1),): c * np.array([-1, 1]),
        ((-1, 1),): c * np.array([1, -1]),
        ((2, 1),): c * np.array([-1, 0]),
        ((-2, -1),): c * np.array([1, 0]),
        ((1, 2),): c * np.array([0, -1]),
        ((-1, -2),): c * np.array([0, 1]),
        ((0, 0),): np.array([omega1, omega2], dtype=complex),
    }
    return MultiFreqSystem(2, (1.0,), coeffs)


@dataclass(frozen=True)
class MaclaurinTable:
    """Taylor coefficients ``f_beta`` of a field about the origin, for ``|beta| <= max_order``."""

    d: int
    max_order: int
    f: Mapping[tuple[int, ...], np.ndarray]
    tail_bound: float = 0.0

    def __getitem__(self, beta) -> np.ndarray:
        return self.f[tuple(beta)]

    def order_sums(self) -> dict[int, float]:
        sums: dict[int, float] = {}
        for beta, v in self.f.items():
            k = sum(beta)
            sums[k] = sums.get(k, 0.0) + float(np.abs(v).sum())
        return dict(sorted(sums.items()))


def kuramoto_taylor(omega1: float, omega2: float, Ktilde: float, degree: int) -> MaclaurinTable:
    """Maclaurin table of the reduced two-phase Kuramoto field up to ``degree``.

    Expands ``sin(theta1 - theta2) + sin(2 theta1 + theta2)`` term by term; only
    odd orders are nonzero apart from the constant ``(omega1, omega2)``.
    """
    if degree < 1:
        raise InvalidArgument(f"degree must be positive, got {degree}")
    if Ktilde not in (-1, 1):
        raise InvalidArgument(f"Ktilde must be +1 or -1, got {Ktilde}")
    f = {beta: np.zeros(2, dtype=complex) for beta in indices_up_to(2, degree)}
    f[(0, 0)] = np.array([omega1, omega2], dtype=complex)
    for n in range(1, degree + 1, 2):
        k = (n - 1) // 2
        for l in range(n + 1):
            # coefficient of theta1**l theta2**(n-l)
            scale = Ktilde * (-1) ** k / (factorial(n - l) * factorial(l))
            f[(l, n - l)] = scale * np.array(
                [(-1) ** l - 2**l, (-1) ** (n - l) - 2 ** (n - l)], dtype=complex
            )
    return MaclaurinTable(2, degree, f)


def h_profile(phi, t):
    """``|exp(i a t) - 1|**2`` for ``a = exp(i phi)``, written in real form."""
    phi = np.asarray(phi, dtype=float)
    t = np.asarray(t, dtype=float)
    s = np.sin(phi)
    return np.exp(-2 * t * s) - 2 * np.exp(-t * s) * np.cos(t * np.cos(phi)) + 1


def pair_equilibrium_angle(guess: float = -0.3352, half_width: float = 0.1) -> float:
    """Root of ``1 + sin(theta) + sin(2 theta)`` bracketed around ``guess``.

    ``(0, root)`` is an equilibrium of :func:`kuramoto_pairfield` with
    ``omega = (0, 1)`` and ``Ktilde = -1``.
    """

    def f(t):
        return 1 + np.sin(t) + np.sin(2 * t)

    return brentq(f, guess - half_width, guess + half_width, xtol=1e-15, rtol=4 * np.finfo(float).eps)
