"""Adaptive Dormand-Prince 5(4) integration in complex arithmetic, plus scalar closed forms.

The stepper uses the classic Dormand-Prince tableau with first-same-as-last
reuse and a proportional-integral step controller. Steps are clipped so that
every output time is hit exactly; there is no dense output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np

from .errors import InvalidArgument, NearSingularity
from .lift_carleman import LiftedSystem
from .trigsystem import FourierSystem, MultiFreqSystem

COMPLETED = "completed"
BLOWUP = "blowup-detected"
STEP_FAILURE = "step-failure"

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

# PI controller constants (Hairer, Norsett and Wanner)
_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@dataclass(frozen=True)
class SolveConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    blowup_threshold: float = 1e8
    output_grid: np.ndarray | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidArgument("tolerances must be positive")
        if not self.max_step > 0:
            raise InvalidArgument("max_step must be positive")

    def grid(self, t_end: float, samples: int = 512) -> np.ndarray:
        """The configured output grid, or ``samples`` uniform points on ``[0, t_end]``."""
        if self.output_grid is not None:
            grid = np.asarray(self.output_grid, dtype=float)
        else:
            grid = np.linspace(0.0, t_end, samples)
        if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise InvalidArgument("output grid must start at 0 and increase strictly")
        return grid


@dataclass
class Trajectory:
    """Sampled solution. ``states[n]`` is the state at ``times[n]``.

    When ``status`` is ``blowup-detected`` the last row is the state at
    ``blowup_time`` (off the output grid), where the state or its velocity
    first exceeded the blow-up threshold.
    """

    times: np.ndarray
    states: np.ndarray
    status: str = COMPLETED
    blowup_time: float | None = None
    steps: int = field(default=0, compare=False)

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def component(self, j: int) -> np.ndarray:
        return self.states[:, j]

    def to_csv(self) -> str:
        """Header ``t,re_1,im_1,...``; one row per recorded sample with 17 significant digits."""
        n = self.states.shape[1]
        header = ",".join(["t"] + [f"{part}_{j}" for j in range(1, n + 1) for part in ("re", "im")])
        rows = [header]
        for t, y in zip(self.times, self.states):
            cells = [f"{t:.17g}"] + [f"{v:.17g}" for z in y for v in (z.real, z.imag)]
            rows.append(",".join(cells))
        return "\n".join(rows) + "\n"


def _error_norm(err, y, y_new, rel_tol, abs_tol) -> float:
    scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def dopri_step(f: Callable, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None):
    """One Dormand-Prince step. Returns ``(y_new, error_estimate, k7)``; ``k7`` is ``f(t+h, y_new)``."""
    k = [f(t, y) if k1 is None else k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
        k.append(f(t + _C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
    # stage 7 is evaluated at y_new (the tableau's last row equals B5)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return y_new, err, k[6]


def _initial_step(f, y0, f0, rel_tol, abs_tol) -> float:
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / scale) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return float(min(100 * h0, h1))


def integrate(f: Callable, y0, grid: np.ndarray, config: SolveConfig = SolveConfig()) -> Trajectory:
    """Integrate ``y' = f(t, y)`` from ``y0`` at ``grid[0]`` and sample at every grid time."""
    y = np.array(y0, dtype=complex)
    grid = np.asarray(grid, dtype=float)
    states = np.empty((grid.size, y.size), dtype=complex)
    states[0] = y
    t = float(grid[0])
    k1 = f(t, y)
    threshold = config.blowup_threshold
    if not (np.all(np.isfinite(k1)) and np.abs(y).max(initial=0) <= threshold):
        return Trajectory(grid[:1].copy(), states[:1], BLOWUP, t)
    span = grid[-1] - grid[0]
    h = min(_initial_step(f, y, k1, config.rel_tol, config.abs_tol), config.max_step, span)
    err_old = 1e-4
    steps = 0
    for n in range(1, grid.size):
        target = float(grid[n])
        while t < target:
            if steps >= config.max_steps:
                return Trajectory(grid[:n].copy(), states[:n], STEP_FAILURE, steps=steps)
            clipped = target - t <= h * (1 + 1e-12)
            h_used = target - t if clipped else h
            if h_used <= 1e-14 * max(1.0, abs(t)) and not clipped:
                return Trajectory(grid[:n].copy(), states[:n], STEP_FAILURE, steps=steps)
            y_new, err, k7 = dopri_step(f, t, y, h_used, k1)
            steps += 1
            finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(k7))
            e = _error_norm(err, y, y_new, config.rel_tol, config.abs_tol) if finite else np.inf
            if e <= 1.0:
                t = target if clipped else t + h_used
                y, k1 = y_new, k7
                size = max(np.abs(y).max(initial=0), np.abs(k1).max(initial=0))
                if size > threshold:
                    times = np.append(grid[:n], t) if t != target else grid[: n + 1].copy()
                    rows = np.vstack([states[:n], y[None, :]])
                    return Trajectory(times, rows, BLOWUP, t, steps=steps)
                e = max(e, 1e-10)
                factor = _SAFETY * e**-_EXPO * err_old**_BETA
                h_next = h_used * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
                # a clipped step says nothing about how large the next step may be
                h = min(max(h_next, h) if clipped else h_next, config.max_step)
                err_old = e
            else:
                factor = _SAFETY * e**-_EXPO if np.isfinite(e) else _MIN_FACTOR
                h = h_used * max(_MIN_FACTOR, min(1.0, factor))
                if h <= 1e-14 * max(1.0, abs(t)):
                    return Trajectory(grid[:n].copy(), states[:n], STEP_FAILURE, steps=steps)
        states[n] = y
    return Trajectory(grid.copy(), states, COMPLETED, steps=steps)


def integrate_nonlinear(
    sys: FourierSystem | MultiFreqSystem, x0, t_end: float, config: SolveConfig = SolveConfig()
) -> Trajectory:
    """Solve ``x' = g(x)`` on the configured grid (512 uniform samples by default)."""
    if not t_end > 0:
        raise InvalidArgument(f"t_end must be positive, got {t_end}")
    x0 = np.atleast_1d(np.asarray(x0, dtype=complex))
    if x0.shape != (sys.d,):
        raise InvalidArgument(f"initial state must have length {sys.d}, got shape {x0.shape}")
    # bypass eval_field's validation inside the hot loop
    phases = sys.freqs if isinstance(sys, FourierSystem) else sys.phases
    coeffs_t = np.ascontiguousarray(sys.matrix.T)

    def rhs(t, x):
        return coeffs_t @ np.exp(1j * (phases @ x))

    return integrate(rhs, x0, config.grid(t_end), config)


def integrate_linear(lift: LiftedSystem, t_end: float, config: SolveConfig = SolveConfig()) -> Trajectory:
    """Solve ``y' = M y + b`` from the lifted initial state."""
    if not t_end > 0:
        raise InvalidArgument(f"t_end must be positive, got {t_end}")
    M = np.ascontiguousarray(lift.matrix)
    b = lift.inhomogeneous
    if np.any(b != 0):
        def rhs(t, y):
            return M @ y + b
    else:
        def rhs(t, y):
            return M @ y

    return integrate(rhs, lift.initial, config.grid(t_end), config)


def closed_form_x(a: complex, x0: complex, t, points_per_unit: int = 2048, singular_tol: float = 1e-8):
    """Exact solution of ``x' = a (1 - exp(i x))`` with a continuously tracked logarithm.

    The logarithm's argument ``1 + (exp(i a s) - 1) exp(i x0)`` is followed
    along a grid of ``points_per_unit`` samples per unit time; any interval
    where its angle turns by more than pi/2 is bisected until it does not.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise InvalidArgument("closed form is tracked forward from t = 0 only")
    c = np.exp(1j * x0)

    def z(s):
        return 1 + (np.exp(1j * a * s) - 1) * c

    t_max = float(t_arr.max(initial=0.0))
    n = max(2, int(np.ceil(points_per_unit * t_max)) + 1)
    s = np.union1d(np.linspace(0.0, t_max, n), t_arr)
    zs = z(s)
    if np.abs(zs).min() < singular_tol:
        raise NearSingularity("logarithm argument reaches the origin")
    steps = np.angle(zs[1:] / zs[:-1])
    for i in np.flatnonzero(np.abs(steps) > np.pi / 2):
        steps[i] = _refined_turn(z, s[i], s[i + 1], zs[i], zs[i + 1], singular_tol)
    theta = np.concatenate([[0.0], np.cumsum(steps)])
    log_z = np.log(np.abs(zs)) + 1j * theta
    x = a * s + x0 + 1j * log_z
    out = x[np.searchsorted(s, t_arr)]
    return out if np.ndim(t) else complex(out[0])


def _refined_turn(z, s0, s1, z0, z1, tol, depth=0) -> float:
    turn = float(np.angle(z1 / z0))
    if abs(turn) <= np.pi / 2:
        return turn
    sm = 0.5 * (s0 + s1)
    zm = z(sm)
    if abs(zm) < tol or depth > 200 or sm in (s0, s1):
        raise NearSingularity(f"logarithm argument reaches the origin near t = {sm:.17g}")
    return _refined_turn(z, s0, sm, z0, zm, tol, depth + 1) + _refined_turn(z, sm, s1, zm, z1, tol, depth + 1)


def closed_form_v(a: complex, x0: complex, N: int, t) -> np.ndarray:
    """Exact order-``N`` truncated Carleman-Fourier solution for the scalar example.

    Returns shape ``(N,)`` for scalar ``t`` or ``(len(t), N)`` for an array.
    """
    if N < 1:
        raise InvalidArgument(f"truncation order must be positive, got {N}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    q = -np.exp(1j * x0) * (np.exp(1j * a * t_arr) - 1)
    out = np.empty((t_arr.size, N), dtype=complex)
    for k in range(1, N + 1):
        series = sum(comb(k + l - 1, l) * q**l for l in range(N - k + 1))
        out[:, k - 1] = np.exp(1j * k * (a * t_arr + x0)) * series
    return out if np.ndim(t) else out[0]


def blowup_time(a: complex, x0: complex, windings: int = 64) -> float | None:
    """Earliest ``t > 0`` with ``1 + (exp(i a t) - 1) exp(i x0) = 0``, or ``None``.

    Candidates are ``t = (log(1 - exp(-i x0)) + 2 pi i m) / (i a)``; only real
    positive ones count, searched over ``|m| <= windings``.
    """
    target = 1 - np.exp(-1j * x0)
    if target == 0:
        return None
    times = []
    for m in range(-windings, windings + 1):
        tau = (np.log(target) + 2j * np.pi * m) / (1j * a)
        if abs(tau.imag) <= 1e-12 * max(1.0, abs(tau)) and tau.real > 0:
            times.append(float(tau.real))
    return min(times, default=None)
