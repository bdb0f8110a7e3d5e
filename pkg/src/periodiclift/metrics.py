"""Error functionals comparing lifted trajectories with the nonlinear solution.

Includes multiplicative errors, clamped log10 errors, phase reconstruction by
continuous logarithm and two-parameter sweeps over initial states or
parameters.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import log10, pi

import numpy as np

from .errors import DegenerateSample, InvalidArgument, LiftError, Undersampled
from .lift_carleman import LiftedSystem, carleman_finite_section, maclaurin_from_fourier
from .lift_fourier import ExtendedSystem, extend_two_sided, fourier_finite_section, multifreq_finite_section
from .odesolve import SolveConfig, Trajectory, integrate_linear, integrate_nonlinear
from .trigsystem import h_profile, kuramoto_analytic, kuramoto_pairfield, scalar_example

CLAMP_LO = 1e-4
CLAMP_HI = 10.0
MAX_REFINED_SAMPLES = 8192


def _states(traj) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(traj, Trajectory):
        return traj.states, traj.times
    return np.atleast_2d(np.asarray(traj, dtype=complex)), None


def _matched(v_traj, x_traj) -> tuple[np.ndarray, np.ndarray]:
    v, tv = _states(v_traj)
    x, tx = _states(x_traj)
    if v.shape[0] != x.shape[0] or (tv is not None and tx is not None and not np.array_equal(tv, tx)):
        raise InvalidArgument("trajectories are sampled on different time grids")
    return v, x


def mult_error(v_traj, x_traj, embedding=None) -> np.ndarray:
    """Per-sample ``max_j |v_j exp(-i z_j) - 1|`` with ``z = embedding @ x``.

    ``v_traj`` may hold the full lifted state; only its first ``len(z)``
    columns (the order-one exponentials) are used.
    """
    v, x = _matched(v_traj, x_traj)
    z = x if embedding is None else x @ np.asarray(embedding, dtype=complex).T
    width = z.shape[1]
    if v.shape[1] < width:
        raise InvalidArgument(f"lifted trajectory has {v.shape[1]} columns, need at least {width}")
    return np.abs(v[:, :width] * np.exp(-1j * z) - 1).max(axis=1)


def carleman_error(y_traj, x_traj) -> np.ndarray:
    """Per-sample ``max_j |exp(i (y_j - x_j)) - 1|`` for a monomial lift."""
    y, x = _matched(y_traj, x_traj)
    d = x.shape[1]
    if y.shape[1] < d:
        raise InvalidArgument(f"lifted trajectory has {y.shape[1]} columns, need at least {d}")
    return np.abs(np.exp(1j * (y[:, :d] - x)) - 1).max(axis=1)


def sup_log_error(errors, clamp_lo: float = CLAMP_LO, clamp_hi: float = CLAMP_HI) -> float:
    """``sup_t log10 min(clamp_hi, max(clamp_lo, error(t)))``; NaN counts as ``clamp_hi``."""
    if not clamp_lo < clamp_hi:
        raise InvalidArgument(f"need clamp_lo < clamp_hi, got {clamp_lo}, {clamp_hi}")
    e = np.asarray(errors, dtype=float)
    e = np.where(np.isnan(e), clamp_hi, e)
    return float(np.log10(np.minimum(clamp_hi, np.maximum(clamp_lo, e))).max())


def clip_log(value: float, lo: float = -5.0, hi: float = 2.0) -> float:
    """Clamp an already logarithmic error to ``[lo, hi]`` (the alternative figure clamps)."""
    return float(max(min(value, hi), lo))


def scalar_log_error(phi: float, im_x0: float, N: int, T: float, samples: int = 4096) -> float:
    """Unclamped sup log10 error of the scalar example with ``a = exp(i phi)``.

    Equals ``N (-Im x0 log10 e + 0.5 log10 max_t h(phi, t))``, with the maximum
    taken over ``samples`` uniform times on ``[0, T]``.
    """
    t = np.linspace(0.0, T, samples)
    peak = float(np.max(h_profile(phi, t)))
    return N * (-im_x0 * log10(np.e) + 0.5 * log10(peak))


@dataclass
class PhaseTrack:
    """Continuously unwrapped phases ``xi`` with ``xi[0] == anchor``."""

    times: np.ndarray
    xi: np.ndarray
    anchor: np.ndarray


def phase_unwrap(v_traj, x0, max_increment: float = pi / 2) -> PhaseTrack:
    """Phases ``xi_j = -i log v_j`` continued from ``xi_j(0) = x0_j``.

    Uses the first ``len(x0)`` columns of ``v_traj``. Raises
    :class:`DegenerateSample` on a zero sample and :class:`Undersampled` when
    an angle increment between samples exceeds ``max_increment``.
    """
    v, times = _states(v_traj)
    x0 = np.atleast_1d(np.asarray(x0, dtype=complex))
    v = v[:, : x0.size]
    if v.shape[1] < x0.size:
        raise InvalidArgument("trajectory has fewer columns than the anchor")
    if np.any(v == 0):
        raise DegenerateSample("a lifted sample has zero modulus")
    ratio = v[1:] / v[:-1]
    angles = np.angle(ratio)
    if np.any(np.abs(angles) > max_increment):
        raise Undersampled(f"angle increment exceeds {max_increment:.17g}; refine the sampling")
    steps = -1j * (np.log(np.abs(ratio)) + 1j * angles)
    xi = np.vstack([x0[None, :], x0[None, :] + np.cumsum(steps, axis=0)])
    if times is None:
        times = np.arange(v.shape[0], dtype=float)
    return PhaseTrack(np.asarray(times, dtype=float), xi, x0)


def reconstruct_phases(lift: LiftedSystem, x0, t_end: float, config: SolveConfig = SolveConfig(), samples: int = 512):
    """Integrate ``lift`` and unwrap its first layer, doubling the sampling on :class:`Undersampled`.

    Returns ``(trajectory, track)``. The anchor is ``lift.embedding @ x0``.
    """
    anchor = lift.embedding @ np.atleast_1d(np.asarray(x0, dtype=complex))
    n = samples
    while True:
        cfg = SolveConfig(config.rel_tol, config.abs_tol, config.max_step, config.blowup_threshold,
                          np.linspace(0.0, t_end, n), config.max_steps)
        traj = integrate_linear(lift, t_end, cfg)
        try:
            return traj, phase_unwrap(traj, anchor)
        except Undersampled:
            if n * 2 > MAX_REFINED_SAMPLES:
                raise
            n *= 2


def phase_average(track: PhaseTrack, ext: ExtendedSystem) -> np.ndarray:
    """``(1/2L) sum_m sum_l (-1)^m xi[m L d + l d + j] / omega_l`` for each original coordinate ``j``."""
    if ext.kind != "two-sided":
        raise InvalidArgument("phase averaging needs a two-sided extension")
    d, L = ext.d, ext.L
    if track.xi.shape[1] != 2 * d * L:
        raise InvalidArgument(f"track has {track.xi.shape[1]} coordinates, expected {2 * d * L}")
    total = np.zeros((track.xi.shape[0], d), dtype=complex)
    for m in range(2):
        for l, w in enumerate(ext.omegas):
            start = ext.coordinate(m, l, 0)
            total += (-1) ** m / w * track.xi[:, start : start + d]
    return total / (2 * L)


# sweeps

FAMILIES = {
    "kuramoto3": ("theta1", "theta2", "omega1", "omega2", "K"),
    "scalar": ("phi", "abs_a", "b", "re_x0", "im_x0"),
}
DEFAULTS = {
    "kuramoto3": {"theta1": 0.0, "theta2": 0.0, "omega1": 0.0, "omega2": 0.0, "K": -3.0},
    "scalar": {"phi": pi / 2, "abs_a": 1.0, "b": 1.0, "re_x0": 0.0, "im_x0": 0.0},
}
SWEEP_SCHEMES = ("fourier", "multifreq", "carleman")


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class PointSpec:
    """What to run at each parameter set: system family, lift scheme, order, horizon and clamps."""

    family: str
    scheme: str
    N: int
    T: float
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI
    samples: int = 512
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown family {self.family!r}; expected one of {sorted(FAMILIES)}")
        if self.scheme not in SWEEP_SCHEMES:
            raise InvalidArgument(f"unknown scheme {self.scheme!r}; expected one of {SWEEP_SCHEMES}")
        if self.family == "scalar" and self.scheme == "multifreq":
            raise InvalidArgument("the scalar family has no two-sided sweep")
        if self.N < 1 or not self.T > 0:
            raise InvalidArgument("need N >= 1 and T > 0")
        if not self.clamp_lo < self.clamp_hi:
            raise InvalidArgument("need clamp_lo < clamp_hi")
        if self.samples < 2:
            raise InvalidArgument("need at least 2 output samples")

    def params(self, overrides: dict) -> dict:
        unknown = set(overrides) - set(FAMILIES[self.family])
        if unknown:
            raise InvalidArgument(f"unknown parameters {sorted(unknown)} for family {self.family}")
        return {**DEFAULTS[self.family], **{k: float(v) for k, v in overrides.items()}}

    def config(self) -> SolveConfig:
        return SolveConfig(self.rel_tol, self.abs_tol, output_grid=np.linspace(0.0, self.T, self.samples))


@dataclass(frozen=True)
class SweepJob:
    """Two-parameter sweep of ``spec``; ``fixed`` overrides the family defaults."""

    spec: PointSpec
    axes: tuple[Axis, Axis]
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.axes) != 2:
            raise InvalidArgument("a sweep has exactly two axes")
        names = FAMILIES[self.spec.family]
        for axis in self.axes:
            if axis.name not in names:
                raise InvalidArgument(f"unknown parameter {axis.name!r} for family {self.spec.family}")
            if axis.n < 2:
                raise InvalidArgument(f"axis {axis.name} needs at least 2 points, got {axis.n}")
        if self.axes[0].name == self.axes[1].name:
            raise InvalidArgument("the two axes must sweep different parameters")
        self.spec.params(self.fixed)

    def params_at(self, i: int, j: int) -> dict:
        p = self.spec.params(self.fixed)
        p[self.axes[0].name] = float(self.axes[0].values[i])
        p[self.axes[1].name] = float(self.axes[1].values[j])
        return p


@dataclass
class ErrorSurface:
    """Clamped log10 errors; ``values[i, j]`` belongs to ``axes[0].values[i]`` and ``axes[1].values[j]``."""

    axes: tuple[Axis, Axis]
    values: np.ndarray
    failed: np.ndarray
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI

    def to_csv(self) -> str:
        a0, a1 = self.axes
        lines = [",".join([f"{a0.name}\\{a1.name}"] + [f"{v:.17g}" for v in a1.values])]
        for i, v0 in enumerate(a0.values):
            lines.append(",".join([f"{v0:.17g}"] + [f"{v:.17g}" for v in self.values[i]]))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "axes": [{"name": a.name, "lo": a.lo, "hi": a.hi, "n": a.n} for a in self.axes],
            "clamp": [self.clamp_lo, self.clamp_hi],
            "values": self.values.tolist(),
            "failed": self.failed.tolist(),
        }


def _system_key(job: PointSpec, p: dict) -> tuple:
    names = {"kuramoto3": ("omega1", "omega2", "K"), "scalar": ("phi", "abs_a", "b")}[job.family]
    return tuple(p[n] for n in names)


def _build(job: PointSpec, p: dict):
    """Nonlinear oracle system, lift template and original-state extractor for one parameter set."""
    N = job.N
    if job.family == "scalar":
        a = p["abs_a"] * np.exp(1j * p["phi"])
        system = scalar_example(a, p["b"])
        x0 = np.array([p["re_x0"] + 1j * p["im_x0"]])
        if job.scheme == "fourier":
            return system, fourier_finite_section(system, x0, N), None
        return system, carleman_finite_section(system, x0, N), None
    w1, w2, K = p["omega1"], p["omega2"], p["K"]
    theta0 = np.array([p["theta1"], p["theta2"], -p["theta1"] - p["theta2"]], dtype=complex)
    if job.scheme == "fourier":
        system = kuramoto_analytic([w1, w2, -w1 - w2], K)
        return system, fourier_finite_section(system, theta0, N), None
    pair = kuramoto_pairfield(w1, w2, K / 3)
    if job.scheme == "multifreq":
        ext = extend_two_sided(pair)
        return pair, multifreq_finite_section(ext, theta0[:2], N), ext.embedding
    table = maclaurin_from_fourier(pair, N)
    return pair, carleman_finite_section(table, theta0[:2], N), None


def _initial_state(job: PointSpec, p: dict) -> np.ndarray:
    if job.family == "scalar":
        return np.array([p["re_x0"] + 1j * p["im_x0"]])
    theta0 = np.array([p["theta1"], p["theta2"], -p["theta1"] - p["theta2"]], dtype=complex)
    return theta0 if job.scheme == "fourier" else theta0[:2]


def evaluate_point(job: PointSpec, p: dict, cache: dict | None = None) -> tuple[float, bool]:
    """Clamped sup log10 error at one parameter set and whether the run failed."""
    try:
        key = _system_key(job, p)
        if cache is not None and key in cache:
            system, template, embedding = cache[key]
        else:
            system, template, embedding = _build(job, p)
            if cache is not None:
                cache[key] = (system, template, embedding)
        x0 = _initial_state(job, p)
        lift = template.with_initial(x0)
        config = job.config()
        x_traj = integrate_nonlinear(system, x0, job.T, config)
        v_traj = integrate_linear(lift, job.T, config)
        if not (x_traj.completed and v_traj.completed):
            return float(np.log10(job.clamp_hi)), True
        if job.scheme == "carleman":
            errors = carleman_error(v_traj, x_traj)
        else:
            errors = mult_error(v_traj, x_traj, embedding)
        return sup_log_error(errors, job.clamp_lo, job.clamp_hi), False
    except (LiftError, FloatingPointError, OverflowError):
        return float(np.log10(job.clamp_hi)), True


def _row(args) -> tuple[int, list[tuple[float, bool]]]:
    job, i = args
    cache: dict = {}
    return i, [evaluate_point(job.spec, job.params_at(i, j), cache) for j in range(job.axes[1].n)]


def sweep(job: SweepJob, jobs: int = 1) -> ErrorSurface:
    """Evaluate the clamped sup log10 error over the grid.

    Rows run in ``jobs`` worker processes; results are assembled by row
    index so the surface does not depend on scheduling.
    """
    if jobs < 1:
        raise InvalidArgument(f"jobs must be positive, got {jobs}")
    n0, n1 = job.axes[0].n, job.axes[1].n
    values = np.empty((n0, n1))
    failed = np.zeros((n0, n1), dtype=bool)
    tasks = [(job, i) for i in range(n0)]
    if jobs == 1:
        results = map(_row, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=min(jobs, os.cpu_count() or 1, n0))
        results = pool.map(_row, tasks)
    try:
        for i, row in results:
            for j, (value, flag) in enumerate(row):
                values[i, j] = value
                failed[i, j] = flag
    finally:
        if jobs > 1:
            pool.shutdown()
    return ErrorSurface(tuple(job.axes), values, failed, job.spec.clamp_lo, job.spec.clamp_hi)



def compare(family: str, param: str, values, fixed: dict, N: int, T: float, schemes=("fourier", "carleman")):
    """Clamped sup log10 error of each scheme as one parameter varies.

    Returns ``(values, table, failed)`` where ``table[i][s]`` belongs to
    ``values[i]`` and ``schemes[s]``.
    """
    specs = [PointSpec(family, s, N, T) for s in schemes]
    if param not in FAMILIES[family]:
        raise InvalidArgument(f"unknown parameter {param!r} for family {family}")
    table, failed = [], []
    for v in values:
        row = [evaluate_point(spec, spec.params({**fixed, param: v})) for spec in specs]
        table.append([r[0] for r in row])
        failed.append([r[1] for r in row])
    return list(map(float, values)), table, failed
