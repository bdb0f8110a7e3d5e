"""Admissibility conditions, time horizons and error bounds for each lifting scheme.

Every function is pure and returns a :class:`BoundsReport`. Constants such
as ``(e-1)/(2e-1)`` are computed at call time in double precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import e, exp, inf, isfinite, log, pi, sqrt
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import HypothesisViolation, InvalidArgument, InvalidRegime, LiftError, NoOrder, RegimeViolation

KAPPA = (e - 1) / (2 * e - 1)
MAX_ORDER_SCAN = 10_000


@dataclass
class BoundsReport:
    """Outcome of one bound evaluation.

    ``bound(N, t)`` evaluates the error bound; it raises when the report is
    not admissible. ``horizon`` is ``inf`` for the whole-range schemes.
    """

    scheme: str
    admissible: bool
    reason: str
    horizon: float | None = None
    constants: dict[str, float] = field(default_factory=dict)
    _formula: Callable[[int, float], float] | None = field(default=None, repr=False, compare=False)
    _condition: Callable[[int, float], float] | None = field(default=None, repr=False, compare=False)

    def bound(self, N: int, t: float = 0.0) -> float:
        if not self.admissible or self._formula is None:
            raise InvalidArgument(f"{self.scheme} report is not admissible: {self.reason}")
        if N < 1:
            raise InvalidArgument(f"order must be positive, got {N}")
        return self._formula(N, t)

    def samples(self, orders, times) -> list[dict]:
        if not self.admissible:
            return []
        return [{"N": int(N), "t": float(t), "value": self.bound(int(N), float(t))} for N in orders for t in times]

    def to_dict(self, orders=(), times=()) -> dict:
        return {
            "scheme": self.scheme,
            "admissible": self.admissible,
            "reason": self.reason,
            "horizon": self.horizon,
            "constants": dict(self.constants),
            "bound_samples": self.samples(orders, times),
        }


def _inadmissible(scheme: str, reason: str, **constants) -> BoundsReport:
    return BoundsReport(scheme, False, reason, None, constants)


def _x0(x0) -> np.ndarray:
    return np.atleast_1d(np.asarray(x0, dtype=complex))


def carleman_bounds(D0: float, R: float, x0_infnorm: float, g_at_origin=None) -> BoundsReport:
    """Monomial-lift bound near an equilibrium at the origin.

    Passing ``g_at_origin`` lets the report flag a field that does not vanish
    at the origin; the bound is then not available.
    """
    if not R > 1:
        raise InvalidRegime(f"the monomial bound needs R > 1, got {R}")
    if not D0 > 0:
        raise InvalidArgument(f"D0 must be positive, got {D0}")
    lnR = log(R)
    consts = {"D0": D0, "R": R, "x0_infnorm": float(x0_infnorm), "radius": lnR / e}
    if g_at_origin is not None and np.any(np.asarray(g_at_origin) != 0):
        return _inadmissible("carleman", "hypothesis-violation: the field does not vanish at the origin", **consts)
    if not x0_infnorm < lnR / e:
        return _inadmissible("carleman", f"|x0|_inf = {x0_infnorm:.17g} is not below ln(R)/e = {lnR / e:.17g}", **consts)
    growth = D0 * R / lnR**2
    if x0_infnorm == 0:
        horizon = inf
    else:
        horizon = KAPPA * log(lnR / (e * x0_infnorm)) / growth
    prefactor = R / (sqrt(2 * pi) * (e - 1))
    base = x0_infnorm * e / lnR
    consts.update(prefactor=prefactor, growth=growth, base=base)

    def formula(N, t):
        if base == 0:
            return 0.0
        return prefactor * N**-1.5 * exp(growth * N * t + KAPPA * N * log(base))

    return BoundsReport("carleman", True, "ok", horizon, consts, formula, lambda N, T: formula(N, T))


def carleman_rate(D0: float, R: float, x0_infnorm: float, t: float) -> float:
    """Per-order convergence rate of the monomial lift at time ``t``."""
    lnR = log(R)
    return exp(D0 * R * t / lnR**2) * (x0_infnorm * e / lnR) ** KAPPA


def fourier_shortrange_bounds(D0: float, R: float, x0) -> BoundsReport:
    """Exponential-lift bound on a finite horizon for analytic fields."""
    if not (D0 > 0 and R > 0):
        raise InvalidArgument(f"D0 and R must be positive, got D0={D0}, R={R}")
    x0 = _x0(x0)
    W = exp(-float(np.min(x0.imag)))
    consts = {"D0": D0, "R": R, "W": W}
    if not W < R / e:
        return _inadmissible("fourier", f"|exp(i x0)|_inf = {W:.17g} is not below R/e = {R / e:.17g}", **consts)
    horizon = KAPPA / D0 * (log(R) - log(W) - 1)
    C0 = exp(
        (3 * e - 1) / (2 * e - 1) * float(np.max(x0.imag)) + (3 * e - 1) / (2 * e - 1) * log(R) - e / (2 * e - 1)
    ) / (sqrt(2 * pi) * (e - 1))
    log_base = log(e * W / R)
    consts.update(C0=C0, rate0=exp(KAPPA * log_base))

    def formula(N, t):
        return C0 * N**-1.5 * exp(D0 * t * N + KAPPA * N * log_base)

    def condition(N, T):
        return C0 * N**-1.5 * exp(-D0 * (horizon - T) * N)

    return BoundsReport("fourier", True, "ok", horizon, consts, formula, condition)


def shortrange_state_bound(W: float, R: float) -> float:
    """Ceiling on ``|exp(i x(t))|_inf`` over the short-range horizon, given ``W = |exp(i x0)|_inf``."""
    return W**KAPPA * (R / e) ** (e / (2 * e - 1))


def optimize_scalar_TCF(im_x0: float) -> tuple[float, float]:
    """Radius maximizing the short-range horizon of ``a(1 - exp(i x))`` with ``|a| = 1``.

    With ``D0 = max(1, R)`` the horizon is ``KAPPA (ln R + Im x0 - 1) / max(1, R)``;
    its maximizer is ``R = exp(2 - Im x0)`` when ``Im x0 <= 2`` and ``R = 1`` otherwise.
    """
    if im_x0 <= 2:
        return exp(2 - im_x0), KAPPA * exp(im_x0 - 2)
    return 1.0, KAPPA * (im_x0 - 1)


def optimize_radius(
    make_report: Callable[[float], BoundsReport], ln_lo: float = -10.0, ln_hi: float = 10.0, points: int = 4001
) -> tuple[float, BoundsReport]:
    """Radius maximizing the horizon (short-range) or minimizing the base ratio (whole-range).

    Scans ``points`` values of ``ln R`` on ``[ln_lo, ln_hi]`` and refines the
    best one with a bounded scalar search between its neighbours. Radii where
    ``make_report`` raises or is inadmissible are skipped.
    """

    def score(lnR: float) -> float:
        try:
            report = make_report(exp(lnR))
        except LiftError:
            return inf
        if not report.admissible:
            return inf
        if isfinite(report.horizon):
            return -report.horizon
        return report.constants["ratio"]

    grid = np.linspace(ln_lo, ln_hi, points)
    scores = np.array([score(x) for x in grid])
    best = int(np.argmin(scores))
    if not isfinite(scores[best]):
        raise NoOrder("no radius in the scanned range gives an admissible report")
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, points - 1)]
    refined = minimize_scalar(score, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    lnR = float(refined.x) if refined.fun <= scores[best] else float(grid[best])
    return exp(lnR), make_report(exp(lnR))


def scalar_horizon(R: float, im_x0: float) -> float:
    """Short-range horizon of the unit-modulus scalar example at radius ``R``."""
    return KAPPA * (log(R) + im_x0 - 1) / max(1.0, R)


def fourier_wholerange_bounds(D0: float, R: float, mu0: float, x0) -> BoundsReport:
    """Exponential-lift bound valid for all times when the mean term pushes ``Im x`` upward.

    The prefactor is ``D0 R / mu0``; :meth:`BoundsReport.bound` ignores ``t``.
    """
    if not mu0 > 0:
        raise HypothesisViolation(f"mu0 must be positive, got {mu0}")
    if not (D0 > 0 and R > 0):
        raise InvalidArgument(f"D0 and R must be positive, got D0={D0}, R={R}")
    x0 = _x0(x0)
    u0 = float(np.linalg.norm(np.exp(1j * x0)))
    threshold = mu0 * R / (D0 + mu0)
    consts = {"D0": D0, "R": R, "mu0": mu0, "u0": u0, "threshold": threshold}
    if not u0 < threshold:
        return _inadmissible("fourier-whole", f"|exp(i x0)|_2 = {u0:.17g} is not below {threshold:.17g}", **consts)
    ratio = (D0 + mu0) * u0 / (mu0 * R)
    prefactor = D0 * R / mu0
    inv = float(np.max(np.exp(x0.imag)))
    consts.update(ratio=ratio, prefactor=prefactor, exp_minus_ix0_inf=inv)

    def formula(N, t):
        return prefactor * ratio**N

    def condition(N, T):
        return mu0 * R * inv / D0 * ratio**N * exp((D0 + mu0) * T)

    return BoundsReport("fourier-whole", True, "ok", inf, consts, formula, condition)


def wholerange_u_envelope(u0: float, D0: float, R: float, mu0: float, t):
    """Decay envelope ``u0 exp(-(mu0 - D0 u0 / (R - u0)) t)`` for ``|exp(i x(t))|_2``."""
    return u0 * np.exp(-(mu0 - D0 * u0 / (R - u0)) * np.asarray(t, dtype=float))


def _multifreq_spread(omegas, x0) -> float:
    x0 = _x0(x0)
    return float(max(np.max(np.abs((complex(w) * x0).imag)) for w in omegas))


def multifreq_bounds(D1: float, R: float, omegas, x0) -> BoundsReport:
    """Two-sided extended-lift bound on a finite horizon."""
    if not R > e:
        raise InvalidRegime(f"the extended bound needs R > e, got {R}")
    if not D1 > 0:
        raise InvalidArgument(f"D1 must be positive, got {D1}")
    m = _multifreq_spread(omegas, x0)
    lnR = log(R)
    consts = {"D1": D1, "R": R, "spread": m}
    if not m < lnR - 1:
        return _inadmissible("multifreq", f"max |Im(omega x0)| = {m:.17g} is not below ln(R) - 1 = {lnR - 1:.17g}", **consts)
    horizon = KAPPA / D1 * (lnR - 1 - m)
    C1 = exp((3 * e - 1) / (2 * e - 1) * lnR + KAPPA * m - e / (2 * e - 1)) / (sqrt(2 * pi) * (e - 1))
    consts.update(C1=C1, C1_ceiling=multifreq_C1_ceiling(R))

    def formula(N, t):
        return C1 * N**-1.5 * exp(D1 * (t - horizon) * N)

    return BoundsReport("multifreq", True, "ok", horizon, consts, formula, formula)


def multifreq_C1_ceiling(R: float) -> float:
    """Upper bound on the two-sided constant valid for every admissible initial state.

    Follows from the spread being below ``ln R - 1``.
    """
    return R**2 / (sqrt(2 * pi) * e * (e - 1))


def alternative_C1_ceiling(R: float) -> float:
    """The alternative ceiling ``R^2 / (2 pi e (e-1))``; it dominates the constant only for large R."""
    return R**2 / (2 * pi * e * (e - 1))


def phase_average_bound(D1: float, omegas, N: int, T_target: float, horizon: float) -> float:
    """Error bound for phases recovered by averaging the copies of a two-sided lift."""
    w = min(abs(complex(o)) for o in omegas)
    return 2 / (pi * e * (e - 1) * w) * N**-1.5 * exp(D1 * (T_target - horizon) * N)


def positive_wholerange_bounds(D2: float, R: float, muhat0: float, omegas, x0) -> BoundsReport:
    """Positive-frequency extended-lift bound valid for all times.

    The prefactor is ``muhat0 R / D2``; :meth:`BoundsReport.bound` ignores ``t``.
    """
    if not muhat0 > 0:
        raise HypothesisViolation(f"muhat0 must be positive, got {muhat0}")
    if not (D2 > 0 and R > 0):
        raise InvalidArgument(f"D2 and R must be positive, got D2={D2}, R={R}")
    x0 = _x0(x0)
    tau = positive_tau(omegas, x0)
    threshold = muhat0 * R / (D2 + muhat0)
    consts = {"D2": D2, "R": R, "muhat0": muhat0, "tau": tau, "threshold": threshold}
    if not tau < threshold:
        return _inadmissible("positive", f"tau = {tau:.17g} is not below {threshold:.17g}", **consts)
    ratio = (D2 + muhat0) * tau / (muhat0 * R)
    prefactor = muhat0 * R / D2
    inv = float(max(np.max(np.exp((complex(w) * x0).imag)) for w in omegas))
    consts.update(ratio=ratio, prefactor=prefactor, exp_minus_ix0_inf=inv)

    def formula(N, t):
        return prefactor * ratio**N

    def condition(N, T):
        return muhat0 * R * inv / D2 * ratio**N * exp((D2 + muhat0) * T)

    return BoundsReport("positive", True, "ok", inf, consts, formula, condition)


def positive_tau(omegas, x0) -> float:
    """``sqrt(sum_l sum_j exp(-2 Im(omega_l x0_j)))``."""
    x0 = _x0(x0)
    return float(sqrt(sum(np.sum(np.exp(-2 * (complex(w) * x0).imag)) for w in omegas)))


def muhat0_of(omegas, g0) -> float:
    """``min_{l,j} Im(omega_l g0_j)`` for the constant coefficient ``g0``."""
    g0 = np.asarray(g0, dtype=complex)
    return float(min(np.min((complex(w) * g0).imag) for w in omegas))


def order_for_tolerance(report: BoundsReport, T_target: float, slack: float = 0.5) -> int:
    """Smallest order whose corollary condition at ``T_target`` is at most ``slack``.

    Scans ``N = 1, 2, ...`` up to 10^4; raises :class:`NoOrder` when the
    report is inadmissible or no order qualifies.
    """
    if not report.admissible or report._condition is None:
        raise NoOrder(f"{report.scheme} report is not admissible: {report.reason}")
    if T_target < 0 or (isfinite(report.horizon) and not T_target < report.horizon):
        raise InvalidArgument(f"target time {T_target} must lie in [0, {report.horizon})")
    ratio = report.constants.get("ratio")
    if ratio is not None and ratio >= 1:
        raise NoOrder("base ratio is not below 1")
    for N in range(1, MAX_ORDER_SCAN + 1):
        if report._condition(N, T_target) <= slack:
            return N
    raise NoOrder(f"no order up to {MAX_ORDER_SCAN} meets the condition")


def comparison_horizon(D0: float, R: float, x0) -> float:
    """Short-range horizon of the two-sided lift of a single-frequency field."""
    x0 = _x0(x0)
    spread = float(np.max(np.abs(x0.imag)))
    return KAPPA / (2 * D0) * (log(R) - 1 - spread)


def comparison_rate(D0: float, R: float, x0, t: float) -> float:
    x0 = _x0(x0)
    spread = float(np.max(np.abs(x0.imag)))
    return exp(2 * D0 * t) * exp(KAPPA * (1 + spread - log(R)))


@dataclass(frozen=True)
class SchemeComparison:
    carleman_horizon: float
    fourier_horizon: float
    horizon_dominance: bool
    rate_dominance: bool
    worst_rate_ratio: float


def compare_schemes(D0: float, R: float, x0, grid_points: int = 32) -> SchemeComparison:
    """Compare the monomial and two-sided exponential horizons and rates.

    Valid for ``R >= exp(e/(e-1))`` and ``1 <= |x0|_inf < ln(R)/e``. Rates are
    compared on ``grid_points`` uniform times over the monomial horizon.
    """
    x0 = _x0(x0)
    norm = float(np.max(np.abs(x0)))
    if not (R >= exp(e / (e - 1)) and 1 <= norm < log(R) / e):
        raise RegimeViolation(f"need R >= exp(e/(e-1)) and 1 <= |x0|_inf < ln(R)/e, got R={R}, |x0|_inf={norm}")
    TC = carleman_bounds(D0, R, norm).horizon
    TF = comparison_horizon(D0, R, x0)
    ratios = [comparison_rate(D0, R, x0, t) / carleman_rate(D0, R, norm, t) for t in np.linspace(0, TC, grid_points)]
    worst = max(ratios)
    return SchemeComparison(TC, TF, TC <= TF, worst <= 1.0, worst)
