import json
from math import e, exp, inf, log, pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from periodiclift.bounds import (
    KAPPA,
    carleman_bounds,
    compare_schemes,
    fourier_shortrange_bounds,
    fourier_wholerange_bounds,
    multifreq_bounds,
    multifreq_C1_ceiling,
    muhat0_of,
    optimize_radius,
    optimize_scalar_TCF,
    order_for_tolerance,
    positive_tau,
    positive_wholerange_bounds,
    alternative_C1_ceiling,
    scalar_horizon,
    shortrange_state_bound,
    wholerange_u_envelope,
)
from periodiclift.errors import HypothesisViolation, InvalidArgument, InvalidRegime, NoOrder, RegimeViolation
from periodiclift.trigsystem import decay_certificate, scalar_example


def scalar_fourier_report(R, im_x0):
    D0 = decay_certificate(scalar_example(1), R).D
    return fourier_shortrange_bounds(D0, R, [1j * im_x0])


class TestCarleman:
    def test_horizon_example(self):
        # direct evaluation of kappa * ln(ln R / (e x0)) * ln(R)^2 / (D0 R)
        report = carleman_bounds(1.0, e**2, 0.5)
        assert report.admissible
        assert report.horizon == pytest.approx(0.080991, abs=5e-7)
        assert report.horizon == pytest.approx(KAPPA * log(4 / e) * 4 / e**2, rel=1e-15)

    def test_zero_initial_state_gives_zero_bound(self):
        report = carleman_bounds(2.0, 5.0, 0.0)
        assert report.horizon == inf
        assert all(report.bound(N, t) == 0.0 for N in (1, 4, 9) for t in (0.0, 3.0))

    def test_boundary_is_inadmissible(self):
        report = carleman_bounds(1.0, e**2, 2 / e)
        assert not report.admissible
        assert report.horizon is None
        with pytest.raises(InvalidArgument):
            report.bound(1, 0.0)

    def test_formula(self):
        D0, R, x0, N, t = 1.5, 9.0, 0.3, 4, 0.01
        lnR = log(R)
        expected = R / (sqrt(2 * pi) * (e - 1)) * N**-1.5 * exp(D0 * R * N * t / lnR**2) * (x0 * e / lnR) ** (KAPPA * N)
        assert carleman_bounds(D0, R, x0).bound(N, t) == pytest.approx(expected, rel=1e-13)

    def test_radius_at_most_one_rejected(self):
        with pytest.raises(InvalidRegime):
            carleman_bounds(1.0, 1.0, 0.1)

    def test_nonvanishing_field_flagged(self):
        report = carleman_bounds(1.0, e**2, 0.1, g_at_origin=[0.5])
        assert not report.admissible
        assert report.reason.startswith("hypothesis-violation")


class TestFourierShortRange:
    def test_reference_decimals(self):
        assert optimize_scalar_TCF(0)[1] == pytest.approx(0.0524, abs=1e-4)
        assert optimize_scalar_TCF(2)[1] == pytest.approx(0.3873, abs=1e-4)

    def test_second_branch(self):
        R, T = optimize_scalar_TCF(3)
        assert R == 1.0
        assert T == pytest.approx(2 * KAPPA, rel=1e-15)
        assert T == pytest.approx(0.77460, abs=1e-5)

    @pytest.mark.parametrize("im_x0", [0.0, 0.7, 2.0, 3.0])
    def test_closed_form_matches_grid_maximization(self, im_x0):
        lnR = np.linspace(0.0, 6.0, 10_000)
        grid = max(scalar_horizon(exp(x), im_x0) for x in lnR)
        assert optimize_scalar_TCF(im_x0)[1] == pytest.approx(grid, rel=1e-6)

    @pytest.mark.parametrize("im_x0, expected", [(0.0, 0.0524), (2.0, 0.3873)])
    def test_generic_optimizer_reproduces_decimals(self, im_x0, expected):
        R, report = optimize_radius(lambda R: scalar_fourier_report(R, im_x0))
        assert report.horizon == pytest.approx(expected, abs=1e-4)
        assert R == pytest.approx(optimize_scalar_TCF(im_x0)[0], rel=1e-3)

    def test_horizon_and_bound_formula(self):
        D0, R, x0 = 2.0, 20.0, np.array([0.3 + 0.5j, -0.2 + 0.9j])
        report = fourier_shortrange_bounds(D0, R, x0)
        W = exp(-0.5)
        assert report.horizon == pytest.approx(KAPPA / D0 * (log(R) - log(W) - 1), rel=1e-14)
        C0 = report.constants["C0"]
        N, t = 3, 0.05
        expected = C0 * N**-1.5 * exp(D0 * t * N) * (e * W / R) ** (KAPPA * N)
        assert report.bound(N, t) == pytest.approx(expected, rel=1e-13)

    def test_C0_real_initial_state(self):
        R = 10.0
        C0 = fourier_shortrange_bounds(1.0, R, [0.4]).constants["C0"]
        expected = exp((3 * e - 1) / (2 * e - 1) * log(R) - e / (2 * e - 1)) / (sqrt(2 * pi) * (e - 1))
        assert C0 == pytest.approx(expected, rel=1e-14)

    def test_bound_vanishes_as_imaginary_part_grows(self):
        # C0 grows with max Im x0, so the decay needs KAPPA * N above (3e-1)/(2e-1)
        values = [fourier_shortrange_bounds(1.0, 10.0, [1j * s]).bound(8, 0.01) for s in (1, 10, 100)]
        assert values[0] > values[1] > values[2]
        assert values[2] < 1e-20
        low = [fourier_shortrange_bounds(1.0, 10.0, [1j * s]).bound(3, 0.01) for s in (1, 10)]
        assert low[1] > low[0]

    def test_admissibility_boundary(self):
        R = 5.0
        report = fourier_shortrange_bounds(1.0, R, [-1j * log(R / e)])
        assert not report.admissible

    def test_state_ceiling_at_least_initial(self):
        assert shortrange_state_bound(0.5, 10.0) >= 0.5


class TestWholeRange:
    def test_example(self):
        report = fourier_wholerange_bounds(10.0, 10.0, 1.0, [1.5j])
        assert report.admissible
        assert report.horizon == inf
        assert report.constants["u0"] == pytest.approx(exp(-1.5))
        assert report.constants["ratio"] == pytest.approx(0.24544, abs=1e-5)
        for N in range(1, 9):
            assert report.bound(N, 0.0) == pytest.approx(100 * (11 * exp(-1.5) / 10) ** N, rel=1e-14)
            assert report.bound(N, 0.0) == report.bound(N, 50.0)

    def test_boundary_inadmissible(self):
        # u0 = exp(1 - ln 11) = 10/11 exactly at the threshold
        threshold = 10 / 11
        report = fourier_wholerange_bounds(10.0, 10.0, 1.0, [-1j * log(threshold)])
        assert report.constants["u0"] == pytest.approx(threshold, rel=1e-15)
        if report.constants["u0"] >= threshold:
            assert not report.admissible

    def test_nonpositive_mu0(self):
        with pytest.raises(HypothesisViolation):
            fourier_wholerange_bounds(1.0, 2.0, 0.0, [1j])

    def test_supremal_threshold_is_real_axis(self):
        # a = i gives mu0 = 1 and D0 = max(1, R); the threshold R/(max(1,R)+1) tends to 1 from below
        radii = np.exp(np.linspace(-5, 12, 400))

        def admissible_somewhere(im_x0):
            return any(fourier_wholerange_bounds(max(1.0, R), R, 1.0, [1j * im_x0]).admissible for R in radii)

        assert admissible_somewhere(0.01)
        assert not admissible_somewhere(0.0)
        assert not admissible_somewhere(-0.1)

    def test_envelope_decays(self):
        env = wholerange_u_envelope(0.2, 10.0, 10.0, 1.0, np.linspace(0, 5, 6))
        assert env[0] == 0.2
        assert np.all(np.diff(env) < 0)


class TestMultiFreq:
    def test_real_initial_state_horizon(self):
        D1, R = 4.0, 30.0
        report = multifreq_bounds(D1, R, [1.0, 2.0], [0.3, -1.2])
        assert report.horizon == pytest.approx((e - 1) * (log(R) - 1) / (D1 * (2 * e - 1)), rel=1e-14)

    def test_ceiling_holds_for_every_admissible_state(self, rng):
        for _ in range(100):
            R = exp(rng.uniform(1.05, 8))
            spread = rng.uniform(0, log(R) - 1)
            report = multifreq_bounds(1.0, R, [1.0], [1j * spread * rng.choice([-1, 1]) * 0.999])
            assert report.constants["C1"] <= multifreq_C1_ceiling(R) * (1 + 1e-12)

    def test_alternative_ceiling_only_for_large_radius(self):
        # the 2 pi variant of the ceiling undercuts the constant until R is roughly 29
        for R in (e**2, 10.0, 20.0):
            assert multifreq_bounds(1.0, R, [1.0], [0.0]).constants["C1"] > alternative_C1_ceiling(R)
        for R in (30.0, 100.0, 1e4):
            assert multifreq_bounds(1.0, R, [1.0], [0.0]).constants["C1"] <= alternative_C1_ceiling(R)

    def test_boundary_inadmissible(self):
        R = 20.0
        assert not multifreq_bounds(1.0, R, [1.0], [1j * (log(R) - 1)]).admissible

    def test_small_radius_rejected(self):
        with pytest.raises(InvalidRegime):
            multifreq_bounds(1.0, e, [1.0], [0.0])

    def test_bound_at_horizon(self):
        report = multifreq_bounds(3.0, 50.0, [1.0], [0.2j])
        assert report.bound(4, report.horizon) == pytest.approx(report.constants["C1"] * 4**-1.5, rel=1e-13)


class TestPositive:
    def test_example(self):
        # tau = 1 from x0 = 0 with a single frequency
        report = positive_wholerange_bounds(2.0, 8.0, 1.0, [1.0], [0.0])
        assert report.constants["tau"] == 1.0
        assert report.admissible
        assert report.bound(3) == pytest.approx(0.2109375, rel=1e-15)

    def test_single_frequency_collapses_to_wholerange(self):
        x0 = [0.2 + 0.9j, -0.4 + 1.3j]
        pos = positive_wholerange_bounds(3.0, 6.0, 0.8, [1.0], x0)
        whole = fourier_wholerange_bounds(3.0, 6.0, 0.8, x0)
        assert pos.constants["tau"] == pytest.approx(whole.constants["u0"], rel=1e-15)
        assert pos.constants["ratio"] == pytest.approx(whole.constants["ratio"], rel=1e-15)

    def test_tau_and_muhat0(self):
        omegas, x0 = [1.0, 0.5j], np.array([0.3 + 0.4j])
        expected = sqrt(exp(-2 * 0.4) + exp(-2 * 0.15))
        assert positive_tau(omegas, x0) == pytest.approx(expected, rel=1e-14)
        assert muhat0_of([1.0, 2.0], [0.5j]) == 0.5

    def test_inadmissible_and_hypothesis(self):
        assert not positive_wholerange_bounds(2.0, 8.0, 1.0, [1.0], [-1.0j]).admissible
        with pytest.raises(HypothesisViolation):
            positive_wholerange_bounds(2.0, 8.0, -1.0, [1.0], [0.0])


class TestOrderForTolerance:
    def test_minimal_order_scalar(self):
        report = scalar_fourier_report(1.0, 2.0)
        T = report.horizon / 2
        N = order_for_tolerance(report, T)
        assert report._condition(N, T) <= 0.5
        assert N == 1 or report._condition(N - 1, T) > 0.5

    def test_condition_below_slack_at_first_order(self):
        report = positive_wholerange_bounds(2.0, 8.0, 1.0, [1.0], [0.0])
        slack = report._condition(1, 0.0)
        assert order_for_tolerance(report, 0.0, slack=slack) == 1
        assert order_for_tolerance(report, 0.0, slack=0.99 * slack) > 1

    def test_inadmissible_report_has_no_order(self):
        with pytest.raises(NoOrder):
            order_for_tolerance(fourier_wholerange_bounds(1.0, 1.0, 1.0, [-2j]), 1.0)

    def test_target_outside_horizon(self):
        report = scalar_fourier_report(1.0, 2.0)
        with pytest.raises(InvalidArgument):
            order_for_tolerance(report, report.horizon)

    @settings(max_examples=50)
    @given(st.floats(0.5, 5.0), st.floats(3.0, 60.0), st.floats(0.0, 0.95))
    def test_minimality_property(self, D0, R, frac):
        report = fourier_shortrange_bounds(D0, R, [0.0])
        if not report.admissible:
            return
        T = frac * report.horizon
        try:
            N = order_for_tolerance(report, T)
        except NoOrder:
            return
        assert report._condition(N, T) <= 0.5
        assert all(report._condition(M, T) > 0.5 for M in range(1, N))


finite = dict(allow_nan=False, allow_infinity=False)


def strictly_decreasing(report, t):
    values = [report.bound(N, t) for N in range(1, 21)]
    return all(b < a for a, b in zip(values, values[1:]))


class TestMonotonicity:
    @settings(max_examples=50)
    @given(st.floats(0.1, 10), st.floats(1.5, 1e3), st.floats(0.01, 0.999), st.floats(0, 1))
    def test_carleman(self, D0, R, frac, tfrac):
        report = carleman_bounds(D0, R, frac * log(R) / e)
        assert report.admissible and report.horizon > 0
        assert strictly_decreasing(report, tfrac * report.horizon)

    @settings(max_examples=50)
    @given(st.floats(0.1, 10), st.floats(3.0, 1e3), st.floats(-1, 3), st.floats(0, 1))
    def test_fourier(self, D0, R, im_x0, tfrac):
        report = fourier_shortrange_bounds(D0, R, [0.3 + 1j * im_x0])
        if not report.admissible:
            return
        assert report.horizon > 0
        assert strictly_decreasing(report, tfrac * report.horizon)

    @settings(max_examples=50)
    @given(st.floats(0.1, 10), st.floats(3.0, 1e3), st.floats(0, 0.999), st.floats(0, 1))
    def test_multifreq(self, D1, R, sfrac, tfrac):
        report = multifreq_bounds(D1, R, [1.0, 0.5], [1j * sfrac * (log(R) - 1)])
        assert report.admissible and report.horizon > 0
        assert strictly_decreasing(report, tfrac * report.horizon)

    @settings(max_examples=50)
    @given(st.floats(0.1, 10), st.floats(0.5, 50), st.floats(0.1, 5), st.floats(0, 5))
    def test_wholerange(self, D0, R, mu0, im_x0):
        report = fourier_wholerange_bounds(D0, R, mu0, [1j * im_x0])
        if not report.admissible:
            return
        assert report.constants["ratio"] < 1
        assert strictly_decreasing(report, 0.0)

    @settings(max_examples=50)
    @given(st.floats(0.1, 10), st.floats(0.5, 50), st.floats(0.1, 5), st.floats(0, 5))
    def test_positive(self, D2, R, muhat0, im_x0):
        report = positive_wholerange_bounds(D2, R, muhat0, [1.0, 2.0], [1j * im_x0])
        if not report.admissible:
            return
        assert strictly_decreasing(report, 0.0)


class TestComparison:
    def test_example(self):
        result = compare_schemes(1.0, e**6, [1.5])
        assert result.carleman_horizon <= result.fourier_horizon
        assert result.horizon_dominance and result.rate_dominance

    def test_below_regime(self):
        with pytest.raises(RegimeViolation):
            compare_schemes(1.0, e**6, [0.5])

    @settings(max_examples=200)
    @given(
        st.floats(0.5, 5.0),
        st.floats(e + 1e-3, 12.0),
        st.floats(0.0, 1.0, exclude_max=True),
        st.floats(-pi, pi),
    )
    def test_dominance_property(self, D0, lnR, frac, angle):
        norm = 1 + frac * (lnR / e - 1)
        other = 0.9 * norm * complex(np.cos(angle), np.sin(angle))
        result = compare_schemes(D0, exp(lnR), [norm, other])
        assert result.horizon_dominance
        assert result.rate_dominance


def test_report_json_shape():
    report = carleman_bounds(1.0, e**2, 0.5)
    payload = json.loads(json.dumps(report.to_dict(orders=[1, 2], times=[0.0, 0.01])))
    assert set(payload) == {"scheme", "admissible", "reason", "horizon", "constants", "bound_samples"}
    assert len(payload["bound_samples"]) == 4
    assert payload["bound_samples"][0] == {"N": 1, "t": 0.0, "value": report.bound(1, 0.0)}
    assert carleman_bounds(1.0, e**2, 1.0).to_dict(orders=[1], times=[0.0])["bound_samples"] == []
