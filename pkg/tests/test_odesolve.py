import cmath
from math import comb, pi

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from periodiclift.errors import InvalidArgument, NearSingularity
from periodiclift.lift_carleman import LiftedSystem, graded_basis
from periodiclift.lift_fourier import fourier_finite_section
from periodiclift.odesolve import (
    BLOWUP,
    COMPLETED,
    STEP_FAILURE,
    SolveConfig,
    Trajectory,
    blowup_time,
    closed_form_v,
    closed_form_x,
    dopri_step,
    integrate,
    integrate_linear,
    integrate_nonlinear,
)
from periodiclift.trigsystem import kuramoto_analytic, scalar_example

BLOWUP_X0 = pi / 3  # exp(i x0) has real part 1/2


def formula_x(a, x0, t):
    """Principal-branch closed form, valid while the log argument stays off the negative axis."""
    return a * t + x0 + 1j * cmath.log(1 + (cmath.exp(1j * a * t) - 1) * cmath.exp(1j * x0))


class TestClosedFormX:
    def test_equilibrium(self):
        assert closed_form_x(1, 0, 3.7) == pytest.approx(0, abs=1e-14)

    def test_derived_value(self):
        expected = 2j + 1j * np.log(1 - (1 - np.exp(-1)) * np.exp(-1))
        assert closed_form_x(1j, 1j, 1.0) == pytest.approx(expected, abs=1e-14)

    def test_matches_integration(self):
        traj = integrate_nonlinear(scalar_example(1j), [1j], 1.0, SolveConfig(1e-12, 1e-14))
        np.testing.assert_allclose(traj.states[:, 0], closed_form_x(1j, 1j, traj.times), atol=1e-10)

    def test_near_singularity_at_blowup(self):
        t0 = blowup_time(1, BLOWUP_X0)
        assert t0 == pytest.approx(pi / 3)
        with pytest.raises(NearSingularity):
            closed_form_x(1, BLOWUP_X0, np.linspace(0, 2, 50))

    def test_branch_is_continuous_over_long_times(self):
        # a = 1 with Im x0 > 0: the log argument circles without reaching zero
        t = np.linspace(0, 40, 4001)
        x = closed_form_x(1, 0.3 + 0.8j, t)
        assert np.abs(np.diff(x)).max() < 0.1
        assert closed_form_x(1, 0.3 + 0.8j, 0.0) == 0.3 + 0.8j

    def test_negative_time_rejected(self):
        with pytest.raises(InvalidArgument):
            closed_form_x(1, 0.1, -1.0)


class TestClosedFormV:
    def test_top_component_and_initial_value(self):
        a, x0, N = 0.3 + 1j, 0.2 + 0.1j, 5
        t = 0.7
        v = closed_form_v(a, x0, N, t)
        assert v[N - 1] == pytest.approx(cmath.exp(1j * N * (a * t + x0)))
        np.testing.assert_allclose(closed_form_v(a, x0, N, 0.0), np.exp(1j * np.arange(1, N + 1) * x0))

    def test_derived_value(self):
        w = cmath.exp(1j * pi / 3)
        assert closed_form_v(1, 0, 2, pi / 3)[0] == pytest.approx(w * (1 - (w - 1)))

    def test_array_shape(self):
        assert closed_form_v(1, 0, 4, np.linspace(0, 1, 7)).shape == (7, 4)

    @given(st.integers(1, 8), st.floats(0, 1))
    def test_matches_explicit_sum(self, N, t):
        a, x0 = 1j, 0.3 + 0.2j
        q = -cmath.exp(1j * x0) * (cmath.exp(1j * a * t) - 1)
        v = closed_form_v(a, x0, N, t)
        for k in range(1, N + 1):
            ref = cmath.exp(1j * k * (a * t + x0)) * sum(comb(k + l - 1, l) * q**l for l in range(N - k + 1))
            assert v[k - 1] == pytest.approx(ref, rel=1e-12, abs=1e-14)


class TestNonlinear:
    def test_equilibrium(self):
        traj = integrate_nonlinear(scalar_example(1), [0.0], 2.0)
        assert traj.status == COMPLETED
        assert np.all(traj.states == 0)
        assert traj.times.size == 512

    def test_blowup_detected_near_singular_time(self):
        traj = integrate_nonlinear(scalar_example(1), [BLOWUP_X0], 3.0)
        assert traj.status == BLOWUP
        assert traj.blowup_time == pytest.approx(pi / 3, abs=1e-6)
        assert traj.times[-1] == traj.blowup_time
        assert np.all(np.diff(traj.times) > 0)

    def test_kuramoto_phase_sum_conserved(self):
        sys = kuramoto_analytic([0.2, -0.5, 0.3], -3.0)
        traj = integrate_nonlinear(sys, [0.1, 0.1, -0.2], 5.0)
        assert np.abs(traj.states.sum(axis=1)).max() <= 1e-9
        sys0 = kuramoto_analytic([0, 0, 0], -3.0)
        traj0 = integrate_nonlinear(sys0, [0.1, 0.1, -0.2], 5.0)
        assert np.abs(traj0.states.sum(axis=1)).max() <= 1e-9

    def test_oracle_agreement(self, rng):
        for _ in range(20):
            a = cmath.exp(1j * rng.uniform(0.1, pi - 0.1))
            x0 = complex(rng.uniform(-1, 1), rng.uniform(0.2, 1.5))
            traj = integrate_nonlinear(scalar_example(a), [x0], 1.0)
            assert traj.completed
            np.testing.assert_allclose(traj.states[:, 0], closed_form_x(a, x0, traj.times), rtol=0, atol=1e-8)

    def test_output_grid_is_hit_exactly(self):
        grid = np.array([0.0, 0.1, 0.35, 1.0])
        traj = integrate_nonlinear(scalar_example(1j), [0.5], 1.0, SolveConfig(output_grid=grid))
        np.testing.assert_array_equal(traj.times, grid)

    def test_bad_arguments(self):
        with pytest.raises(InvalidArgument):
            integrate_nonlinear(scalar_example(1), [0.0], 0.0)
        with pytest.raises(InvalidArgument):
            integrate_nonlinear(scalar_example(1), [0.0, 1.0], 1.0)
        with pytest.raises(InvalidArgument):
            SolveConfig(rel_tol=0.0)
        with pytest.raises(InvalidArgument):
            SolveConfig(output_grid=np.array([0.0, 0.5, 0.4])).grid(1.0)


def lifted(matrix, initial, inhom=None):
    n = len(initial)
    basis = graded_basis(1, n)
    return LiftedSystem(
        "fourier",
        basis,
        np.asarray(matrix, dtype=complex),
        np.zeros(n, dtype=complex) if inhom is None else np.asarray(inhom, dtype=complex),
        np.asarray(initial, dtype=complex),
        np.eye(1, dtype=complex),
        "exponential",
    )


class TestLinear:
    def test_diagonal_propagator(self):
        lam = np.array([0.5j, -0.2 + 1j, 0.1 - 0.3j])
        w0 = np.array([1.0, 0.5 - 0.2j, 2j])
        traj = integrate_linear(lifted(np.diag(lam), w0), 2.0)
        expected = np.exp(np.outer(traj.times, lam)) * w0
        np.testing.assert_allclose(traj.states, expected, rtol=0, atol=1e-9)

    def test_zero_system_is_constant(self):
        w0 = np.array([1 + 2j, -3.0])
        traj = integrate_linear(lifted(np.zeros((2, 2)), w0), 1.0)
        np.testing.assert_array_equal(traj.states, np.tile(w0, (traj.times.size, 1)))

    def test_inhomogeneous_term(self):
        traj = integrate_linear(lifted(np.zeros((1, 1)), [0.0], inhom=[2.0 + 1j]), 1.5)
        np.testing.assert_allclose(traj.states[:, 0], (2 + 1j) * traj.times, atol=1e-12)

    def test_scalar_lift_matches_closed_form(self):
        a, x0 = 1j, 0.4 + 0.3j
        traj = integrate_linear(fourier_finite_section(scalar_example(a), [x0], 3), 1.0)
        np.testing.assert_allclose(traj.states, closed_form_v(a, x0, 3, traj.times), rtol=0, atol=1e-8)


class TestStepper:
    def test_fifth_order_convergence(self):
        # halving a fixed step shrinks the global error by about 2**5
        a, x0, T = 1j, 0.3 + 0.2j, 1.0
        f = lambda t, y: a * (1 - np.exp(1j * y))
        exact = closed_form_x(a, x0, T)
        errors = []
        for n in (8, 16, 32):
            y, h = np.array([x0]), T / n
            for i in range(n):
                y, _, _ = dopri_step(f, i * h, y, h)
            errors.append(abs(y[0] - exact))
        assert errors[0] / errors[1] > 16 and errors[1] / errors[2] > 16

    def test_tighter_tolerance_shrinks_error(self):
        a, x0 = 1, 0.5 + 0.3j
        errs = []
        for tol in (1e-4, 1e-6, 1e-8):
            cfg = SolveConfig(tol, tol * 1e-2, output_grid=np.array([0.0, 5.0]))
            traj = integrate_nonlinear(scalar_example(a), [x0], 5.0, cfg)
            errs.append(abs(traj.states[-1, 0] - closed_form_x(a, x0, 5.0)))
        assert errs[0] > 10 * errs[1] > 100 * errs[2]

    def test_step_failure_reported(self):
        # the field is finite but its derivative explodes close to the singular point
        traj = integrate(lambda t, y: 1 / (1 - t) ** 3 * np.ones_like(y), [0j], np.linspace(0, 1, 5),
                         SolveConfig(blowup_threshold=1e300))
        assert traj.status in (STEP_FAILURE, BLOWUP)
        assert not traj.completed

    def test_step_budget(self):
        traj = integrate(lambda t, y: 1j * 50 * y, [1 + 0j], np.linspace(0, 10, 3), SolveConfig(max_steps=5))
        assert traj.status == STEP_FAILURE
        assert traj.steps == 5


def test_csv_format():
    traj = Trajectory(np.array([0.0, 0.5]), np.array([[1 + 2j, 0.1], [3.0, -1j]]))
    lines = traj.to_csv().splitlines()
    assert lines[0] == "t,re_1,im_1,re_2,im_2"
    assert lines[1] == "0,1,2,0.10000000000000001,0"
    assert lines[2] == "0.5,3,0,-0,-1"


def test_blowup_time_none_when_log_argument_avoids_zero():
    assert blowup_time(1j, 0.5) is None
    assert blowup_time(1, 0.0) is None
