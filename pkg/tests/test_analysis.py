import math

import numpy as np
import pytest

from bearform.analysis import (DescentReport, detect_periodic_orbit, linearize_equilibrium,
                               lyapunov_series, lyapunov_v1, lyapunov_v1_dot,
                               stroboscopic_residual, verify_descent)
from bearform.control import ControllerConfig, Mode, PotentialSpec, speed_ideal_raw, speed_robust_raw
from bearform.dynamics import ControlPair, reduced_rhs
from bearform.errors import DescentViolation, NonpositiveDistance, WindowTooShort
from bearform.geometry import ReducedShapeState
from bearform.integrator import Trajectory

PI = math.pi
SPEC = PotentialSpec(2.0, 0.5)


class TestLyapunov:
    def test_zero_at_equilibrium(self):
        assert lyapunov_v1(ReducedShapeState(0.5, -PI / 2), SPEC) == pytest.approx(0.0, abs=1e-12)

    def test_hand_values(self):
        assert lyapunov_v1(ReducedShapeState(1.0, -PI / 2), SPEC) == pytest.approx(0.5, abs=1e-12)
        assert lyapunov_v1(ReducedShapeState(0.5, 0.0), SPEC) == pytest.approx(1.0, abs=1e-12)

    def test_nonnegative_and_zero_only_at_equilibrium(self):
        rng = np.random.default_rng(19)
        count = 0
        while count < 100_000:
            rho = rng.uniform(0.05, 3.0, 4096)
            a1 = rng.uniform(-PI, PI, 4096)
            v = lyapunov_series(rho, a1, SPEC)
            inside = v < 2.0
            v, rho, a1 = v[inside], rho[inside], a1[inside]
            assert np.all(v >= 0.0)
            far = (np.abs(rho - 0.5) > 1e-4) | (np.abs(a1 + PI / 2) > 1e-4)
            assert np.all(v[far] > 1e-10)
            count += int(np.sum(inside))

    def test_positive_distance_required(self):
        with pytest.raises(ValueError):
            lyapunov_v1(ReducedShapeState(-0.1, 0.0), SPEC)

    def test_dot_zero_at_target_bearing(self):
        for mode in (Mode.IDEAL, Mode.ROBUST):
            v = lyapunov_v1_dot(ReducedShapeState(1.0, -PI / 2), 1.3, 1.0, mode)
            assert v == pytest.approx(0.0, abs=1e-12)

    def test_dot_hand_values(self):
        assert lyapunov_v1_dot(ReducedShapeState(1.0, 0.0), 0.0, 1.0,
                               Mode.IDEAL) == pytest.approx(-1.0, abs=1e-15)
        got = lyapunov_v1_dot(ReducedShapeState(1.0, PI / 4), 1.5, 1.0, Mode.ROBUST)
        assert got == pytest.approx(-0.5 - 1.5 * math.cos(PI / 4), abs=1e-12)
        assert got == pytest.approx(-1.56066, abs=1e-5)

    def test_dot_matches_chain_rule_ideal(self):
        # d/dt [1 + sin(a1) + g(rho)] along the closed loop with the ideal law
        rng = np.random.default_rng(29)
        for _ in range(200):
            rho = rng.uniform(0.1, 3.0)
            a1 = rng.uniform(-PI, PI)
            v1 = rng.uniform(0.05, 2.0)
            u1 = rng.uniform(-2, 2)
            v2 = speed_ideal_raw(rho, a1, v1, u1, 1.0, SPEC.mu_rho, SPEC.rho0)
            rates = reduced_rhs(ReducedShapeState(rho, a1), ControlPair(v1, u1), v2)
            f = SPEC.mu_rho * (rho * rho - SPEC.rho0 ** 2) / (rho * rho)
            chain = math.cos(a1) * rates.dalpha1 + f * rates.drho
            analytic = lyapunov_v1_dot(ReducedShapeState(rho, a1), u1, 1.0, Mode.IDEAL)
            assert chain == pytest.approx(analytic, abs=1e-12)

    def test_dot_matches_chain_rule_robust(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            rho = rng.uniform(0.1, 3.0)
            a1 = rng.uniform(-PI, PI)
            v1 = rng.uniform(0.05, 2.0)
            u1 = rng.uniform(-2, 2)
            v2 = speed_robust_raw(rho, a1, v1, 1.0, SPEC.mu_rho, SPEC.rho0)
            rates = reduced_rhs(ReducedShapeState(rho, a1), ControlPair(v1, u1), v2)
            f = SPEC.mu_rho * (rho * rho - SPEC.rho0 ** 2) / (rho * rho)
            chain = math.cos(a1) * rates.dalpha1 + f * rates.drho
            analytic = lyapunov_v1_dot(ReducedShapeState(rho, a1), u1, 1.0, Mode.ROBUST)
            assert chain == pytest.approx(analytic, abs=1e-12)


class TestLinearization:
    def test_paper_gains_exact(self):
        rep = linearize_equilibrium(0.5, 1.0, SPEC)
        assert rep.A == ((0.0, -0.5), (4.0, -1.0))
        root7 = math.sqrt(7.0)
        assert rep.eigenvalues[0].real == pytest.approx(-0.5, abs=1e-12)
        assert abs(rep.eigenvalues[0].imag) == pytest.approx(root7 / 2, abs=1e-12)
        assert rep.hurwitz

    def test_eigenvalues_satisfy_characteristic_polynomial(self):
        rng = np.random.default_rng(37)
        for _ in range(200):
            v1 = rng.uniform(0.05, 3)
            mu1 = rng.uniform(0.05, 3)
            spec = PotentialSpec(rng.uniform(0.1, 10), rng.uniform(0.05, 2))
            rep = linearize_equilibrium(v1, mu1, spec)
            det = v1 * v1 * 2 * spec.mu_rho / spec.rho0
            for ev in rep.eigenvalues:
                assert abs(ev * ev + mu1 * ev + det) < 1e-12 * max(1.0, det)

    def test_matches_numpy_eigvals(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            v1 = rng.uniform(0.05, 3)
            mu1 = rng.uniform(0.05, 3)
            spec = PotentialSpec(rng.uniform(0.1, 10), rng.uniform(0.05, 2))
            rep = linearize_equilibrium(v1, mu1, spec)
            ref = sorted(np.linalg.eigvals(np.array(rep.A)), key=lambda z: (z.real, z.imag))
            got = sorted(rep.eigenvalues, key=lambda z: (z.real, z.imag))
            for a, b in zip(ref, got):
                assert abs(a - b) < 1e-10

    def test_zero_damping_limit_not_hurwitz(self):
        rep = linearize_equilibrium(0.5, 0.0, SPEC)
        assert rep.eigenvalues[0].real == pytest.approx(0.0, abs=1e-15)
        assert not rep.hurwitz

    def test_hurwitz_for_all_valid_gains(self):
        rng = np.random.default_rng(43)
        for _ in range(1000):
            rep = linearize_equilibrium(rng.uniform(1e-3, 10), rng.uniform(1e-3, 10),
                                        PotentialSpec(rng.uniform(1e-3, 50),
                                                      rng.uniform(1e-3, 5)))
            assert rep.hurwitz

    def test_requires_positive_speed(self):
        with pytest.raises(ValueError):
            linearize_equilibrium(0.0, 1.0, SPEC)


def synthetic_orbit(t_end=40.0, dt=0.01, period=2.0, eps=0.0):
    """(rho, alpha1) trajectory converging to a T-periodic orbit."""
    t = np.arange(0.0, t_end + dt / 2, dt)
    decay = np.exp(-0.5 * t)
    rho = 0.5 + 0.05 * np.sin(2 * PI * t / period) + 0.3 * decay + eps * np.sin(0.37 * t)
    a1 = -PI / 2 + 0.1 * np.cos(2 * PI * t / period) + 0.2 * decay
    return Trajectory(times=t, states=np.column_stack([rho, a1]))


class TestPeriodicity:
    def test_constant_trajectory_zero_residual(self):
        t = np.arange(0.0, 20.0 + 1e-9, 0.01)
        states = np.column_stack([np.full_like(t, 0.5), np.full_like(t, -PI / 2)])
        for period in (0.5, 2.0, 3.0):
            rep = detect_periodic_orbit(Trajectory(times=t, states=states), period, 5.0)
            assert rep.residual == 0.0
            assert rep.converged

    def test_synthetic_orbit_right_period(self):
        rep = detect_periodic_orbit(synthetic_orbit(), 2.0, 30.0)
        assert rep.residual < 1e-3
        assert rep.converged

    def test_synthetic_orbit_wrong_period(self):
        rep = detect_periodic_orbit(synthetic_orbit(), 1.5, 30.0)
        assert rep.residual > 1e-2
        assert not rep.converged

    def test_angles_compared_on_circle(self):
        # an alpha trace wandering across the pi wrap must not inflate the residual
        t = np.arange(0.0, 20.0 + 1e-9, 0.01)
        a1 = PI - 0.05 + 0.1 * np.sin(2 * PI * t / 2.0)  # crosses the wrap line
        a1_wrapped = np.arctan2(np.sin(a1), np.cos(a1))
        states = np.column_stack([np.full_like(t, 0.5), a1_wrapped])
        rep = detect_periodic_orbit(Trajectory(times=t, states=states), 2.0, 5.0)
        assert rep.residual < 1e-9

    def test_settle_shift_by_one_period_keeps_verdict(self):
        traj = synthetic_orbit()
        a = detect_periodic_orbit(traj, 2.0, 30.0)
        b = detect_periodic_orbit(traj, 2.0, 32.0)
        assert b.residual <= a.residual + 1e-12
        assert a.converged == b.converged

    def test_window_too_short(self):
        with pytest.raises(WindowTooShort):
            detect_periodic_orbit(synthetic_orbit(t_end=10.0), 2.0, 8.0)

    def test_period_must_align_with_grid(self):
        with pytest.raises(ValueError):
            detect_periodic_orbit(synthetic_orbit(), 2.0005, 30.0)

    def test_residual_function_counts_pairs(self):
        traj = synthetic_orbit()
        residual, n_pairs = stroboscopic_residual(traj.times, traj.states[:, 0],
                                                  traj.states[:, 1], 2.0, 30.0)
        assert n_pairs == len(traj.times) - 200 - int(round(30.0 / 0.01))


def make_cfg(mode=Mode.IDEAL):
    return ControllerConfig(mu1=1.0, mu2=2.0, potential=SPEC, mode=mode)


class TestVerifyDescent:
    def test_equilibrium_trajectory_trivially_passes(self):
        t = np.arange(0.0, 10.0 + 1e-9, 0.01)
        states = np.column_stack([np.full_like(t, 0.5), np.full_like(t, -PI / 2),
                                  np.full_like(t, PI / 2)])
        rep = verify_descent(Trajectory(times=t, states=states), make_cfg(),
                             np.zeros_like(t), 1.5)
        assert rep.passed
        assert not rep.violations
        assert rep.fd_max_mismatch < 1e-12
        assert rep.region_entered_at == 0.0

    def test_fabricated_ascent_is_flagged(self):
        # a trajectory moving up the potential with alpha1 != -pi/2 cannot have
        # been produced by the certified law; the FD cross-check must fire
        t = np.arange(0.0, 5.0 + 1e-9, 0.01)
        rho = 0.5 + 0.3 * t / 5.0
        a1 = np.full_like(t, -PI / 2 + 0.6)
        states = np.column_stack([rho, a1, np.full_like(t, PI / 2)])
        rep = verify_descent(Trajectory(times=t, states=states), make_cfg(),
                             np.zeros_like(t), 1.0)
        assert not rep.passed
        with pytest.raises(DescentViolation):
            rep.raise_if_failed()

    def test_robust_margin_set_empty_when_bound_exceeds_gain(self):
        t = np.arange(0.0, 5.0 + 1e-9, 0.01)
        states = np.column_stack([np.full_like(t, 0.5), np.full_like(t, -PI / 2),
                                  np.full_like(t, PI / 2)])
        rep = verify_descent(Trajectory(times=t, states=states),
                             make_cfg(Mode.ROBUST), np.zeros_like(t), k_u=1.5)
        assert rep.n_checked == 0
        assert rep.passed

    def test_paper_run_reports(self, fig2a_run, fig2b_run):
        rep = fig2a_run.descent[0]
        assert rep.passed
        assert rep.monotone_increases == 0
        assert rep.monotone_max_increase < 1e-9
        assert rep.fd_max_mismatch < rep.fd_tolerance
        assert fig2b_run.descent[0].passed

    def test_report_serialization_round_trip(self, fig2a_run):
        d = fig2a_run.descent[0].to_dict()
        assert set(d) == {"mode", "n_samples", "n_checked", "n_clamped",
                          "region_entered_at", "fd_max_mismatch", "fd_tolerance",
                          "violations", "monotone_increases", "monotone_max_increase",
                          "passed"}
