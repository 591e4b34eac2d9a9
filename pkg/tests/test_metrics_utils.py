import math

import numpy as np
import pytest

from spreading_utils.forcing_utils import fisher_model
from spreading_utils.freeboundary_utils import SINGLE, FrontState, FrontTrajectory, fb_evolve_single, initial_profile_single
from spreading_utils.metrics_utils import (
    SPREADING,
    UNDETERMINED,
    VANISHING,
    ClassificationOutcome,
    behind_front_gap,
    classify,
    critical_lengths,
    front_speed,
    mass_balance_residual,
    occupancy,
    ordering_violation,
    profiles_ordered,
    residual_norm,
    verdicts_monotone,
)


def synthetic_trajectory(times, h, snapshot_times, snapshot_x, snapshot_u, h_dot=None, mu=1.0):
    """Single-front trajectory assembled from given series, for post-processing checks"""
    times = np.asarray(times, dtype=float)
    h = np.asarray(h, dtype=float)
    h_dot = np.gradient(h, times) if h_dot is None else np.asarray(h_dot, dtype=float)
    zeros = np.zeros_like(times)
    final_x = np.asarray(snapshot_x[-1], dtype=float)
    final_state = FrontState(
        t=float(times[-1]), h=float(h[-1]), g=0.0, xi=final_x / final_x[-1], v=np.asarray(snapshot_u[-1], dtype=float),
        h_dot=float(h_dot[-1]), g_dot=0.0,
    )
    return FrontTrajectory(
        mode=SINGLE, model=fisher_model(), mu=mu, h0=float(h[0]), g0=0.0, N=len(final_x) - 1, dt=float(times[1] - times[0]),
        horizon=float(times[-1]), times=times, h=h, g=zeros, h_dot=h_dot, g_dot=zeros, mass=zeros, u_sup=zeros,
        u_at_0=zeros, reaction_integral=zeros, snapshot_times=np.asarray(snapshot_times, dtype=float),
        snapshot_x=tuple(np.asarray(x, dtype=float) for x in snapshot_x),
        snapshot_u=tuple(np.asarray(u, dtype=float) for u in snapshot_u), final_state=final_state, u0_sup=1.0,
    )


def step_profile(t=10.0):
    x = np.linspace(0.0, 20.0, 201)
    u = np.where(x > 15.0, 0.5, 1.0)
    u[-1] = 0.0
    return synthetic_trajectory([0.0, t], [20.0, 20.0], [t], [x], [u])


@pytest.fixture(scope="module")
def spreading_run():
    return fb_evolve_single(fisher_model(), 1.0, initial_profile_single(2.0), 2.0, N=200, dt=0.01, horizon=20.0)


class TestCriticalLengths:
    def test_fisher(self):
        assert critical_lengths(fisher_model()) == pytest.approx((math.pi / 2, math.pi))

    def test_scaling_with_mean(self):
        assert critical_lengths(fisher_model(a=4.0)) == pytest.approx((math.pi / 4, math.pi / 2))

    def test_rejects_nonpositive_mean(self):
        with pytest.raises(ValueError, match="mean"):
            critical_lengths(fisher_model(a=0.0))


class TestClassify:
    def test_spreading(self, spreading_run):
        outcome = classify(spreading_run)
        assert outcome.verdict == SPREADING
        assert outcome.h_final == pytest.approx(spreading_run.final_state.h)
        assert outcome.evidence["lstar"] == pytest.approx(math.pi / 2)

    def test_vanishing_below_lstar(self):
        traj = fb_evolve_single(fisher_model(), 0.05, initial_profile_single(1.2), 1.2, N=100, dt=0.01, horizon=30.0)
        outcome = classify(traj)
        assert outcome.verdict == VANISHING
        assert outcome.h_final <= 1.05 * math.pi / 2
        assert outcome.u_sup_final < 1e-4
        assert not outcome.evidence["slack_binding"]

    def test_spreading_with_small_carrying_capacity(self):
        model = fisher_model(a=1.0, b=20.0)
        traj = fb_evolve_single(model, 20.0, initial_profile_single(3.0, amplitude=0.05), 3.0, N=200, dt=0.01, horizon=40.0)
        outcome = classify(traj)
        assert outcome.evidence["spread_tol"] == pytest.approx(0.005)
        assert outcome.verdict == SPREADING

    def test_explicit_spread_tol(self, spreading_run):
        assert classify(spreading_run, spread_tol=2.0).verdict == UNDETERMINED

    def test_short_run_is_undetermined(self):
        traj = fb_evolve_single(fisher_model(), 1.0, initial_profile_single(2.0), 2.0, N=100, dt=0.01, horizon=1.0)
        assert classify(traj).verdict == UNDETERMINED

    def test_min_horizon(self, spreading_run):
        assert classify(spreading_run, min_horizon=100.0).verdict == UNDETERMINED

    def test_slack_binding_is_flagged(self):
        x = np.linspace(0.0, 1.6, 17)
        traj = synthetic_trajectory([0.0, 1.0], [1.6, 1.6], [1.0], [x], [np.zeros_like(x)], h_dot=[0.0, 0.0])
        outcome = classify(traj)
        assert outcome.verdict == VANISHING
        assert outcome.evidence["slack_binding"]

    def test_verdicts_monotone(self):
        assert verdicts_monotone([VANISHING, VANISHING, SPREADING, SPREADING])
        assert verdicts_monotone([SPREADING, SPREADING])
        assert not verdicts_monotone([SPREADING, VANISHING])
        assert not verdicts_monotone([VANISHING, SPREADING, VANISHING])
        assert not verdicts_monotone([VANISHING, UNDETERMINED, SPREADING])


class TestFrontSpeed:
    def test_linear_front(self):
        times = np.linspace(0.0, 40.0, 401)
        x = np.linspace(0.0, 63.0, 64)
        traj = synthetic_trajectory(times, 3.0 + 1.5 * times, [40.0], [x], [np.ones_like(x)])
        outcome = ClassificationOutcome(SPREADING, 63.0, 0.0, 1.0)
        estimate = front_speed(traj, outcome=outcome)
        assert estimate.slope == pytest.approx(1.5)
        assert estimate.intercept == pytest.approx(3.0)
        assert estimate.rms_residual == pytest.approx(0.0, abs=1e-9)
        assert estimate.window_start == pytest.approx(20.0)
        assert estimate.average_speed == pytest.approx(63.0 / 40.0)

    def test_needs_spreading(self):
        outcome = ClassificationOutcome(VANISHING, 1.0, 0.0, 0.0)
        with pytest.raises(ValueError, match="Spreading"):
            front_speed(step_profile(), outcome=outcome)

    def test_window_validation(self):
        with pytest.raises(ValueError, match="window_fraction"):
            front_speed(step_profile(), window_fraction=0.0)

    def test_simulated_front_below_kpp_speed(self, spreading_run):
        estimate = front_speed(spreading_run)
        assert 0.0 < estimate.slope < 2.0


class TestMassBalance:
    def test_residual_is_small(self):
        traj = fb_evolve_single(fisher_model(), 1.0, initial_profile_single(2.0), 2.0, N=200, dt=0.01, horizon=5.0, sample_stride=1)
        times, residual = mass_balance_residual(traj)
        assert len(times) == len(traj.times) - 1
        assert times[0] == 0.0
        assert residual_norm(times, residual) < 0.1

    def test_zero_solution_has_zero_residual(self):
        x = np.linspace(0.0, 2.0, 21)
        traj = synthetic_trajectory([0.0, 0.5, 1.0, 1.5], [2.0, 2.0, 2.0, 2.0], [1.5], [x], [np.zeros_like(x)], h_dot=[0.0] * 4)
        times, residual = mass_balance_residual(traj)
        assert list(times) == [0.0, 0.5, 1.0]
        assert np.all(residual == 0.0)

    @pytest.mark.slow
    def test_residual_halves_under_refinement(self):
        norms = [
            residual_norm(*mass_balance_residual(
                fb_evolve_single(fisher_model(), 1.0, initial_profile_single(2.0), 2.0, N=N, dt=dt, horizon=10.0, sample_stride=1)
            ))
            for N, dt in ((400, 0.01), (800, 0.005))
        ]
        assert norms[0] >= 1.9 * norms[1]

    def test_residual_norm_window(self):
        assert residual_norm([0.5, 1.5], [10.0, -0.2]) == pytest.approx(0.2)
        assert residual_norm([0.5], [10.0]) == 0.0


class TestProfileChecks:
    def test_behind_front_gap(self):
        traj = step_profile()
        assert behind_front_gap(traj, 1.0, 1.0, 0.2) == 0.0
        assert behind_front_gap(traj, 0.9, 1.0, 0.2) == pytest.approx(0.1)
        assert behind_front_gap(traj, 1.0, 1.8, 0.1) == pytest.approx(0.5)

    def test_behind_front_gap_validation(self):
        traj = step_profile()
        with pytest.raises(ValueError, match="eps"):
            behind_front_gap(traj, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="No profile snapshot"):
            behind_front_gap(traj, 1.0, 1.0, 0.2, t=3.0)

    def test_occupancy(self):
        traj = step_profile()
        assert occupancy(traj, 0.5) == pytest.approx(1.0)
        assert occupancy(traj, 1.8) == pytest.approx(0.5)
        assert occupancy(traj, 3.0) == 0.0

    def test_ordering(self):
        x = np.linspace(0.0, 2.0, 21)
        low = synthetic_trajectory([0.0, 1.0], [2.0, 2.0], [1.0], [x], [0.5 * (2.0 - x)])
        high = synthetic_trajectory([0.0, 1.0], [2.0, 2.0], [1.0], [x], [2.0 - x])
        assert ordering_violation(low, high) == pytest.approx(0.0)
        assert profiles_ordered(low, high)
        assert ordering_violation(high, low) == pytest.approx(1.0)
        assert not profiles_ordered(high, low)

    def test_snapshot_times_must_match(self):
        x = np.linspace(0.0, 2.0, 21)
        first = synthetic_trajectory([0.0, 1.0], [2.0, 2.0], [1.0], [x], [2.0 - x])
        second = synthetic_trajectory([0.0, 2.0], [2.0, 2.0], [2.0], [x], [2.0 - x])
        with pytest.raises(ValueError, match="Snapshot times differ"):
            ordering_violation(first, second)
