import math

import numpy as np
import pytest

from spreading_utils.forcing_utils import ReactionModel, TrigPolynomial, fisher_model, translate_model
from spreading_utils.kinetics_utils import (
    AttractionError,
    ap_positive_solution,
    default_spinup,
    eps_positive_solutions,
    logistic_oracle,
    ode_integrate,
    trajectory_times,
)

FORCED = ReactionModel(TrigPolynomial(1.0, ((0.5, 1.0, 0.0),)), TrigPolynomial(1.0))


class TestOdeIntegrate:
    def test_logistic_closed_form(self):
        traj = ode_integrate(fisher_model(), 0.5, 0.0, 5.0, 0.01)
        times = trajectory_times(traj)
        np.testing.assert_allclose(traj.values, 1.0 / (1.0 + np.exp(-times)), atol=1e-9)

    def test_zero_stays_zero(self):
        traj = ode_integrate(fisher_model(), 0.0, 0.0, 1.0, 0.01)
        assert np.all(traj.values == 0.0)

    def test_step_guard(self):
        with pytest.raises(ValueError, match="stability guard"):
            ode_integrate(fisher_model(), 0.5, 0.0, 5.0, 0.6)

    def test_rejects_negative_start(self):
        with pytest.raises(ValueError, match="u0"):
            ode_integrate(fisher_model(), -0.1, 0.0, 1.0, 0.01)


class TestApPositiveSolution:
    def test_fisher_carrying_capacity(self):
        v_star = ap_positive_solution(fisher_model(), horizon=10.0)
        np.testing.assert_allclose(v_star.values, 1.0, atol=1e-9)
        assert v_star.t0 == 0.0

    def test_matches_oracle(self):
        v_star = ap_positive_solution(FORCED, horizon=50.0, dt=0.01)
        times = trajectory_times(v_star)
        for index in range(0, len(times), 500):
            value, bound = logistic_oracle(FORCED, times[index])
            assert bound < 1e-8
            assert v_star.values[index] == pytest.approx(value, abs=1e-6)

    def test_hull_consistency(self):
        tau = 1.7
        shifted = ap_positive_solution(translate_model(FORCED, tau), horizon=10.0, dt=0.01)
        original = ap_positive_solution(FORCED, horizon=20.0, dt=0.01)
        offset = int(round(tau / 0.01))
        np.testing.assert_allclose(shifted.values[:800], original.values[offset : offset + 800], atol=1e-6)

    @pytest.mark.parametrize("fraction", [0.1, 1.0, 3.0])
    def test_attracts_positive_starts(self, fraction):
        v_star = ap_positive_solution(FORCED, horizon=20.0, dt=0.01)
        traj = ode_integrate(FORCED, fraction * FORCED.m_bound, -100.0, 20.0, 0.01)
        np.testing.assert_allclose(traj.values[-len(v_star.values) :], v_star.values, atol=1e-6)

    def test_periodic_under_periodic_forcing(self):
        period = 2.0 * math.pi
        v_star = ap_positive_solution(FORCED, horizon=2.0 * period, dt=period / 1000)
        assert len(v_star.values) == 2001
        np.testing.assert_allclose(v_star.values[1000:], v_star.values[:1001], atol=1e-6)
        assert np.ptp(v_star.values) > 0.1

    def test_default_spinup(self):
        assert default_spinup(fisher_model()) == pytest.approx(100.0)
        assert default_spinup(fisher_model(a=4.0)) == pytest.approx(25.0)

    def test_short_spinup_is_reported(self):
        with pytest.raises(AttractionError, match="spinup"):
            ap_positive_solution(fisher_model(), spinup=1.0, horizon=1.0)

    def test_rejects_failing_hypotheses(self):
        with pytest.raises(ValueError, match="H1"):
            ap_positive_solution(ReactionModel(TrigPolynomial(1.0), TrigPolynomial(0.0)))


class TestEpsPositiveSolutions:
    def test_brackets_v_star(self):
        lower, upper = eps_positive_solutions(fisher_model(), 0.1, horizon=5.0)
        np.testing.assert_allclose(lower.values, 0.9, atol=1e-8)
        np.testing.assert_allclose(upper.values, 1.1, atol=1e-8)


class TestLogisticOracle:
    def test_fisher_value(self):
        value, bound = logistic_oracle(fisher_model(), 3.0)
        assert value == pytest.approx(1.0, abs=1e-12)
        assert bound == pytest.approx(math.exp(-40.0))

    def test_rejects_nonpositive_mean(self):
        with pytest.raises(ValueError, match="mean"):
            logistic_oracle(fisher_model(a=-1.0), 0.0)
