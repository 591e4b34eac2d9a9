import numpy as np
import pytest

from spreading_utils.forcing_utils import ReactionModel, TrigPolynomial, fisher_model
from spreading_utils.freeboundary_utils import (
    DOUBLE,
    SINGLE,
    CriticalMuResult,
    critical_mu,
    fb_evolve_double,
    fb_evolve_single,
    initial_profile_double,
    initial_profile_single,
)
from spreading_utils.metrics_utils import SPREADING, UNDETERMINED, VANISHING
from spreading_utils.spectral_utils import BracketError

QUICK = {"N": 100, "dt": 0.01, "horizon": 5.0}


class TestInitialProfiles:
    def test_single_cap(self):
        profile = initial_profile_single(2.0, amplitude=0.5)
        np.testing.assert_allclose(profile(np.array([0.0, 2.0, 3.0])), [0.5, 0.0, 0.0], atol=1e-15)

    def test_double_cap_is_even(self):
        profile = initial_profile_double(-1.5, 1.5)
        x = np.linspace(-1.5, 1.5, 31)
        np.testing.assert_allclose(profile(x), profile(-x))
        assert profile(np.array([0.0]))[0] == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(ValueError, match="h0 must be > 0"):
            initial_profile_single(0.0)
        with pytest.raises(ValueError, match="h0 must exceed g0"):
            initial_profile_double(1.0, 1.0)


class TestSingleFront:
    def test_front_advances(self):
        traj = fb_evolve_single(fisher_model(), 1.0, initial_profile_single(2.0), 2.0, **QUICK)
        assert traj.mode == SINGLE
        assert traj.h[0] == 2.0
        assert np.all(np.diff(traj.h) > 0)
        assert np.all(traj.h_dot >= 0)
        assert traj.times[1] == pytest.approx(0.1)
        assert traj.snapshot_times[-1] == pytest.approx(5.0)
        assert traj.final_state.t == pytest.approx(5.0)
        assert traj.final_state.h >= traj.h[-1]
        assert traj.clamped_steps == 0
        assert traj.u0_sup == pytest.approx(1.0)

    def test_zero_data_stays_put(self):
        traj = fb_evolve_single(fisher_model(), 1.0, lambda x: np.zeros_like(x), 2.0, **QUICK)
        assert np.all(traj.h == 2.0)
        assert np.all(traj.u_sup == 0.0)

    def test_profile_must_vanish_at_front(self):
        with pytest.raises(ValueError, match="vanish at the right front"):
            fb_evolve_single(fisher_model(), 1.0, lambda x: np.ones_like(x), 2.0, **QUICK)

    def test_profile_must_be_flat_at_origin(self):
        with pytest.raises(ValueError, match="u0'\\(0\\) = 0"):
            fb_evolve_single(fisher_model(), 1.0, lambda x: 2.0 - x, 2.0, **QUICK)

    def test_array_length_checked(self):
        with pytest.raises(ValueError, match="expected 101"):
            fb_evolve_single(fisher_model(), 1.0, np.ones(5), 2.0, **QUICK)

    @pytest.mark.parametrize(
        "kwargs, message",
        [({"mu": 0.0}, "mu must be > 0"), ({"N": 8}, "N must be >= 16"), ({"dt": 0.6}, "step guard")],
    )
    def test_parameter_validation(self, kwargs, message):
        params = {"mu": 1.0, **QUICK, **kwargs}
        mu = params.pop("mu")
        with pytest.raises(ValueError, match=message):
            fb_evolve_single(fisher_model(), mu, initial_profile_single(2.0), 2.0, **params)

    def test_forced_coefficients(self):
        model = ReactionModel(TrigPolynomial(1.0, ((0.5, 1.0, 0.0),)), TrigPolynomial(1.0))
        traj = fb_evolve_single(model, 1.0, initial_profile_single(2.0), 2.0, **QUICK)
        assert np.all(np.isfinite(traj.mass))
        assert traj.h[-1] > 2.0


class TestDoubleFront:
    def test_even_data_stays_symmetric(self):
        traj = fb_evolve_double(fisher_model(), 1.0, initial_profile_double(-1.0, 1.0), -1.0, 1.0, N=50, dt=0.01, horizon=5.0)
        assert traj.mode == DOUBLE
        assert np.max(np.abs(traj.g + traj.h)) < 1e-8
        assert np.all(np.diff(traj.h) > 0)
        assert np.all(traj.g_dot <= 0)
        assert traj.extent0 == 2.0
        assert len(traj.final_state.v) == 101

    def test_shifted_domain(self):
        traj = fb_evolve_double(fisher_model(), 1.0, initial_profile_double(1.0, 3.0), 1.0, 3.0, N=50, dt=0.01, horizon=2.0)
        assert traj.g[-1] < 1.0 < 3.0 < traj.h[-1]
        assert np.all(np.isnan(traj.u_at_0) | (traj.u_at_0 >= 0))

    def test_profile_must_vanish_at_left_front(self):
        with pytest.raises(ValueError, match="left front"):
            fb_evolve_double(fisher_model(), 1.0, lambda x: np.where(x < 1.0, 1.0 - x, 0.0), -1.0, 1.0, N=50, horizon=1.0)


class TestCriticalMu:
    def test_requires_subcritical_extent(self):
        with pytest.raises(ValueError, match="L\\*"):
            critical_mu(fisher_model(), -2.0, 2.0, (0.01, 10.0))

    def test_verified_needs_both_side_verdicts(self):
        assert CriticalMuResult(1.0, 1.05, (), True, ((0.92, VANISHING), (1.13, SPREADING))).verified
        assert not CriticalMuResult(1.0, 1.05, (), True, ((0.92, VANISHING), (1.13, UNDETERMINED))).verified
        assert not CriticalMuResult(1.0, 1.05, (), False).verified

    def test_requires_ordered_bracket(self):
        with pytest.raises(ValueError, match="bracket"):
            critical_mu(fisher_model(), -1.0, 1.0, (10.0, 0.01))

    @pytest.mark.slow
    def test_bracket_is_not_vanishing_at_top(self):
        with pytest.raises(BracketError, match="mu_hi"):
            critical_mu(fisher_model(), -1.0, 1.0, (0.01, 0.02), horizon=20.0, max_horizon_factor=1)

    @pytest.mark.slow
    def test_threshold_bracket(self):
        result = critical_mu(fisher_model(), -1.0, 1.0, (0.01, 10.0))
        assert result.converged
        assert result.relative_width <= 0.05
        assert result.mu_lo < result.estimate < result.mu_hi
        verdicts = {mu: verdict for mu, verdict, _ in result.probes}
        assert verdicts[result.mu_lo] == VANISHING
        assert verdicts[result.mu_hi] == SPREADING
        assert result.verified
        assert [mu for mu, _ in result.checks] == pytest.approx([0.9 * result.estimate, 1.1 * result.estimate])
        assert [verdicts[mu] for mu, _ in result.checks] == [VANISHING, SPREADING]
