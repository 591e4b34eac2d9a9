import math

import numpy as np
import pytest

from spreading_utils.forcing_utils import ReactionModel, TrigPolynomial, fisher_model
from spreading_utils.semiwave_utils import (
    MONOTONE_TOLERANCE,
    eps_bracket,
    low_hump,
    near_v_star,
    part_metric,
    part_metric_history,
    semiwave_evolve,
    semiwave_front,
    semiwave_front_profile,
    shoot_autonomous,
    symmetric_part_metric,
)

# coarse settings for quick runs
QUICK = {"X": 20.0, "N": 200, "dt": 0.02, "horizon": 80.0, "gap_tolerance": 1e-2}
FORCED = ReactionModel(TrigPolynomial(1.0, ((0.5, 1.0, 0.0),)), TrigPolynomial(1.0))


@pytest.fixture(scope="module")
def quick_wave():
    return semiwave_evolve(fisher_model(), 1.0, **QUICK)


class TestStarts:
    def test_low_hump(self):
        np.testing.assert_allclose(low_hump(np.array([0.0, 5.0, 20.0]), 1.0), [0.0, 0.5, 1.0])

    def test_near_v_star(self):
        assert near_v_star(np.array([0.0]), 2.0)[0] == 0.0
        assert near_v_star(np.array([50.0]), 2.0)[0] == pytest.approx(2.0)


class TestPartMetric:
    def test_ordered_profiles(self):
        assert part_metric([0.0, 1.0, 2.0], [0.0, 2.0, 2.0]) == pytest.approx(math.log(2.0))
        assert part_metric([0.0, 1.0, 1.0], [0.0, 1.0, 1.0]) == 0.0

    def test_unordered_profiles(self):
        with pytest.raises(ValueError, match="not ordered"):
            part_metric([0.0, 2.0, 1.0], [0.0, 1.0, 1.0])

    def test_symmetric_form(self):
        assert symmetric_part_metric([0.0, 2.0, 1.0], [0.0, 1.0, 1.0]) == pytest.approx(math.log(2.0))
        assert symmetric_part_metric([0.0, 1.0, 2.0], [0.0, 2.0, 2.0]) == pytest.approx(part_metric([0.0, 1.0, 2.0], [0.0, 2.0, 2.0]))


class TestShootAutonomous:
    def test_speed_identity(self):
        c, qprime0 = shoot_autonomous(1.0, 1.0, 1.0)
        assert 0.0 < c < 2.0
        assert c == pytest.approx(qprime0, rel=1e-8)

    def test_speed_increases_with_mu(self):
        speeds = [shoot_autonomous(1.0, 1.0, mu)[0] for mu in (0.5, 1.0, 2.0, 5.0)]
        assert all(later > earlier for earlier, later in zip(speeds, speeds[1:]))
        assert speeds[-1] < 2.0

    def test_scaling_in_b(self):
        # c*(a, b, mu) = c*(a, 1, mu / b): u -> b u maps one semi-wave onto the other
        for b, mu in ((2.0, 1.0), (0.5, 3.0)):
            assert shoot_autonomous(1.0, b, mu)[0] == pytest.approx(shoot_autonomous(1.0, 1.0, mu / b)[0], rel=1e-6)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError, match="must be > 0"):
            shoot_autonomous(1.0, 1.0, 0.0)


class TestSemiwaveEvolve:
    def test_quick_run_matches_shooting(self, quick_wave):
        c, _ = shoot_autonomous(1.0, 1.0, 1.0)
        assert quick_wave.cstar == pytest.approx(c, rel=0.05)
        assert quick_wave.within_speed_bound
        assert quick_wave.speed_bound == pytest.approx(2.0)

    def test_profiles_converge_behind(self, quick_wave):
        assert quick_wave.attraction_gap <= 1e-2
        assert quick_wave.midfield_gap < 1e-2
        assert quick_wave.monotone_violation <= MONOTONE_TOLERANCE

    def test_profile_window(self, quick_wave):
        states = quick_wave.profile_window
        assert states
        assert all(state.t >= quick_wave.window_start for state in states)
        assert states[-1].flux0 == pytest.approx(quick_wave.flux_history[-1])

    def test_part_metric_history_contracts(self, quick_wave):
        times, rho = part_metric_history(quick_wave)
        assert len(times) == len(rho)
        assert rho[-1] < rho[0]

    def test_front_series(self, quick_wave):
        front = semiwave_front(quick_wave)
        assert front.h[0] == 0.0
        assert np.all(np.diff(front.h) > 0)
        start = np.searchsorted(front.times, quick_wave.window_start)
        slope = (front.h[-1] - front.h[start]) / (front.times[-1] - front.times[start])
        assert slope == pytest.approx(quick_wave.cstar, rel=1e-3)
        positions, values = semiwave_front_profile(quick_wave, front, len(front.sample_times) - 1)
        assert positions[-1] == pytest.approx(front.sample_h[-1])
        assert values[-1] == 0.0

    def test_periodic_forcing_gives_periodic_flux(self):
        result = semiwave_evolve(FORCED, 1.0, **{**QUICK, "X": 30.0, "N": 300, "horizon": 120.0, "gap_tolerance": 5e-2})
        period = 2.0 * math.pi
        times = np.linspace(result.window_start, result.flux_times[-1] - period, 200)
        flux = np.interp(times, result.flux_times, result.flux_history)
        shifted = np.interp(times + period, result.flux_times, result.flux_history)
        assert np.max(np.abs(shifted - flux)) < 1e-2 * np.max(flux)
        assert np.ptp(flux) > 1e-2 * np.max(flux)
        assert result.monotone_violation <= MONOTONE_TOLERANCE

    def test_rejects_short_truncation(self):
        with pytest.raises(ValueError, match="front widths"):
            semiwave_evolve(fisher_model(), 1.0, X=5.0)

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError, match="window"):
            semiwave_evolve(fisher_model(), 1.0, horizon=10.0, window=20.0)

    def test_rejects_start_not_pinned(self):
        with pytest.raises(ValueError, match="vanish at x = 0"):
            semiwave_evolve(fisher_model(), 1.0, X=20.0, N=100, horizon=1.0, u0=lambda x: np.ones_like(x))

    @pytest.mark.slow
    def test_default_grid_matches_shooting(self):
        c, _ = shoot_autonomous(1.0, 1.0, 1.0)
        result = semiwave_evolve(fisher_model(), 1.0)
        assert result.cstar == pytest.approx(c, rel=0.02)
        times, rho = part_metric_history(result)
        assert np.all(np.diff(rho) <= 1e-6)


class TestEpsBracket:
    def test_validation(self):
        with pytest.raises(ValueError, match=">= 0"):
            eps_bracket(fisher_model(), 1.0, -0.1)
        with pytest.raises(ValueError, match="below mean"):
            eps_bracket(fisher_model(), 1.0, 1.0)

    def test_brackets_speed(self, quick_wave):
        c_lower, c_upper = eps_bracket(fisher_model(), 1.0, 0.1, **QUICK)
        assert c_lower < quick_wave.cstar < c_upper
