import math

import pytest

from spreading_utils.forcing_utils import TrigPolynomial
from spreading_utils.spectral_utils import (
    DIRICHLET_DRIFT,
    NEUMANN_DIRICHLET,
    BracketError,
    LinearCoefficient,
    closed_form_exponent,
    critical_length,
    lyapunov_dd_drift,
    lyapunov_exponent,
    lyapunov_nd,
)

ZERO = LinearCoefficient(TrigPolynomial(0.0))
UNIT = LinearCoefficient(TrigPolynomial(1.0))


class TestClosedForm:
    def test_values(self):
        assert closed_form_exponent(NEUMANN_DIRICHLET, 0.0, 2.0) == pytest.approx(-math.pi**2 / 16)
        assert closed_form_exponent(DIRICHLET_DRIFT, 0.0, math.pi, 1.0) == pytest.approx(-1.25)
        assert closed_form_exponent(NEUMANN_DIRICHLET, 1.0, math.pi / 2) == pytest.approx(0.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="kind"):
            closed_form_exponent("periodic", 1.0, 1.0)


class TestLyapunovExponent:
    def test_neumann_dirichlet_zero_coefficient(self):
        estimate = lyapunov_nd(ZERO, 2.0, N=100, horizon=20.0)
        assert estimate.value == pytest.approx(-math.pi**2 / 16, rel=1e-3)
        assert estimate.converged
        assert len(estimate.growth_log) == len(estimate.times) == 20

    def test_dirichlet_drift(self):
        estimate = lyapunov_dd_drift(ZERO, 1.0, math.pi, N=100, horizon=20.0)
        assert estimate.value == pytest.approx(-1.25, rel=1e-3)

    def test_mean_shift(self):
        forced = LinearCoefficient(TrigPolynomial(1.0, ((0.5, 1.0, 0.0), (0.3, math.sqrt(2.0), 0.0))))
        estimate = lyapunov_nd(forced, 2.0, N=100, horizon=200.0)
        assert estimate.value == pytest.approx(1.0 - math.pi**2 / 16, abs=1e-3)

    def test_constant_shift(self):
        base = lyapunov_nd(ZERO, 2.0, N=64, horizon=20.0)
        shifted = lyapunov_nd(LinearCoefficient(TrigPolynomial(0.7)), 2.0, N=64, horizon=20.0)
        assert shifted.value - base.value == pytest.approx(0.7, abs=1e-9)

    def test_exponents_far_below_minus_one(self):
        # stiff grid modes must not put a floor under the decay rate at the default dt = dx
        assert lyapunov_nd(ZERO, 1.0, N=400, horizon=50.0).value == pytest.approx(-math.pi**2 / 4, rel=1e-3)
        assert lyapunov_dd_drift(ZERO, 0.0, 2.0, N=400, horizon=50.0).value == pytest.approx(-math.pi**2 / 4, rel=1e-3)
        assert lyapunov_dd_drift(ZERO, 1.0, 2.0, N=400, horizon=50.0).value == pytest.approx(-0.25 - math.pi**2 / 4, rel=1e-3)

    @pytest.mark.parametrize("kind", [NEUMANN_DIRICHLET, DIRICHLET_DRIFT])
    def test_increasing_in_length(self, kind):
        values = [lyapunov_exponent(kind, UNIT, l, N=100, horizon=20.0).value for l in (0.5, 1.0, 2.0, 4.0)]
        assert all(later > earlier for earlier, later in zip(values, values[1:]))

    def test_second_order_in_space(self):
        values = [lyapunov_nd(ZERO, 2.0, N=N, horizon=20.0).value for N in (25, 50, 100)]
        assert abs(values[0] - values[1]) >= 3.0 * abs(values[1] - values[2])

    def test_mean_rate_is_plain_average(self):
        estimate = lyapunov_nd(UNIT, 2.0, N=64, horizon=10.0)
        assert estimate.mean_rate == pytest.approx(sum(estimate.growth_log) / 10.0)

    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError, match="N must be"):
            lyapunov_nd(ZERO, 2.0, N=8)

    def test_rejects_large_step(self):
        with pytest.raises(ValueError, match="accuracy guard"):
            lyapunov_exponent(NEUMANN_DIRICHLET, ZERO, 2.0, N=100, horizon=1.0, dt=0.1)

    def test_rejects_negative_drift(self):
        with pytest.raises(ValueError, match="gamma"):
            lyapunov_dd_drift(ZERO, -1.0, 1.0, N=32, horizon=1.0)


class TestCriticalLength:
    def test_neumann_dirichlet_fisher(self):
        l_star = critical_length(UNIT, NEUMANN_DIRICHLET, (1.0, 4.0), N=50, horizon=20.0, tolerance=1e-3)
        assert l_star == pytest.approx(math.pi / 2, abs=5e-3)

    def test_bracket_without_sign_change(self):
        with pytest.raises(BracketError, match="does not change sign"):
            critical_length(UNIT, NEUMANN_DIRICHLET, (1.0, 1.2), N=32, horizon=10.0)

    def test_requires_positive_mean(self):
        with pytest.raises(ValueError, match="mean"):
            critical_length(ZERO, NEUMANN_DIRICHLET, (1.0, 4.0))

    def test_dirichlet_critical_length(self):
        L_star = critical_length(UNIT, DIRICHLET_DRIFT, (2.0, 5.0), N=100, horizon=20.0, tolerance=1e-4)
        l_star = critical_length(UNIT, NEUMANN_DIRICHLET, (1.0, 4.0), N=100, horizon=20.0, tolerance=1e-4)
        assert L_star == pytest.approx(math.pi, abs=1e-3)
        assert L_star >= l_star
