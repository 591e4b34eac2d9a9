import numpy as np
import pytest

from spreading_utils.grid_utils import flux_left, flux_right, integrate, interpolate_profile, solve_tridiagonal, steps_for


class TestSolveTridiagonal:
    def test_matches_dense_solve(self):
        n = 12
        rng = np.random.default_rng(0)
        lower = rng.uniform(-1, 0, n)
        upper = rng.uniform(-1, 0, n)
        diag = 3.0 + rng.uniform(0, 1, n)
        rhs = rng.uniform(-1, 1, n)
        dense = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
        np.testing.assert_allclose(solve_tridiagonal(lower, diag, upper, rhs), np.linalg.solve(dense, rhs), atol=1e-12)

    def test_rejects_ragged_bands(self):
        with pytest.raises(ValueError, match="equal length"):
            solve_tridiagonal(np.ones(3), np.ones(4), np.ones(4), np.ones(4))


class TestStencils:
    def test_one_sided_fluxes_exact_on_quadratics(self):
        x = np.linspace(0.0, 1.0, 11)
        u = x**2 - 3 * x
        assert flux_left(u, 0.1) == pytest.approx(-3.0)
        assert flux_right(u, 0.1) == pytest.approx(-1.0)

    def test_trapezoid(self):
        x = np.linspace(0.0, 2.0, 201)
        assert integrate(x, 0.01) == pytest.approx(2.0)

    def test_interpolate_is_zero_outside(self):
        values = interpolate_profile(np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([-0.5, 0.5, 1.5]))
        np.testing.assert_allclose(values, [0.0, 0.5, 0.0])


class TestStepsFor:
    def test_covers_horizon(self):
        n, dt = steps_for(1.0, 0.3)
        assert n == 4
        assert n * dt == pytest.approx(1.0)

    def test_exact_division(self):
        assert steps_for(30.0, 0.01)[0] == 3000

    @pytest.mark.parametrize("horizon, dt", [(0.0, 0.1), (1.0, -0.1)])
    def test_rejects_nonpositive(self, horizon, dt):
        with pytest.raises(ValueError, match="must be > 0"):
            steps_for(horizon, dt)
