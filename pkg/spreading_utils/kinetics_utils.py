"""
Copyright © 2024 The Johns Hopkins University Applied Physics Laboratory LLC

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to
deal in the Software without restriction, including without limitation the
rights to use, copy, modify, merge, publish, distribute, sublicense, and/or
sell copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:
The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR
IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from spreading_utils.forcing_utils import (
    ReactionModel,
    ap_bounds,
    ap_eval,
    ap_integral,
    ap_mean,
    require_hypotheses,
    shift_growth,
)
from spreading_utils.grid_utils import steps_for

logger = logging.getLogger(__name__)

# two-start agreement required of the attracting solution
ATTRACTION_TOLERANCE = 1e-6
# spinup and oracle tail, in units of 1 / mean(a)
SPINUP_FACTOR = 100.0
TAIL_FACTOR = 40.0
# low start of the uniqueness check, relative to M_bound
LOW_START_FRACTION = 1e-3


class PositivityError(RuntimeError):
    """Raised when a time step undershoots below zero and had to be clipped."""


class AttractionError(RuntimeError):
    """Raised when two starts fail to reach the same attracting solution."""


@dataclass(frozen=True, eq=False)
class ScalarTrajectory:
    """
    Uniformly sampled solution of u' = u f(t, u)
        t0: first sample time
        dt: sample spacing
        values: numpy array, values[k] = u(t0 + k dt)
        gap: two-start disagreement (only set by ap_positive_solution)
    """

    t0: float
    dt: float
    values: np.ndarray
    gap: float = 0.0


def trajectory_times(traj: ScalarTrajectory) -> np.ndarray:
    return traj.t0 + traj.dt * np.arange(len(traj.values))


def _rk4(m: ReactionModel, u0: float, t0: float, n_steps: int, dt: float) -> tuple:
    """
    Classical fourth-order Runge-Kutta on u' = u (a(t) - b(t) u)
        Outputs: (values array of length n_steps + 1, number of clipped steps)
    """
    # coefficients on the half-step grid t0 + k dt / 2
    half_times = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    a_half = np.atleast_1d(ap_eval(m.a, half_times)).tolist()
    b_half = np.atleast_1d(ap_eval(m.b, half_times)).tolist()

    values = np.empty(n_steps + 1)
    values[0] = u0
    u = float(u0)
    clipped = 0
    for n in range(n_steps):
        a0, a1, a2 = a_half[2 * n], a_half[2 * n + 1], a_half[2 * n + 2]
        b0, b1, b2 = b_half[2 * n], b_half[2 * n + 1], b_half[2 * n + 2]
        k1 = u * (a0 - b0 * u)
        y = u + 0.5 * dt * k1
        k2 = y * (a1 - b1 * y)
        y = u + 0.5 * dt * k2
        k3 = y * (a1 - b1 * y)
        y = u + dt * k3
        k4 = y * (a2 - b2 * y)
        u = u + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if u < 0:
            u = 0.0
            clipped += 1
        values[n + 1] = u
    return values, clipped


def _check_step(m: ReactionModel, dt: float) -> None:
    limit = 0.5 / m.sup_abs_a
    if dt >= limit:
        raise ValueError(f"dt = {dt} violates the stability guard dt < 0.5 / sup|a| = {limit}")


def ode_integrate(m: ReactionModel, u0: float, t0: float, t1: float, dt: float) -> ScalarTrajectory:
    """
    Integrate the spatially homogeneous equation u' = u f(t, u) on [t0, t1]
        Inputs: ReactionModel, u0 >= 0, t0 < t1, dt > 0
        Outputs: ScalarTrajectory sampled every dt (dt shrunk so the steps tile [t0, t1])
    """
    require_hypotheses(m)
    if not t1 > t0:
        raise ValueError(f"t1 must exceed t0, got t0 = {t0}, t1 = {t1}")
    if not u0 >= 0:
        raise ValueError(f"u0 must be >= 0, got {u0}")
    n_steps, dt_used = steps_for(t1 - t0, dt)
    _check_step(m, dt_used)

    values, clipped = _rk4(m, u0, t0, n_steps, dt_used)
    if clipped:
        logger.warning(f"{clipped} steps undershot below zero and were clipped (dt = {dt_used})")
        raise PositivityError(f"Positivity lost in {clipped} steps; reduce dt below {dt_used}")
    return ScalarTrajectory(t0=float(t0), dt=dt_used, values=values)


def default_spinup(m: ReactionModel) -> float:
    return SPINUP_FACTOR / ap_mean(m.a)


def ap_positive_solution(
    m: ReactionModel,
    spinup: float = None,
    horizon: float = 50.0,
    dt: float = 0.01,
    tolerance: float = ATTRACTION_TOLERANCE,
) -> ScalarTrajectory:
    """
    The unique attracting almost periodic positive solution V*(t) on [0, horizon].
    Integrates forward from t = -spinup out of u0 = M_bound and out of a small start;
    both must agree to `tolerance` on the returned window.
        Inputs: ReactionModel, spinup (default 100 / mean(a)), horizon, dt
        Outputs: ScalarTrajectory with t0 = 0 and gap = two-start sup disagreement
    """
    require_hypotheses(m)
    if spinup is None:
        spinup = default_spinup(m)
    if not spinup > 0:
        raise ValueError(f"spinup must be > 0, got {spinup}")
    n_window, dt_used = steps_for(horizon, dt)
    _check_step(m, dt_used)
    n_spin = int(math.ceil(spinup / dt_used))
    t_start = -n_spin * dt_used

    high, clipped_high = _rk4(m, m.m_bound, t_start, n_spin + n_window, dt_used)
    low, clipped_low = _rk4(m, LOW_START_FRACTION * m.m_bound, t_start, n_spin + n_window, dt_used)
    if clipped_high or clipped_low:
        raise PositivityError(f"Positivity lost while computing V* (dt = {dt_used})")

    high = high[n_spin:]
    low = low[n_spin:]
    gap = float(np.max(np.abs(high - low)))
    if gap > tolerance:
        raise AttractionError(
            f"Two starts disagree by {gap:.3e} > {tolerance:.1e} after spinup {spinup}; increase spinup"
        )
    logger.debug(f"V* computed on [0, {horizon}] with dt {dt_used}, two-start gap {gap:.3e}")
    return ScalarTrajectory(t0=0.0, dt=dt_used, values=high, gap=gap)


def eps_positive_solutions(
    m: ReactionModel, epsilon: float, spinup: float = None, horizon: float = 50.0, dt: float = 0.01
) -> tuple:
    """
    Attracting solutions of V' = V (f(t, V) - epsilon) and V' = V (f(t, V) + epsilon)
        Outputs: (lower, upper) ScalarTrajectory pair bracketing V*
    """
    if spinup is None:
        spinup = default_spinup(shift_growth(m, -epsilon))
    lower = ap_positive_solution(shift_growth(m, -epsilon), spinup=spinup, horizon=horizon, dt=dt)
    upper = ap_positive_solution(shift_growth(m, epsilon), spinup=spinup, horizon=horizon, dt=dt)
    return lower, upper


def logistic_oracle(m: ReactionModel, t: float, tail: float = None) -> tuple:
    """
    Quadrature value of the closed form for the logistic family
        V*(t) = 1 / integral_{-inf}^{t} exp(-integral_s^t a(r) dr) b(s) ds
    with the inner integral in closed form and the outer one truncated to [t - tail, t].
        Inputs: ReactionModel, t, tail (default 40 / mean(a))
        Outputs: (value, bound on the truncated part of the outer integral)
    """
    a_mean = ap_mean(m.a)
    if a_mean <= 0:
        raise ValueError(f"logistic_oracle requires mean(a) > 0, got {a_mean}")
    if tail is None:
        tail = TAIL_FACTOR / a_mean

    def integrand(s):
        return math.exp(-ap_integral(m.a, s, t)) * ap_eval(m.b, s)

    weight, _ = quad(integrand, t - tail, t, epsabs=1e-14, epsrel=1e-13, limit=1000)
    # |oscillating part of the inner integral| <= 2 sum |amplitude| / frequency
    oscillation = 2.0 * sum(abs(amp) / freq for amp, freq, _ in m.a.modes)
    bound = math.exp(oscillation - a_mean * tail) * ap_bounds(m.b)[1] / a_mean
    return 1.0 / weight, bound
