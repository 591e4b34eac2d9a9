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
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.optimize import brentq

from spreading_utils.forcing_utils import ReactionModel, ap_eval, ap_mean, require_hypotheses, shift_growth
from spreading_utils.grid_utils import flux_left, solve_tridiagonal, steps_for
from spreading_utils.kinetics_utils import AttractionError, ScalarTrajectory, ap_positive_solution
from spreading_utils.spectral_utils import BracketError

logger = logging.getLogger(__name__)

ATTRACTION_GAP_TOLERANCE = 1e-5
MONOTONE_TOLERANCE = 1e-8
# nodes where a profile is below PROFILE_FLOOR are left out of ratio computations
PROFILE_FLOOR = 1e-12
ORDER_SLACK = 1e-6
LOW_HUMP_SLOPE = 0.1

# phase-plane shooting
SHOOT_TOLERANCE = 1e-10
SHOOT_RTOL = 1e-11
SHOOT_ATOL = 1e-13
SHOOT_SPAN = 200.0
SPEED_TOLERANCE = 1e-10


class FluxCollapseError(RuntimeError):
    """Raised when the boundary flux u_x(t, 0) drops to zero or below."""


@dataclass(frozen=True, eq=False)
class HalfLineState:
    """
    Profile of the half-line problem on the uniform grid x_0 = 0 .. x_N = X
    """

    X: float
    N: int
    t: float
    values: np.ndarray
    flux0: float


@dataclass(frozen=True, eq=False)
class SemiWaveResult:
    """
    Outcome of semiwave_evolve
        x: grid
        sample_times: times of the stored profiles
        upper_samples / lower_samples: profiles of the near-V* and low starts at sample_times
        flux_times, flux_history: u_x(t, 0) of the near-V* start at every step
        lower_flux_history: the same for the low start
        window_start: averaging window is [window_start, horizon]
        cstar: mu * mean flux over the window
        attraction_gap: sup-disagreement of the two starts over the window
        gap_history: sup-disagreement at every sample time
        midfield_gap: sup over the window of |u(t, X/2) - V*(t)|
        monotone_violation: largest decrease between neighbouring nodes on x <= X / 2 over all samples
        v_star: V* on the time grid of the run
    """

    mu: float
    x: np.ndarray
    sample_times: np.ndarray
    upper_samples: np.ndarray
    lower_samples: np.ndarray
    flux_times: np.ndarray
    flux_history: np.ndarray
    lower_flux_history: np.ndarray
    window_start: float
    cstar: float
    attraction_gap: float
    gap_history: np.ndarray
    midfield_gap: float
    monotone_violation: float
    v_star: ScalarTrajectory
    a_mean: float

    @property
    def profile_window(self) -> list:
        dx = self.x[1] - self.x[0]
        return [
            HalfLineState(
                X=float(self.x[-1]),
                N=len(self.x) - 1,
                t=float(t),
                values=values,
                flux0=flux_left(values, dx),
            )
            for t, values in zip(self.sample_times, self.upper_samples)
            if t >= self.window_start
        ]

    @property
    def speed_bound(self) -> float:
        return 2.0 * math.sqrt(self.a_mean)

    @property
    def within_speed_bound(self) -> bool:
        return 0.0 < self.cstar < self.speed_bound


def low_hump(x, v0: float):
    """min(V*(0), x / 10)"""
    return np.minimum(v0, LOW_HUMP_SLOPE * np.asarray(x, dtype=float))


def near_v_star(x, v0: float):
    """V*(0) tanh(x)"""
    return v0 * np.tanh(np.asarray(x, dtype=float))


def _check_start(x, start, label: str) -> np.ndarray:
    start = np.asarray(start(x) if callable(start) else start, dtype=float)
    if start.shape != x.shape:
        raise ValueError(f"{label} profile has {start.size} values, expected {x.size}")
    if not np.all(np.isfinite(start)):
        raise ValueError(f"{label} profile has non-finite values")
    if np.any(start < 0):
        raise ValueError(f"{label} profile must be nonnegative")
    if abs(start[0]) > PROFILE_FLOOR:
        raise ValueError(f"{label} profile must vanish at x = 0, got {start[0]}")
    if np.any(np.diff(start) < -MONOTONE_TOLERANCE):
        raise ValueError(f"{label} profile must be nondecreasing in x")
    return start


def _march(m: ReactionModel, mu: float, x, start, v_star, dt: float, sample_stride: int, label: str) -> tuple:
    """
    Step the half-line problem u_t = u_xx - mu u_x(t, 0) u_x + u f(t, u) with implicit
    diffusion and drift (drift speed lagged one step), explicit reaction,
    u(t, 0) = 0 and u(t, X) = V*(t)
        Outputs: (flux history, samples, clipped count)
    """
    n_steps = len(v_star.values) - 1
    dx = x[1] - x[0]
    inverse = 1.0 / dx**2
    times = v_star.dt * np.arange(n_steps + 1)
    a_values = ap_eval(m.a, times)
    b_values = ap_eval(m.b, times)
    diag = np.full(len(x) - 2, 1.0 + 2.0 * dt * inverse)

    u = start.copy()
    u[0] = 0.0
    u[-1] = v_star.values[0]
    fluxes = np.empty(n_steps + 1)
    fluxes[0] = flux_left(u, dx)
    samples = [u.copy()]
    clipped = 0
    for n in range(n_steps):
        if not fluxes[n] > 0:
            raise FluxCollapseError(
                f"Boundary flux of the {label} start collapsed to {fluxes[n]:.3e} at t = {times[n]:.6g}; "
                "parameters are on the vanishing side"
            )
        drift = mu * fluxes[n] / (2.0 * dx)
        lower = np.full(len(diag), -dt * (inverse + drift))
        upper = np.full(len(diag), -dt * (inverse - drift))
        interior = u[1:-1]
        rhs = interior + dt * interior * (a_values[n] - b_values[n] * interior)
        rhs[-1] += dt * (inverse - drift) * v_star.values[n + 1]
        interior = solve_tridiagonal(lower, diag, upper, rhs)
        negative = interior < 0
        if np.any(negative):
            clipped += 1
            interior[negative] = 0.0
        u[1:-1] = interior
        u[-1] = v_star.values[n + 1]
        fluxes[n + 1] = flux_left(u, dx)
        if (n + 1) % sample_stride == 0:
            samples.append(u.copy())
    return fluxes, np.asarray(samples), clipped


def semiwave_evolve(
    m: ReactionModel,
    mu: float,
    X: float = 40.0,
    N: int = 800,
    dt: float = 0.01,
    horizon: float = 150.0,
    u0=None,
    window: float = None,
    sample_interval: float = 1.0,
    gap_tolerance: float = ATTRACTION_GAP_TOLERANCE,
    spinup: float = None,
) -> SemiWaveResult:
    """
    Evolve the nonlocal half-line problem from a low start and a near-V* start until both
    agree, and read the spreading speed off the boundary flux.
        Inputs:
            m: ReactionModel satisfying (H1) and (H3)
            mu: Stefan coefficient > 0
            X, N: truncation length and cell count
            dt, horizon: time step and run length
            u0: optional low start (callable of x or array on the grid), defaults to low_hump
            window: averaging window length (default horizon / 2)
            sample_interval: spacing of the stored profiles
        Outputs: SemiWaveResult
    """
    require_hypotheses(m)
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if not X > 0:
        raise ValueError(f"X must be > 0, got {X}")
    if N < 16:
        raise ValueError(f"N must be >= 16 cells, got {N}")
    a_mean = ap_mean(m.a)
    if X < 10.0 / math.sqrt(a_mean):
        raise ValueError(f"X = {X} is shorter than 10 front widths (10 / sqrt(mean(a)) = {10.0 / math.sqrt(a_mean):.6g})")
    if window is None:
        window = 0.5 * horizon
    if not 0 < window <= horizon:
        raise ValueError(f"window must lie in (0, horizon], got {window}")

    n_steps, dt_used = steps_for(horizon, dt)
    v_star = ap_positive_solution(m, spinup=spinup, horizon=horizon, dt=dt_used)
    sample_stride = max(1, int(round(sample_interval / dt_used)))
    x = np.linspace(0.0, X, N + 1)
    dx = X / N

    v0 = float(v_star.values[0])
    lower_start = _check_start(x, u0 if u0 is not None else (lambda grid: low_hump(grid, v0)), "low")
    upper_start = _check_start(x, lambda grid: near_v_star(grid, v0), "near-V*")

    upper_flux, upper_samples, upper_clipped = _march(m, mu, x, upper_start, v_star, dt_used, sample_stride, "near-V*")
    lower_flux, lower_samples, lower_clipped = _march(m, mu, x, lower_start, v_star, dt_used, sample_stride, "low")
    if upper_clipped or lower_clipped:
        logger.warning(f"Negative values clipped in {upper_clipped + lower_clipped} semi-wave steps (dt = {dt_used})")

    flux_times = dt_used * np.arange(n_steps + 1)
    sample_times = flux_times[::sample_stride][: len(upper_samples)]
    window_start = horizon - window
    in_window = sample_times >= window_start - 1e-9
    if not np.any(in_window):
        in_window[-1] = True

    gap_history = np.max(np.abs(upper_samples - lower_samples), axis=1)
    attraction_gap = float(np.max(gap_history[in_window]))
    if attraction_gap > gap_tolerance:
        raise AttractionError(
            f"Semi-wave starts disagree by {attraction_gap:.3e} > {gap_tolerance:.1e} on [{window_start}, {horizon}]; "
            "raise horizon or X"
        )

    cstar = mu * float(np.mean(upper_flux[flux_times >= window_start - 1e-9]))
    middle = N // 2
    v_star_samples = v_star.values[::sample_stride][: len(upper_samples)]
    midfield_gap = float(np.max(np.abs(upper_samples[in_window, middle] - v_star_samples[in_window])))
    # u(t, X) = V*(t) may drop below the interior; the check stays clear of that layer
    inner = x <= 0.5 * X
    monotone_violation = float(
        max(0.0, -np.min(np.diff(upper_samples[:, inner], axis=1)), -np.min(np.diff(lower_samples[:, inner], axis=1)))
    )
    if monotone_violation > MONOTONE_TOLERANCE:
        logger.warning(f"Semi-wave profile lost monotonicity by {monotone_violation:.3e}")
    if not 0 < cstar < 2.0 * math.sqrt(a_mean):
        logger.warning(f"Semi-wave speed {cstar:.6g} outside (0, 2 sqrt(mean(a))) = (0, {2.0 * math.sqrt(a_mean):.6g})")
    logger.debug(f"semiwave mu = {mu}: cstar = {cstar:.10g}, gap = {attraction_gap:.3e}, dx = {dx}, dt = {dt_used}")

    return SemiWaveResult(
        mu=mu,
        x=x,
        sample_times=sample_times,
        upper_samples=upper_samples,
        lower_samples=lower_samples,
        flux_times=flux_times,
        flux_history=upper_flux,
        lower_flux_history=lower_flux,
        window_start=window_start,
        cstar=cstar,
        attraction_gap=attraction_gap,
        gap_history=gap_history,
        midfield_gap=midfield_gap,
        monotone_violation=monotone_violation,
        v_star=v_star,
        a_mean=a_mean,
    )


@dataclass(frozen=True, eq=False)
class SemiWaveFront:
    """
    Front of the semi-wave in the free-boundary frame, h**(t) = mu * integral_0^t u_x(s, 0) ds
    """

    times: np.ndarray
    h: np.ndarray
    sample_times: np.ndarray
    sample_h: np.ndarray


def semiwave_front(result: SemiWaveResult) -> SemiWaveFront:
    h = result.mu * cumulative_trapezoid(result.flux_history, result.flux_times, initial=0.0)
    sample_h = np.interp(result.sample_times, result.flux_times, h)
    return SemiWaveFront(times=result.flux_times, h=h, sample_times=result.sample_times, sample_h=sample_h)


def semiwave_front_profile(result: SemiWaveResult, front: SemiWaveFront, k: int) -> tuple:
    """
    Semi-wave u**(t, x) = u~(t, h**(t) - x) at sample k
        Outputs: (x positions increasing towards the front, values)
    """
    positions = front.sample_h[k] - result.x[::-1]
    return positions, result.upper_samples[k][::-1]


#################
## PART METRIC ##
#################


def part_metric(u1, u2, slack: float = ORDER_SLACK) -> float:
    """
    rho(u1, u2) = inf{ln alpha | alpha >= 1, u2 <= alpha u1} for ordered profiles u1 <= u2.
    The pinned node x = 0 and nodes where u1 < 1e-12 are left out.
        Inputs: profiles on a common grid, relative ordering slack
        Outputs: rho >= 0
    """
    u1 = np.asarray(u1, dtype=float)[1:]
    u2 = np.asarray(u2, dtype=float)[1:]
    if u1.shape != u2.shape:
        raise ValueError(f"Profiles differ in length: {u1.size + 1} vs {u2.size + 1}")
    violation = u1 - u2 * (1.0 + slack) - PROFILE_FLOOR
    if np.any(violation > 0):
        index = int(np.argmax(violation)) + 1
        raise ValueError(f"Profiles are not ordered (u1 > u2 at node {index})")
    mask = u1 >= PROFILE_FLOOR
    if not np.any(mask):
        raise ValueError("u1 vanishes on the whole interior")
    return max(0.0, math.log(float(np.max(u2[mask] / u1[mask]))))


def symmetric_part_metric(u1, u2) -> float:
    """
    ln max(sup u2 / u1, sup u1 / u2) over interior nodes where both profiles exceed 1e-12;
    equals part_metric for ordered profiles
    """
    u1 = np.asarray(u1, dtype=float)[1:]
    u2 = np.asarray(u2, dtype=float)[1:]
    mask = np.minimum(u1, u2) >= PROFILE_FLOOR
    if not np.any(mask):
        raise ValueError("Profiles vanish on the whole interior")
    ratio = max(float(np.max(u2[mask] / u1[mask])), float(np.max(u1[mask] / u2[mask])))
    return max(0.0, math.log(ratio))


def part_metric_history(result: SemiWaveResult) -> tuple:
    """
    Part metric between the two starts at every sample time
        Outputs: (sample times, rho array)
    """
    rho = np.array([symmetric_part_metric(low, high) for low, high in zip(result.lower_samples, result.upper_samples)])
    return result.sample_times, rho


#####################
## SHOOTING ORACLE ##
#####################


def _shoot(a: float, b: float, c: float, s: float) -> int:
    """
    Integrate q' = p, p' = c p - q (a - b q) from (0, s)
        Outputs: +1 when q reaches a / b with p > 0, -1 when p reaches 0 first, 0 otherwise
    """
    target = a / b

    def rhs(_, y):
        return [y[1], c * y[1] - y[0] * (a - b * y[0])]

    def overshoot(_, y):
        return y[0] - target

    overshoot.terminal = True
    overshoot.direction = 1

    def undershoot(_, y):
        return y[1]

    undershoot.terminal = True
    undershoot.direction = -1

    solution = solve_ivp(
        rhs, (0.0, SHOOT_SPAN), [0.0, s], method="DOP853", rtol=SHOOT_RTOL, atol=SHOOT_ATOL, events=(overshoot, undershoot)
    )
    if solution.t_events[0].size:
        return 1
    if solution.t_events[1].size:
        return -1
    return 0


def saddle_slope(a: float, b: float, c: float) -> float:
    """
    Slope s = q'(0) of the orbit leaving q = 0 that lands on the saddle (a / b, 0), by bisection
    """
    lo = 0.0
    # p^2 / 2 + a q^2 / 2 - b q^3 / 3 grows along orbits when c > 0
    hi = math.sqrt(a**3 / (3.0 * b**2)) * (1.0 + 1e-6)
    while hi - lo > SHOOT_TOLERANCE:
        s = 0.5 * (lo + hi)
        outcome = _shoot(a, b, c, s)
        if outcome > 0:
            hi = s
        elif outcome < 0:
            lo = s
        else:
            return s
    return 0.5 * (lo + hi)


@lru_cache(maxsize=128)
def shoot_autonomous(a: float, b: float, mu: float) -> tuple:
    """
    Steady semi-wave q'' - c q' + q (a - b q) = 0, q(0) = 0, q(inf) = a / b, with c = mu q'(0)
        Inputs: a, b, mu > 0
        Outputs: (c, q'(0))
    """
    if not (a > 0 and b > 0 and mu > 0):
        raise ValueError(f"a, b and mu must be > 0, got a = {a}, b = {b}, mu = {mu}")
    kpp_speed = 2.0 * math.sqrt(a)
    c_lo = 1e-6 * kpp_speed
    c_hi = kpp_speed * (1.0 - 1e-6)

    def residual(c):
        return c - mu * saddle_slope(a, b, c)

    if residual(c_hi) <= 0:
        raise BracketError(f"Semi-wave speed saturates at the KPP speed 2 sqrt(a) = {kpp_speed} for mu = {mu}")
    if residual(c_lo) >= 0:
        raise BracketError(f"No semi-wave speed above {c_lo} for mu = {mu}")
    c = brentq(residual, c_lo, c_hi, xtol=SPEED_TOLERANCE)
    qprime0 = saddle_slope(a, b, c)
    logger.debug(f"shoot_autonomous a = {a}, b = {b}, mu = {mu}: c = {c:.12g}, q'(0) = {qprime0:.12g}")
    return c, qprime0


####################
## EPS BRACKETING ##
####################


def eps_bracket(m: ReactionModel, mu: float, epsilon: float, **solver_params) -> tuple:
    """
    Speeds of the half-line problems with f - epsilon and f + epsilon
        Inputs: ReactionModel, mu, 0 <= epsilon < mean(a), keyword arguments of semiwave_evolve
        Outputs: (c_lower, c_upper)
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if epsilon >= ap_mean(m.a):
        raise ValueError(f"epsilon = {epsilon} must stay below mean(a) = {ap_mean(m.a)}")
    if epsilon == 0:
        cstar = semiwave_evolve(m, mu, **solver_params).cstar
        return cstar, cstar
    c_lower = semiwave_evolve(shift_growth(m, -epsilon), mu, **solver_params).cstar
    c_upper = semiwave_evolve(shift_growth(m, epsilon), mu, **solver_params).cstar
    logger.debug(f"eps_bracket mu = {mu}, epsilon = {epsilon}: [{c_lower:.10g}, {c_upper:.10g}]")
    return c_lower, c_upper
