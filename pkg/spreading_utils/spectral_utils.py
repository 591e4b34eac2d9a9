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

from spreading_utils.forcing_utils import TrigPolynomial, ap_integral, ap_mean
from spreading_utils.grid_utils import solve_tridiagonal, steps_for
from spreading_utils.statistics_utils import linear_fit

logger = logging.getLogger(__name__)

NEUMANN_DIRICHLET = "neumann_dirichlet"
DIRICHLET_DRIFT = "dirichlet_drift"
kinds = [NEUMANN_DIRICHLET, DIRICHLET_DRIFT]

MIN_CELLS = 16
# renormalize to unit sup-norm every RENORMALIZATION_PERIOD time units
RENORMALIZATION_PERIOD = 1.0
CONVERGENCE_TOLERANCE = 1e-4
ZERO_TOLERANCE = 1e-4
MAX_PROBES = 30
TRBDF2_GAMMA = 2.0 - math.sqrt(2.0)


class BracketError(RuntimeError):
    """Raised when a bracket does not straddle a sign change or cannot be closed."""


@dataclass(frozen=True)
class LinearCoefficient:
    """Space-independent zeroth-order coefficient a(t) of the linearized problems"""

    a: TrigPolynomial


@dataclass(frozen=True, eq=False)
class LyapunovEstimate:
    """
    Principal Lyapunov exponent estimate
        value: least-squares growth rate of the accumulated log-norm over the last three quarters of the run
        mean_rate: sum(growth_log) / horizon
        horizon: length of the run
        growth_log: log sup-norms removed at each renormalization
        times: renormalization times
        converged: growth rates over the last three quarters and the last half agree to the tolerance
    """

    value: float
    mean_rate: float
    horizon: float
    growth_log: tuple
    times: tuple
    converged: bool


def closed_form_exponent(kind: str, a_mean: float, l: float, gamma: float = 0.0) -> float:
    """
    Exponent for space-independent a: mean(a) - pi^2 / (4 l^2) for Neumann-Dirichlet,
    mean(a) - (gamma^2 / 4 + pi^2 / l^2) for Dirichlet-Dirichlet with drift gamma
    """
    if kind == NEUMANN_DIRICHLET:
        return a_mean - math.pi**2 / (4.0 * l**2)
    if kind == DIRICHLET_DRIFT:
        return a_mean - (gamma**2 / 4.0 + math.pi**2 / l**2)
    raise ValueError(f"kind must be one of {kinds}, got {kind}")


def _operator_bands(kind: str, l: float, N: int, gamma: float) -> tuple:
    """
    Tridiagonal bands of the discrete spatial operator and the unknown node coordinates
        neumann_dirichlet: nodes x_0..x_{N-1}, ghost node at x_0 enforces v_x = 0, v(x_N) = 0
        dirichlet_drift: nodes x_1..x_{N-1}, v(x_0) = v(x_N) = 0, centered drift -gamma v_x
    """
    dx = l / N
    if kind == NEUMANN_DIRICHLET:
        x = dx * np.arange(N)
        lower = np.full(N, 1.0 / dx**2)
        upper = np.full(N, 1.0 / dx**2)
        diag = np.full(N, -2.0 / dx**2)
        upper[0] = 2.0 / dx**2
    elif kind == DIRICHLET_DRIFT:
        x = dx * np.arange(1, N)
        lower = np.full(N - 1, 1.0 / dx**2 + gamma / (2.0 * dx))
        upper = np.full(N - 1, 1.0 / dx**2 - gamma / (2.0 * dx))
        diag = np.full(N - 1, -2.0 / dx**2)
    else:
        raise ValueError(f"kind must be one of {kinds}, got {kind}")
    lower[0] = 0.0
    upper[-1] = 0.0
    return x, lower, diag, upper


def _apply(lower, diag, upper, v):
    result = diag * v
    result[1:] += lower[1:] * v[:-1]
    result[:-1] += upper[:-1] * v[1:]
    return result


def _growth_rate(times, cumulative, start: float) -> float:
    mask = times >= start
    if np.count_nonzero(mask) < 3:
        mask = np.ones_like(times, dtype=bool)
    return linear_fit(times[mask], cumulative[mask]).slope


def lyapunov_exponent(
    kind: str,
    c: LinearCoefficient,
    l: float,
    N: int = 400,
    horizon: float = 50.0,
    dt: float = None,
    gamma: float = 0.0,
    tolerance: float = CONVERGENCE_TOLERANCE,
) -> LyapunovEstimate:
    """
    Principal Lyapunov exponent of v_t = v_xx - gamma v_x + a(t) v on [0, l] by normalized evolution.
    TR-BDF2 diffusion (L-stable, so stiff grid modes are damped at any dt) with the exact factor
    exp(integral a) per step; sup-norm renormalization every unit of time.
        Inputs: kind, LinearCoefficient, l > 0, N >= 16 cells, horizon, dt <= dx (default dx), gamma >= 0
        Outputs: LyapunovEstimate
    """
    if not l > 0:
        raise ValueError(f"l must be > 0, got {l}")
    if N < MIN_CELLS:
        raise ValueError(f"N must be >= {MIN_CELLS} cells, got {N}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    dx = l / N
    n_steps, dt_used = steps_for(horizon, dx if dt is None else dt)
    if dt_used > dx * (1 + 1e-12):
        raise ValueError(f"dt = {dt_used} exceeds the accuracy guard dt <= dx = {dx}")

    x, lower, diag, upper = _operator_bands(kind, l, N, gamma)
    if kind == NEUMANN_DIRICHLET:
        v = np.cos(math.pi * x / (2.0 * l))
    else:
        v = np.exp(gamma * x / 2.0) * np.sin(math.pi * x / l)
    v = v / np.max(np.abs(v))

    # trapezoid stage to t + TRBDF2_GAMMA dt, then BDF2; both stages share one implicit matrix
    half = 0.5 * TRBDF2_GAMMA * dt_used
    implicit_lower, implicit_diag, implicit_upper = -half * lower, 1.0 - half * diag, -half * upper
    stage_weight = 1.0 / (TRBDF2_GAMMA * (2.0 - TRBDF2_GAMMA))
    start_weight = (1.0 - TRBDF2_GAMMA) ** 2 * stage_weight
    step_times = dt_used * np.arange(n_steps + 1)
    factors = np.exp(ap_integral(c.a, step_times[:-1], step_times[1:]))
    steps_per_renormalization = max(1, int(round(RENORMALIZATION_PERIOD / dt_used)))

    growth_log = []
    times = []
    for n in range(n_steps):
        stage = solve_tridiagonal(implicit_lower, implicit_diag, implicit_upper, v + half * _apply(lower, diag, upper, v))
        v = factors[n] * solve_tridiagonal(implicit_lower, implicit_diag, implicit_upper, stage_weight * stage - start_weight * v)
        if (n + 1) % steps_per_renormalization == 0 or n + 1 == n_steps:
            norm = float(np.max(np.abs(v)))
            if norm == 0.0 or not math.isfinite(norm):
                raise RuntimeError(f"Normalized evolution degenerated at t = {step_times[n + 1]}")
            growth_log.append(math.log(norm))
            times.append(float(step_times[n + 1]))
            v = v / norm

    times_array = np.asarray(times)
    cumulative = np.cumsum(growth_log)
    value = _growth_rate(times_array, cumulative, 0.25 * horizon)
    tail_value = _growth_rate(times_array, cumulative, 0.5 * horizon)
    converged = abs(value - tail_value) < tolerance
    if not converged:
        logger.warning(
            f"Lyapunov estimate ({kind}, l = {l}) not converged: tail rates {value:.6g} vs {tail_value:.6g}"
        )
    return LyapunovEstimate(
        value=value,
        mean_rate=float(cumulative[-1]) / horizon,
        horizon=horizon,
        growth_log=tuple(growth_log),
        times=tuple(times),
        converged=converged,
    )


def lyapunov_nd(c: LinearCoefficient, l: float, N: int = 400, horizon: float = 50.0, dt: float = None) -> LyapunovEstimate:
    """
    lambda(a, l) for v_t = v_xx + a(t) v, v_x(t, 0) = v(t, l) = 0
    """
    return lyapunov_exponent(NEUMANN_DIRICHLET, c, l, N=N, horizon=horizon, dt=dt)


def lyapunov_dd_drift(
    c: LinearCoefficient, gamma: float, l: float, N: int = 400, horizon: float = 50.0, dt: float = None
) -> LyapunovEstimate:
    """
    lambda~(a, gamma, l) for v_t = v_xx - gamma v_x + a(t) v, v(t, 0) = v(t, l) = 0
    """
    return lyapunov_exponent(DIRICHLET_DRIFT, c, l, N=N, horizon=horizon, dt=dt, gamma=gamma)


def critical_length(
    c: LinearCoefficient,
    kind: str,
    bracket: tuple,
    gamma: float = 0.0,
    N: int = 100,
    horizon: float = 50.0,
    tolerance: float = ZERO_TOLERANCE,
    max_probes: int = MAX_PROBES,
) -> float:
    """
    Domain length where the principal exponent changes sign (l* for neumann_dirichlet,
    L* for dirichlet_drift), by bisection on l using that the exponent increases with l
        Inputs: LinearCoefficient with mean(a) > 0, kind, bracket (l_lo, l_hi) with opposite signs
        Outputs: critical length
    """
    if ap_mean(c.a) <= 0:
        raise ValueError(f"critical_length requires mean(a) > 0, got {ap_mean(c.a)}")
    l_lo, l_hi = sorted(float(value) for value in bracket)

    def exponent(l):
        return lyapunov_exponent(kind, c, l, N=N, horizon=horizon, gamma=gamma).value

    lambda_lo, lambda_hi = exponent(l_lo), exponent(l_hi)
    probes = 2
    if not (lambda_lo < 0 < lambda_hi):
        raise BracketError(
            f"Exponent does not change sign on [{l_lo}, {l_hi}]: lambda = {lambda_lo:.6g}, {lambda_hi:.6g}"
        )

    l_mid = 0.5 * (l_lo + l_hi)
    while probes < max_probes:
        l_mid = 0.5 * (l_lo + l_hi)
        lambda_mid = exponent(l_mid)
        probes += 1
        logger.debug(f"critical_length probe {probes}: l = {l_mid:.10g}, lambda = {lambda_mid:.3e}")
        if abs(lambda_mid) < tolerance:
            return l_mid
        if lambda_mid < 0:
            l_lo = l_mid
        else:
            l_hi = l_mid
    logger.warning(f"critical_length stopped after {probes} probes with bracket [{l_lo}, {l_hi}]")
    return 0.5 * (l_lo + l_hi)
