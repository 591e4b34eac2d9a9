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
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from spreading_utils.forcing_utils import ReactionModel, ap_mean
from spreading_utils.grid_utils import interpolate_profile
from spreading_utils.kinetics_utils import ScalarTrajectory, ap_positive_solution, trajectory_times
from spreading_utils.statistics_utils import linear_fit

logger = logging.getLogger(__name__)

SPREADING = "Spreading"
VANISHING = "Vanishing"
UNDETERMINED = "Undetermined"
verdicts = [SPREADING, VANISHING, UNDETERMINED]

VANISH_TOLERANCE = 1e-4
# spreading threshold on u, as a fraction of min V*
SPREAD_FRACTION = 0.1
PLATEAU_TOLERANCE = 1e-5
LENGTH_SLACK = 1.05
SPREAD_MARGIN = 5.0
OCCUPANCY_WINDOW = 0.1
OCCUPANCY_POINTS = 101


def critical_lengths(m: ReactionModel) -> tuple:
    """
    (l*, L*) for space-independent a: the roots of the closed-form exponents,
    pi / (2 sqrt(mean a)) and pi / sqrt(mean a)
    """
    a_mean = ap_mean(m.a)
    if a_mean <= 0:
        raise ValueError(f"Critical lengths need mean(a) > 0, got {a_mean}")
    l_star = 0.5 * math.pi / math.sqrt(a_mean)
    L_star = math.pi / math.sqrt(a_mean)
    return l_star, L_star


@lru_cache(maxsize=32)
def v_star_floor(m: ReactionModel, horizon: float) -> float:
    """Smallest value of V* on [0, horizon]"""
    return float(np.min(ap_positive_solution(m, horizon=horizon).values))


def default_critical_length(traj) -> float:
    l_star, L_star = critical_lengths(traj.model)
    return L_star if traj.mode == "double" else l_star


####################
## CLASSIFICATION ##
####################


@dataclass(frozen=True)
class ClassificationOutcome:
    """
    verdict: Spreading, Vanishing or Undetermined
    evidence: critical length, thresholds and the measured quantities behind the verdict
    """

    verdict: str
    h_final: float
    g_final: float
    u_sup_final: float
    evidence: dict = field(default_factory=dict)


def windowed_minimum(traj, window_fraction: float = OCCUPANCY_WINDOW) -> float:
    """
    Smallest value of u on the initial domain [g0, h0] over the snapshots in the trailing
    window_fraction of the run
    """
    grid = np.linspace(traj.g0, traj.h0, OCCUPANCY_POINTS)
    start = traj.horizon * (1.0 - window_fraction)
    minimum = math.inf
    for t, x, u in zip(traj.snapshot_times, traj.snapshot_x, traj.snapshot_u):
        if t >= start - 1e-9:
            minimum = min(minimum, float(np.min(interpolate_profile(x, u, grid))))
    return minimum


def classify(
    traj,
    lstar: float = None,
    vanish_tol: float = VANISH_TOLERANCE,
    spread_tol: float = None,
    spread_fraction: float = SPREAD_FRACTION,
    plateau_tol: float = PLATEAU_TOLERANCE,
    slack: float = LENGTH_SLACK,
    window_fraction: float = OCCUPANCY_WINDOW,
    min_horizon: float = 0.0,
) -> ClassificationOutcome:
    """
    Finite-horizon spreading/vanishing verdict of a free boundary run
        Vanishing: fronts at rest (speed < plateau_tol), extent h - g <= slack * lstar, sup u < vanish_tol
        Spreading: extent > max(2 lstar, h0 - g0 + 5) and min of u on [g0, h0] over the trailing window > spread_tol,
                   which defaults to spread_fraction * min V* over the run
        Undetermined otherwise, or when the run is shorter than min_horizon
        Inputs: FrontTrajectory, lstar (default l* for single, L* for double runs), thresholds
        Outputs: ClassificationOutcome
    """
    if lstar is None:
        lstar = default_critical_length(traj)
    if spread_tol is None:
        spread_tol = spread_fraction * v_star_floor(traj.model, traj.horizon)
    final = traj.final_state
    extent = final.h - final.g
    front_velocity = max(final.h_dot, -final.g_dot)
    u_sup = float(np.max(final.v))
    occupancy_min = windowed_minimum(traj, window_fraction)
    spread_extent = max(2.0 * lstar, traj.extent0 + SPREAD_MARGIN)

    evidence = {
        "lstar": lstar,
        "extent": extent,
        "front_velocity": front_velocity,
        "occupancy_min": occupancy_min,
        "vanish_tol": vanish_tol,
        "spread_tol": spread_tol,
        "plateau_tol": plateau_tol,
        "slack": slack,
        "spread_extent": spread_extent,
        "slack_binding": False,
    }

    verdict = UNDETERMINED
    if traj.horizon < min_horizon:
        logger.info(f"Run horizon {traj.horizon} below the minimum {min_horizon}; verdict undetermined")
    elif front_velocity < plateau_tol and extent <= slack * lstar and u_sup < vanish_tol:
        verdict = VANISHING
        if extent > lstar:
            evidence["slack_binding"] = True
            logger.warning(f"Vanishing verdict relies on the {slack} slack: extent {extent:.6g} > lstar {lstar:.6g}")
    elif extent > spread_extent and occupancy_min > spread_tol:
        verdict = SPREADING

    return ClassificationOutcome(verdict=verdict, h_final=final.h, g_final=final.g, u_sup_final=u_sup, evidence=evidence)


def verdicts_monotone(sequence) -> bool:
    """
    Whether a verdict sequence ordered by increasing mu reads Vanishing* Spreading* with no Undetermined
    """
    sequence = list(sequence)
    if UNDETERMINED in sequence:
        return False
    switches = sum(1 for before, after in zip(sequence, sequence[1:]) if before != after)
    if switches == 0:
        return True
    return switches == 1 and sequence[0] == VANISHING


#################
## FRONT SPEED ##
#################


@dataclass(frozen=True)
class SpeedEstimate:
    slope: float
    intercept: float
    rms_residual: float
    average_speed: float
    window_start: float
    side: str


def front_speed(traj, window_fraction: float = 0.5, outcome: ClassificationOutcome = None, side: str = "h") -> SpeedEstimate:
    """
    Least-squares slope of the front position over the trailing window_fraction of the run
        Inputs: FrontTrajectory, window_fraction in (0, 1], optional ClassificationOutcome
                (classified with defaults when omitted), side "h" or "g" (the slope of -g)
        Outputs: SpeedEstimate with the slope, intercept, RMS residual and position(T) / T
    """
    if not 0 < window_fraction <= 1:
        raise ValueError(f"window_fraction must lie in (0, 1], got {window_fraction}")
    if side not in ("h", "g"):
        raise ValueError(f"side must be 'h' or 'g', got {side}")
    if outcome is None:
        outcome = classify(traj)
    if outcome.verdict != SPREADING:
        raise ValueError(f"front_speed needs a {SPREADING} trajectory, got {outcome.verdict}")

    times = np.asarray(traj.times, dtype=float)
    position = np.asarray(traj.h if side == "h" else -np.asarray(traj.g), dtype=float)
    window_start = times[-1] - window_fraction * (times[-1] - times[0])
    mask = times >= window_start - 1e-9
    fit = linear_fit(times[mask], position[mask])
    return SpeedEstimate(
        slope=fit.slope,
        intercept=fit.intercept,
        rms_residual=fit.rms_residual,
        average_speed=float(position[-1] / times[-1]),
        window_start=float(window_start),
        side=side,
    )


##################
## MASS BALANCE ##
##################


def mass_balance_residual(traj) -> tuple:
    """
    r(t) = d/dt integral u dx + (h' - g') / mu - integral u f(t, u) dx on each sample interval [t_k, t_k+1]:
    the mass change is a forward difference, the front flux is taken at t_k+1 and the reaction at t_k,
    the time levels of the implicit diffusion and the explicit reaction
        Inputs: FrontTrajectory (sample_stride = 1 differences every step)
        Outputs: (interval start times, residual)
    """
    times = np.asarray(traj.times, dtype=float)
    if times.size < 2:
        return np.empty(0), np.empty(0)
    mass = np.asarray(traj.mass, dtype=float)
    mass_rate = np.diff(mass) / np.diff(times)
    front_flux = (np.asarray(traj.h_dot)[1:] - np.asarray(traj.g_dot)[1:]) / traj.mu
    residual = mass_rate + front_flux - np.asarray(traj.reaction_integral)[:-1]
    return times[:-1], residual


def residual_norm(times, residual, t_min: float = 1.0) -> float:
    """
    sup |r| over t >= t_min; the initial layer of non-smooth data is left out
    """
    times = np.asarray(times)
    mask = times >= t_min
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(np.asarray(residual)[mask])))


####################
## PROFILE CHECKS ##
####################


def _v_star_at(v_star, t: float) -> float:
    if isinstance(v_star, ScalarTrajectory):
        return float(np.interp(t, trajectory_times(v_star), v_star.values))
    return float(v_star)


def _snapshot_index(traj, t: float) -> int:
    if t is None:
        return len(traj.snapshot_times) - 1
    index = int(np.argmin(np.abs(np.asarray(traj.snapshot_times) - t)))
    if abs(traj.snapshot_times[index] - t) > 1e-6:
        raise ValueError(f"No profile snapshot at t = {t} (nearest {traj.snapshot_times[index]})")
    return index


def behind_front_gap(traj, v_star, c: float, eps: float, t: float = None) -> float:
    """
    max |u(t, x) - V*(t)| over the region |x| <= (c - eps) t behind the front
        Inputs: FrontTrajectory, V* (ScalarTrajectory or constant), speed c, 0 < eps < c, snapshot time (default last)
        Outputs: the gap (0 when the region is empty)
    """
    if not 0 < eps < c:
        raise ValueError(f"eps must lie in (0, c), got eps = {eps}, c = {c}")
    index = _snapshot_index(traj, t)
    t_snap = float(traj.snapshot_times[index])
    x = traj.snapshot_x[index]
    u = traj.snapshot_u[index]
    reach = (c - eps) * t_snap
    mask = np.abs(x) <= reach
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(u[mask] - _v_star_at(v_star, t_snap))))


def occupancy(traj, c_prime: float) -> float:
    """
    min of u over |x| <= c' t at the last snapshot, points beyond the fronts counting as 0
    """
    index = len(traj.snapshot_times) - 1
    t_snap = float(traj.snapshot_times[index])
    reach = c_prime * t_snap
    low = 0.0 if traj.mode == "single" else -reach
    grid = np.linspace(low, reach, OCCUPANCY_POINTS)
    return float(np.min(interpolate_profile(traj.snapshot_x[index], traj.snapshot_u[index], grid)))


def ordering_violation(lower, upper) -> float:
    """
    Largest excess of the lower run's profile over the upper one, on the lower run's nodes, at
    every common snapshot (upper profile interpolated, zero beyond its fronts)
    """
    count = min(len(lower.snapshot_times), len(upper.snapshot_times))
    worst = 0.0
    for k in range(count):
        if abs(lower.snapshot_times[k] - upper.snapshot_times[k]) > 1e-9:
            raise ValueError(f"Snapshot times differ at index {k}")
        upper_values = interpolate_profile(upper.snapshot_x[k], upper.snapshot_u[k], lower.snapshot_x[k])
        worst = max(worst, float(np.max(lower.snapshot_u[k] - upper_values)))
    return worst


def profiles_ordered(lower, upper, tol: float = 1e-6) -> bool:
    return ordering_violation(lower, upper) <= tol
