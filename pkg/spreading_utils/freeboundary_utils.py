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

from spreading_utils.forcing_utils import ReactionModel, ap_eval, require_hypotheses
from spreading_utils.grid_utils import flux_left, flux_right, integrate, solve_tridiagonal, steps_for
from spreading_utils.metrics_utils import SPREADING, UNDETERMINED, VANISHING, classify, critical_lengths
from spreading_utils.spectral_utils import BracketError

logger = logging.getLogger(__name__)

SINGLE = "single"
DOUBLE = "double"

SAMPLE_STRIDE = 10
SNAPSHOT_INTERVAL = 1.0
# a front closer than COLLAPSE_CELLS initial cells to the opposite end is a failed step
COLLAPSE_CELLS = 4
COMPATIBILITY_TOLERANCE = 1e-12
NEUMANN_TOLERANCE = 1e-2
MAX_HORIZON_FACTOR = 8
CRITICAL_MU_WIDTH = 0.05
# verdicts are re-checked at (1 -/+ CRITICAL_MU_CHECK) times the bisection estimate
CRITICAL_MU_CHECK = 0.1


class FrontCollapseError(RuntimeError):
    """Raised when a front position becomes non-finite or collapses onto the other end."""


@dataclass(frozen=True, eq=False)
class FrontState:
    """
    State on the fixed reference grid
        xi: [0, 1] (single) or [-1, 1] (double)
        v: profile, v(xi = 1) = 0 (and v(xi = -1) = 0 in double mode)
    """

    t: float
    h: float
    g: float
    xi: np.ndarray
    v: np.ndarray
    h_dot: float
    g_dot: float

    @property
    def x(self) -> np.ndarray:
        if self.g == 0.0 and self.xi[0] == 0.0:
            return self.h * self.xi
        return 0.5 * (self.h + self.g) + 0.5 * (self.h - self.g) * self.xi


@dataclass(frozen=True, eq=False)
class FrontTrajectory:
    """
    Sampled evolution of a free boundary run. Series are recorded every `sample_stride` steps;
    snapshots (x, u) every `snapshot_interval` time units and at the end of the run.
    """

    mode: str
    model: ReactionModel
    mu: float
    h0: float
    g0: float
    N: int
    dt: float
    horizon: float
    times: np.ndarray
    h: np.ndarray
    g: np.ndarray
    h_dot: np.ndarray
    g_dot: np.ndarray
    mass: np.ndarray
    u_sup: np.ndarray
    u_at_0: np.ndarray
    reaction_integral: np.ndarray
    snapshot_times: np.ndarray
    snapshot_x: tuple
    snapshot_u: tuple
    final_state: FrontState
    u0_sup: float
    clamped_steps: int = 0

    @property
    def extent0(self) -> float:
        return self.h0 - self.g0


def initial_profile_single(h0: float, amplitude: float = 1.0):
    """
    amplitude * cos(pi x / (2 h0)) on [0, h0]: u0'(0) = u0(h0) = 0, u0 > 0 on [0, h0)
    """
    if not h0 > 0:
        raise ValueError(f"h0 must be > 0, got {h0}")

    def profile(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < h0, amplitude * np.cos(0.5 * math.pi * np.clip(x, 0.0, h0) / h0), 0.0)

    return profile


def initial_profile_double(g0: float, h0: float, amplitude: float = 1.0):
    """
    amplitude * cos(pi (x - m0) / (2 w0)) on [g0, h0] with m0, w0 the midpoint and half-width
    """
    if not h0 > g0:
        raise ValueError(f"h0 must exceed g0, got g0 = {g0}, h0 = {h0}")
    midpoint = 0.5 * (h0 + g0)
    half_width = 0.5 * (h0 - g0)

    def profile(x):
        x = np.asarray(x, dtype=float)
        inside = (x > g0) & (x < h0)
        return np.where(inside, amplitude * np.cos(0.5 * math.pi * (x - midpoint) / half_width), 0.0)

    return profile


def _sample_initial(u0, x, label: str) -> np.ndarray:
    values = np.array(u0(x) if callable(u0) else u0, dtype=float)
    if values.shape != x.shape:
        raise ValueError(f"{label}: u0 has {values.size} values, expected {x.size}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{label}: u0 has non-finite values")
    if np.any(values < 0):
        raise ValueError(f"{label}: u0 must be nonnegative")
    return values


def _check_compatibility(values, dx: float, mode: str) -> None:
    """
    u0 = 0 at the fronts, u0 > 0 strictly inside, u0'(0) = 0 at the Neumann end (single mode).
    The zero profile is accepted.
    """
    if not np.any(values > 0):
        return
    scale = float(np.max(values))
    if abs(values[-1]) > COMPATIBILITY_TOLERANCE * scale:
        raise ValueError(f"u0 must vanish at the right front, got {values[-1]}")
    if mode == DOUBLE:
        if abs(values[0]) > COMPATIBILITY_TOLERANCE * scale:
            raise ValueError(f"u0 must vanish at the left front, got {values[0]}")
        interior = values[1:-1]
    else:
        interior = values[:-1]
        extent = dx * (len(values) - 1)
        slope = flux_left(values, dx)
        if abs(slope) > NEUMANN_TOLERANCE * scale / extent:
            raise ValueError(f"u0 must satisfy u0'(0) = 0, got one-sided slope {slope:.3e}")
    if np.any(interior <= 0):
        raise ValueError("u0 must be positive strictly inside the initial domain")


class _Recorder:
    """Collects the sampled series and snapshots of a run"""

    def __init__(self):
        self.series = {key: [] for key in ["t", "h", "g", "h_dot", "g_dot", "mass", "u_sup", "u_at_0", "reaction"]}
        self.snapshot_times = []
        self.snapshot_x = []
        self.snapshot_u = []

    def sample(self, t, h, g, h_dot, g_dot, x, v, growth):
        dx = (h - g) / (len(v) - 1)
        self.series["t"].append(t)
        self.series["h"].append(h)
        self.series["g"].append(g)
        self.series["h_dot"].append(h_dot)
        self.series["g_dot"].append(g_dot)
        self.series["mass"].append(integrate(v, dx))
        self.series["u_sup"].append(float(np.max(v)))
        self.series["u_at_0"].append(float(np.interp(0.0, x, v, left=math.nan, right=math.nan)))
        self.series["reaction"].append(integrate(v * growth, dx))

    def snapshot(self, t, x, v):
        if self.snapshot_times and self.snapshot_times[-1] == t:
            return
        self.snapshot_times.append(t)
        self.snapshot_x.append(x.copy())
        self.snapshot_u.append(v.copy())

    def trajectory(self, **fields) -> FrontTrajectory:
        series = {key: np.asarray(value, dtype=float) for key, value in self.series.items()}
        return FrontTrajectory(
            times=series["t"],
            h=series["h"],
            g=series["g"],
            h_dot=series["h_dot"],
            g_dot=series["g_dot"],
            mass=series["mass"],
            u_sup=series["u_sup"],
            u_at_0=series["u_at_0"],
            reaction_integral=series["reaction"],
            snapshot_times=np.asarray(self.snapshot_times),
            snapshot_x=tuple(self.snapshot_x),
            snapshot_u=tuple(self.snapshot_u),
            **fields,
        )


def _check_front(h: float, g: float, cell0: float, t: float) -> None:
    if not (math.isfinite(h) and math.isfinite(g)):
        raise FrontCollapseError(f"Front position became non-finite at t = {t:.6g}")
    if h - g < COLLAPSE_CELLS * cell0:
        raise FrontCollapseError(f"Domain collapsed to {h - g:.3e} (< {COLLAPSE_CELLS} cells) at t = {t:.6g}")


def _run_setup(m: ReactionModel, mu: float, N: int, dt: float, horizon: float, sample_stride: int, snapshot_interval: float):
    require_hypotheses(m)
    if not mu > 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if N < 16:
        raise ValueError(f"N must be >= 16 cells, got {N}")
    if sample_stride < 1:
        raise ValueError(f"sample_stride must be >= 1, got {sample_stride}")
    n_steps, dt_used = steps_for(horizon, dt)
    if dt_used >= 0.5 / m.sup_abs_a:
        raise ValueError(f"dt = {dt_used} violates the reaction step guard dt < 0.5 / sup|a| = {0.5 / m.sup_abs_a}")
    times = dt_used * np.arange(n_steps + 1)
    snapshot_stride = max(1, int(round(snapshot_interval / dt_used)))
    return n_steps, dt_used, times, ap_eval(m.a, times), ap_eval(m.b, times), snapshot_stride


def fb_evolve_single(
    m: ReactionModel,
    mu: float,
    u0,
    h0: float,
    N: int = 400,
    dt: float = 0.01,
    horizon: float = 30.0,
    sample_stride: int = SAMPLE_STRIDE,
    snapshot_interval: float = SNAPSHOT_INTERVAL,
) -> FrontTrajectory:
    """
    Single front problem u_t = u_xx + u f(t, u) on (0, h(t)), u_x(t, 0) = u(t, h(t)) = 0,
    h' = -mu u_x(t, h), solved on the fixed grid xi = x / h(t):
        v_t = v_xixi / h^2 + xi (h' / h) v_xi + v f(t, v),   h' = -mu v_xi(t, 1) / h
    h' is taken from the current profile (one-sided flux), diffusion and drift are implicit,
    reaction explicit; a ghost node enforces v_xi = 0 at xi = 0.
        Inputs: ReactionModel, mu > 0, u0 (callable of x or N + 1 values on [0, h0]), h0 > 0, N cells, dt, horizon
        Outputs: FrontTrajectory
    """
    n_steps, dt_used, times, a_values, b_values, snapshot_stride = _run_setup(
        m, mu, N, dt, horizon, sample_stride, snapshot_interval
    )
    if not h0 > 0:
        raise ValueError(f"h0 must be > 0, got {h0}")
    dxi = 1.0 / N
    xi = dxi * np.arange(N + 1)
    v = _sample_initial(u0, h0 * xi, "fb_evolve_single")
    _check_compatibility(v, h0 * dxi, SINGLE)
    v[-1] = 0.0
    u0_sup = float(np.max(v))
    cell0 = h0 * dxi
    drift_nodes = xi[:-1]

    recorder = _Recorder()
    h = float(h0)
    clamped = 0
    clipped = 0
    for n in range(n_steps + 1):
        t = float(times[n])
        h_dot_raw = -mu * flux_right(v, dxi) / h
        h_dot = max(h_dot_raw, 0.0)
        if h_dot_raw < -1e-12:
            clamped += 1
        growth = a_values[n] - b_values[n] * v
        if n % sample_stride == 0:
            recorder.sample(t, h, 0.0, h_dot, 0.0, h * xi, v, growth)
        if n % snapshot_stride == 0 or n == n_steps:
            recorder.snapshot(t, h * xi, v)
        if n == n_steps:
            break

        h_new = h + dt_used * h_dot
        _check_front(h_new, 0.0, cell0, t + dt_used)
        alpha = 1.0 / (h_new * dxi) ** 2
        beta = drift_nodes * h_dot / (2.0 * h_new * dxi)
        lower = -dt_used * (alpha - beta)
        upper = -dt_used * (alpha + beta)
        upper[0] = -2.0 * dt_used * alpha
        diag = np.full(N, 1.0 + 2.0 * dt_used * alpha)
        interior = v[:-1]
        rhs = interior + dt_used * interior * growth[:-1]
        interior = solve_tridiagonal(lower, diag, upper, rhs)
        if np.any(interior < 0):
            clipped += 1
            interior = np.maximum(interior, 0.0)
        v = np.append(interior, 0.0)
        h = h_new

    if clamped:
        logger.warning(f"Front speed clamped at zero in {clamped} steps (mu = {mu}, h0 = {h0})")
    if clipped:
        logger.warning(f"Negative values clipped in {clipped} free boundary steps (dt = {dt_used})")
    final_state = FrontState(t=float(times[-1]), h=h, g=0.0, xi=xi, v=v, h_dot=h_dot, g_dot=0.0)
    logger.debug(f"fb_evolve_single mu = {mu}, h0 = {h0}: h({horizon}) = {h:.10g}, sup u = {np.max(v):.3e}")
    return recorder.trajectory(
        mode=SINGLE,
        model=m,
        mu=mu,
        h0=float(h0),
        g0=0.0,
        N=N,
        dt=dt_used,
        horizon=float(horizon),
        final_state=final_state,
        u0_sup=u0_sup,
        clamped_steps=clamped,
    )


def fb_evolve_double(
    m: ReactionModel,
    mu: float,
    u0,
    g0: float,
    h0: float,
    N: int = 200,
    dt: float = 0.01,
    horizon: float = 30.0,
    sample_stride: int = SAMPLE_STRIDE,
    snapshot_interval: float = SNAPSHOT_INTERVAL,
) -> FrontTrajectory:
    """
    Double front problem on (g(t), h(t)) with u = 0 and the Stefan condition at both ends,
    straightened by xi = (2x - (h + g)) / (h - g) in [-1, 1] with midpoint m and half-width w:
        v_t = v_xixi / w^2 + ((m' + xi w') / w) v_xi + v f(t, v)
        h' = -mu v_xi(t, 1) / w,   g' = -mu v_xi(t, -1) / w
    N cells per half, so the reference grid has 2N + 1 nodes and is mirror symmetric.
        Inputs: ReactionModel, mu > 0, u0 (callable of x or 2N + 1 values on [g0, h0]), g0 < h0, N, dt, horizon
        Outputs: FrontTrajectory
    """
    n_steps, dt_used, times, a_values, b_values, snapshot_stride = _run_setup(
        m, mu, N, dt, horizon, sample_stride, snapshot_interval
    )
    if not h0 > g0:
        raise ValueError(f"h0 must exceed g0, got g0 = {g0}, h0 = {h0}")
    dxi = 1.0 / N
    # (k - N) / N is exactly antisymmetric about the midpoint
    xi = (np.arange(2 * N + 1) - N) / N
    midpoint = 0.5 * (h0 + g0)
    half_width = 0.5 * (h0 - g0)
    v = _sample_initial(u0, midpoint + half_width * xi, "fb_evolve_double")
    _check_compatibility(v, half_width * dxi, DOUBLE)
    v[0] = 0.0
    v[-1] = 0.0
    u0_sup = float(np.max(v))
    cell0 = half_width * dxi
    drift_nodes = xi[1:-1]

    recorder = _Recorder()
    h, g = float(h0), float(g0)
    clamped = 0
    clipped = 0
    for n in range(n_steps + 1):
        t = float(times[n])
        w = 0.5 * (h - g)
        h_dot_raw = -mu * flux_right(v, dxi) / w
        g_dot_raw = -mu * flux_left(v, dxi) / w
        h_dot = max(h_dot_raw, 0.0)
        g_dot = min(g_dot_raw, 0.0)
        if h_dot_raw < -1e-12 or g_dot_raw > 1e-12:
            clamped += 1
        growth = a_values[n] - b_values[n] * v
        x = 0.5 * (h + g) + w * xi
        if n % sample_stride == 0:
            recorder.sample(t, h, g, h_dot, g_dot, x, v, growth)
        if n % snapshot_stride == 0 or n == n_steps:
            recorder.snapshot(t, x, v)
        if n == n_steps:
            break

        h_new = h + dt_used * h_dot
        g_new = g + dt_used * g_dot
        _check_front(h_new, g_new, cell0, t + dt_used)
        w_new = 0.5 * (h_new - g_new)
        mid_dot = 0.5 * (h_dot + g_dot)
        width_dot = 0.5 * (h_dot - g_dot)
        alpha = 1.0 / (w_new * dxi) ** 2
        beta = (mid_dot + drift_nodes * width_dot) / (2.0 * w_new * dxi)
        lower = -dt_used * (alpha - beta)
        upper = -dt_used * (alpha + beta)
        diag = np.full(2 * N - 1, 1.0 + 2.0 * dt_used * alpha)
        interior = v[1:-1]
        rhs = interior + dt_used * interior * growth[1:-1]
        interior = solve_tridiagonal(lower, diag, upper, rhs)
        if np.any(interior < 0):
            clipped += 1
            interior = np.maximum(interior, 0.0)
        v = np.concatenate(([0.0], interior, [0.0]))
        h, g = h_new, g_new

    if clamped:
        logger.warning(f"Front speeds clamped at zero in {clamped} steps (mu = {mu})")
    if clipped:
        logger.warning(f"Negative values clipped in {clipped} free boundary steps (dt = {dt_used})")
    final_state = FrontState(t=float(times[-1]), h=h, g=g, xi=xi, v=v, h_dot=h_dot, g_dot=g_dot)
    logger.debug(f"fb_evolve_double mu = {mu}: [g, h]({horizon}) = [{g:.10g}, {h:.10g}], sup u = {np.max(v):.3e}")
    return recorder.trajectory(
        mode=DOUBLE,
        model=m,
        mu=mu,
        h0=float(h0),
        g0=float(g0),
        N=N,
        dt=dt_used,
        horizon=float(horizon),
        final_state=final_state,
        u0_sup=u0_sup,
        clamped_steps=clamped,
    )


#################
## CRITICAL MU ##
#################


@dataclass(frozen=True)
class CriticalMuResult:
    """
    Bracket (mu_lo, mu_hi) with a Vanishing verdict at mu_lo and a Spreading verdict at mu_hi
        probes: (mu, verdict, horizon used) for every evolution run
        converged: relative width mu_hi / mu_lo - 1 reached the target
        checks: (mu, verdict) below and above the estimate by CRITICAL_MU_CHECK, empty unless converged
    """

    mu_lo: float
    mu_hi: float
    probes: tuple
    converged: bool
    checks: tuple = ()

    @property
    def relative_width(self) -> float:
        return self.mu_hi / self.mu_lo - 1.0

    @property
    def estimate(self) -> float:
        return math.sqrt(self.mu_lo * self.mu_hi)

    @property
    def verified(self) -> bool:
        return [verdict for _, verdict in self.checks] == [VANISHING, SPREADING]


def probe_verdict(
    m: ReactionModel,
    mu: float,
    u0,
    g0: float,
    h0: float,
    N: int = 200,
    dt: float = 0.01,
    horizon: float = 40.0,
    max_horizon_factor: int = MAX_HORIZON_FACTOR,
    classify_params: dict = None,
) -> tuple:
    """
    Double front run and classification; Undetermined verdicts double the horizon up to
    max_horizon_factor times the base horizon
        Outputs: (ClassificationOutcome, horizon used)
    """
    classify_params = classify_params or {}
    lstar = critical_lengths(m)[1]
    run_horizon = horizon
    while True:
        trajectory = fb_evolve_double(m, mu, u0, g0, h0, N=N, dt=dt, horizon=run_horizon)
        outcome = classify(trajectory, lstar, **classify_params)
        if outcome.verdict != UNDETERMINED or run_horizon >= max_horizon_factor * horizon:
            return outcome, run_horizon
        run_horizon *= 2
        logger.warning(f"Verdict undetermined at mu = {mu:.6g}; extending horizon to {run_horizon}")


def critical_mu(
    m: ReactionModel,
    g0: float,
    h0: float,
    bracket: tuple,
    u0_family=None,
    N: int = 200,
    dt: float = 0.01,
    horizon: float = 40.0,
    relative_width: float = CRITICAL_MU_WIDTH,
    max_horizon_factor: int = MAX_HORIZON_FACTOR,
    classify_params: dict = None,
    max_probes: int = 40,
) -> CriticalMuResult:
    """
    Bisection in log(mu) for the spreading threshold of the double front problem
        Inputs:
            m: ReactionModel
            g0, h0: initial fronts with h0 - g0 < L*
            bracket: (mu_lo, mu_hi), must classify Vanishing and Spreading
            u0_family: callable (g0, h0) -> initial profile, default unit cosine cap
        Outputs: CriticalMuResult
    """
    lstar = critical_lengths(m)[1]
    if not h0 - g0 < lstar:
        raise ValueError(f"critical_mu requires h0 - g0 < L* = {lstar:.10g}, got {h0 - g0}")
    mu_lo, mu_hi = (float(value) for value in bracket)
    if not 0 < mu_lo < mu_hi:
        raise ValueError(f"bracket must satisfy 0 < mu_lo < mu_hi, got {bracket}")
    u0 = (u0_family or initial_profile_double)(g0, h0)

    probes = []

    def probe(mu):
        outcome, used = probe_verdict(
            m, mu, u0, g0, h0, N=N, dt=dt, horizon=horizon,
            max_horizon_factor=max_horizon_factor, classify_params=classify_params,
        )
        probes.append((mu, outcome.verdict, used))
        logger.info(f"critical_mu probe {len(probes)}: mu = {mu:.8g} -> {outcome.verdict}")
        return outcome.verdict

    if probe(mu_lo) != VANISHING:
        raise BracketError(f"mu_lo = {mu_lo} does not classify as {VANISHING}")
    if probe(mu_hi) != SPREADING:
        raise BracketError(f"mu_hi = {mu_hi} does not classify as {SPREADING}")

    while mu_hi / mu_lo - 1.0 > relative_width:
        if len(probes) >= max_probes:
            logger.warning(f"critical_mu stopped after {len(probes)} probes at [{mu_lo}, {mu_hi}]")
            return CriticalMuResult(mu_lo, mu_hi, tuple(probes), False)
        verdict = UNDETERMINED
        # an undetermined midpoint is retried off-centre before giving up
        for fraction in (0.5, 0.3, 0.7):
            mu = mu_lo * (mu_hi / mu_lo) ** fraction
            verdict = probe(mu)
            if verdict != UNDETERMINED:
                break
        if verdict == UNDETERMINED:
            logger.warning(f"Horizon cap reached inside [{mu_lo}, {mu_hi}]; reporting the last bracket")
            return CriticalMuResult(mu_lo, mu_hi, tuple(probes), False)
        if verdict == VANISHING:
            mu_lo = mu
        else:
            mu_hi = mu
    estimate = math.sqrt(mu_lo * mu_hi)
    checks = tuple((mu, probe(mu)) for mu in (estimate * (1.0 - CRITICAL_MU_CHECK), estimate * (1.0 + CRITICAL_MU_CHECK)))
    result = CriticalMuResult(mu_lo, mu_hi, tuple(probes), True, checks)
    if not result.verified:
        logger.warning(f"critical_mu estimate {estimate:.8g} not confirmed: {checks}")
    return result
