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

import logging
import math
import multiprocessing as mp
import os
import time
from dataclasses import dataclass

import numpy as np

from spreading_utils.file_utils import (
    ExperimentConfig,
    emit_config,
    save_jsonl,
    write_csv,
    write_flux_csv,
    write_profile_csv,
    write_trajectory_csv,
)
from spreading_utils.forcing_utils import ReactionModel, ap_mean, translate_model
from spreading_utils.freeboundary_utils import (
    DOUBLE,
    SINGLE,
    critical_mu,
    fb_evolve_double,
    fb_evolve_single,
    initial_profile_double,
    initial_profile_single,
    probe_verdict,
)
from spreading_utils.kinetics_utils import ap_positive_solution, logistic_oracle, trajectory_times
from spreading_utils.metrics_utils import (
    SPREADING,
    VANISHING,
    classify,
    front_speed,
    mass_balance_residual,
    residual_norm,
    verdicts_monotone,
)
from spreading_utils.semiwave_utils import (
    MONOTONE_TOLERANCE,
    eps_bracket,
    part_metric_history,
    semiwave_evolve,
    shoot_autonomous,
)
from spreading_utils.spectral_utils import (
    DIRICHLET_DRIFT,
    NEUMANN_DIRICHLET,
    LinearCoefficient,
    closed_form_exponent,
    critical_length,
    lyapunov_exponent,
)
from spreading_utils.statistics_utils import errors_monotone, observed_order, observed_order_against_exact
from spreading_utils.summary_utils import RunRecord, RunReport, write_report

logger = logging.getLogger(__name__)

CRITICAL_LENGTH_CELLS = 100
ORACLE_SPACING = 0.5
PROFILE_CSV_STRIDE = 10
PART_METRIC_SLACK = 1e-6
SYMMETRY_TOLERANCE = 1e-8
DEFAULT_DICHOTOMY_MUS = tuple(float(mu) for mu in np.logspace(math.log10(0.01), 1.0, 9))

# convergence study
LAMBDA_STUDY_CELLS = 50
LAMBDA_STUDY_HORIZON = 20.0
SPATIAL_ORDER_GATE = 1.5
SPEED_ORDER_GATE = 0.8


###################
## PROBE RUNNING ##
###################


@dataclass(frozen=True)
class ProbeOutcome:
    value: object
    error: str
    runtime: float


def _guarded(task) -> ProbeOutcome:
    """Run one (function, kwargs) task, turning any exception into a recorded error"""
    function, kwargs = task
    start = time.perf_counter()
    try:
        value = function(**kwargs)
    except Exception as err:
        logger.warning(f"Probe {function.__name__} failed: {type(err).__name__}: {err}")
        return ProbeOutcome(None, f"{type(err).__name__}: {err}", time.perf_counter() - start)
    return ProbeOutcome(value, None, time.perf_counter() - start)


def run_probes(tasks: list, workers: int = 1) -> list:
    """
    Run independent probes, in a process pool when workers > 1. Results come back in task order.
        Inputs: list of (module-level function, kwargs dict), worker count
        Outputs: list of ProbeOutcome
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(tasks) <= 1:
        return [_guarded(task) for task in tasks]
    with mp.Pool(min(workers, len(tasks))) as pool:
        return pool.map(_guarded, tasks)


def build_record(name: str, inputs: dict, outcome: ProbeOutcome, evaluate, mandatory: bool = True) -> RunRecord:
    """
    Turn a probe outcome into a RunRecord; evaluate(value) returns (outputs, checks)
    """
    if outcome.error is not None:
        return RunRecord(name, inputs, mandatory=mandatory, error=outcome.error, runtime=outcome.runtime)
    try:
        outputs, checks = evaluate(outcome.value)
    except Exception as err:
        return RunRecord(name, inputs, mandatory=mandatory, error=f"{type(err).__name__}: {err}", runtime=outcome.runtime)
    return RunRecord(name, inputs, outputs, checks, mandatory=mandatory, runtime=outcome.runtime)


############
## PROBES ##
############


def probe_lyapunov(kind: str, a, l: float, gamma: float, N: int, horizon: float, dt: float = None):
    return lyapunov_exponent(kind, LinearCoefficient(a), l, N=N, horizon=horizon, dt=dt, gamma=gamma)


def probe_critical_length(kind: str, a, bracket: tuple, gamma: float, N: int, horizon: float) -> float:
    return critical_length(LinearCoefficient(a), kind, bracket, gamma=gamma, N=N, horizon=horizon)


def probe_ode_oracle(model: ReactionModel, spinup: float, horizon: float, dt: float) -> dict:
    """
    V* against the quadrature oracle at ORACLE_SPACING intervals, and against the V* of the
    model translated by half the horizon
    """
    v_star = ap_positive_solution(model, spinup=spinup, horizon=horizon, dt=dt)
    times = trajectory_times(v_star)
    stride = max(1, int(round(ORACLE_SPACING / v_star.dt)))
    indices = np.arange(0, len(times), stride)
    oracle = [logistic_oracle(model, float(times[k])) for k in indices]
    oracle_values = np.array([value for value, _ in oracle])
    bounds = np.array([bound for _, bound in oracle])

    shift = (len(times) - 1) // 2
    tau = shift * v_star.dt
    translated = ap_positive_solution(translate_model(model, tau), spinup=spinup, horizon=horizon - tau, dt=v_star.dt)
    count = min(len(translated.values), len(v_star.values) - shift)
    hull_gap = float(np.max(np.abs(translated.values[:count] - v_star.values[shift : shift + count])))
    return {
        "times": times[indices],
        "v_star": v_star.values[indices],
        "oracle": oracle_values,
        "bounds": bounds,
        "two_start_gap": v_star.gap,
        "tau": tau,
        "hull_gap": hull_gap,
    }


def probe_semiwave(model: ReactionModel, mu: float, params: dict):
    return semiwave_evolve(model, mu, **params)


def probe_shoot(a: float, b: float, mu: float) -> tuple:
    return shoot_autonomous(a, b, mu)


def probe_eps_bracket(model: ReactionModel, mu: float, epsilon: float, params: dict) -> tuple:
    return eps_bracket(model, mu, epsilon, **params)


def probe_front(mode: str, model: ReactionModel, mu: float, g0: float, h0: float, amplitude: float, params: dict):
    if mode == SINGLE:
        return fb_evolve_single(model, mu, initial_profile_single(h0, amplitude), h0, **params)
    return fb_evolve_double(model, mu, initial_profile_double(g0, h0, amplitude), g0, h0, **params)


def probe_dichotomy(model: ReactionModel, mu: float, g0: float, h0: float, amplitude: float, params: dict, classify_params: dict) -> tuple:
    u0 = initial_profile_double(g0, h0, amplitude)
    return probe_verdict(model, mu, u0, g0, h0, classify_params=classify_params, **params)


def probe_critical_mu(model: ReactionModel, g0: float, h0: float, bracket: tuple, params: dict, classify_params: dict):
    return critical_mu(model, g0, h0, bracket, classify_params=classify_params, **params)


#############
## HELPERS ##
#############


def is_autonomous(model: ReactionModel) -> bool:
    return not model.a.modes and not model.b.modes


def relative_difference(value: float, reference: float) -> float:
    return abs(value - reference) / abs(reference)


def classify_params(cfg: ExperimentConfig) -> dict:
    numerics = cfg.numerics
    return {
        "vanish_tol": numerics["vanish_tol"],
        "spread_fraction": numerics["spread_fraction"],
        "plateau_tol": numerics["plateau_tol"],
    }


def front_params(cfg: ExperimentConfig) -> dict:
    numerics = cfg.numerics
    return {
        "N": numerics["N"],
        "dt": numerics["dt"],
        "horizon": numerics["horizon"],
        "sample_stride": numerics["sample_stride"],
        "snapshot_interval": numerics["snapshot_interval"],
    }


def semiwave_params(cfg: ExperimentConfig, separate_grid: bool = False) -> dict:
    """
    Keyword arguments of semiwave_evolve; separate_grid picks the semiwave_* numerics used
    next to a free boundary run
    """
    numerics = cfg.numerics
    return {
        "X": numerics["X"],
        "N": numerics["semiwave_N"] if separate_grid else numerics["N"],
        "dt": numerics["semiwave_dt"] if separate_grid else numerics["dt"],
        "horizon": numerics["semiwave_horizon"] if separate_grid else numerics["horizon"],
        "window": numerics["window"],
        "gap_tolerance": numerics["gap_tolerance"],
        "spinup": numerics["spinup"],
    }


def critical_length_closed_form(kind: str, a_mean: float, gamma: float = 0.0) -> float:
    """
    Root in l of closed_form_exponent: pi / (2 sqrt(a_mean)) or pi / sqrt(a_mean - gamma^2 / 4)
    """
    reduced = a_mean if kind == NEUMANN_DIRICHLET else a_mean - gamma**2 / 4.0
    if reduced <= 0:
        raise ValueError(f"No critical length: the exponent stays negative for every l ({kind}, mean(a) = {a_mean}, gamma = {gamma})")
    if kind == NEUMANN_DIRICHLET:
        return 0.5 * math.pi / math.sqrt(reduced)
    return math.pi / math.sqrt(reduced)


def _mu_values(cfg: ExperimentConfig) -> tuple:
    return cfg.sweep["mu"] or (cfg.mu,)


def front_task(cfg: ExperimentConfig, mode: str, mu: float, g0: float, params: dict) -> tuple:
    numerics = cfg.numerics
    kwargs = {"mode": mode, "model": cfg.model, "mu": mu, "g0": g0, "h0": numerics["h0"], "amplitude": numerics["amplitude"], "params": params}
    return probe_front, kwargs


def part_metric_checks(result) -> tuple:
    """
    Part metric between the two semi-wave starts: (outputs, checks)
    """
    _, rho = part_metric_history(result)
    largest_increase = float(np.max(np.diff(rho))) if rho.size > 1 else 0.0
    outputs = {"rho_initial": float(rho[0]), "rho_final": float(rho[-1]), "rho_largest_increase": largest_increase}
    checks = {
        "part_metric_nonincreasing": largest_increase <= PART_METRIC_SLACK,
        "part_metric_contracts": float(rho[-1]) < float(rho[0]),
    }
    return outputs, checks


def write_semiwave_csvs(out_dir: str, label: str, result) -> None:
    if not out_dir:
        return
    write_flux_csv(os.path.join(out_dir, f"{label}_flux.csv"), result.flux_times, result.flux_history, result.mu)
    picked = range(0, len(result.sample_times), PROFILE_CSV_STRIDE)
    write_profile_csv(
        os.path.join(out_dir, f"{label}_profile.csv"),
        [result.sample_times[k] for k in picked],
        [result.x for _ in picked],
        [result.upper_samples[k] for k in picked],
    )


def write_front_csvs(out_dir: str, label: str, traj) -> None:
    if not out_dir:
        return
    write_trajectory_csv(os.path.join(out_dir, f"{label}_trajectory.csv"), traj)
    write_profile_csv(os.path.join(out_dir, f"{label}_profile.csv"), traj.snapshot_times, traj.snapshot_x, traj.snapshot_u)


#################
## EXPERIMENTS ##
#################


def experiment_lyapunov(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Exponents on every length against the closed forms, and the critical lengths when a bracket is given
    """
    numerics = cfg.numerics
    a = cfg.model.a
    a_mean = ap_mean(a)
    gamma = numerics["gamma"]
    tolerance = numerics["tolerance"]
    lengths = cfg.sweep["lengths"] or (numerics["l"],)

    tasks = []
    labels = []
    for l in lengths:
        for kind in (NEUMANN_DIRICHLET, DIRICHLET_DRIFT):
            kind_gamma = gamma if kind == DIRICHLET_DRIFT else 0.0
            labels.append((kind, l, kind_gamma))
            tasks.append(
                (
                    probe_lyapunov,
                    {"kind": kind, "a": a, "l": l, "gamma": kind_gamma, "N": numerics["N"], "horizon": numerics["horizon"], "dt": numerics["dt"]},
                )
            )
    bracket = cfg.sweep["bracket"]
    if bracket:
        for kind in (NEUMANN_DIRICHLET, DIRICHLET_DRIFT):
            kind_gamma = gamma if kind == DIRICHLET_DRIFT else 0.0
            tasks.append(
                (
                    probe_critical_length,
                    {"kind": kind, "a": a, "bracket": bracket, "gamma": kind_gamma, "N": CRITICAL_LENGTH_CELLS, "horizon": numerics["horizon"]},
                )
            )
    outcomes = run_probes(tasks, workers)

    records = []
    rows = []
    for (kind, l, kind_gamma), outcome in zip(labels, outcomes):
        closed_form = closed_form_exponent(kind, a_mean, l, kind_gamma)

        def evaluate(estimate, closed_form=closed_form):
            error = estimate.value - closed_form
            outputs = {
                "lambda": estimate.value,
                "mean_rate": estimate.mean_rate,
                "closed_form": closed_form,
                "error": error,
                "converged": estimate.converged,
            }
            return outputs, {"matches_closed_form": abs(error) <= tolerance * max(1.0, abs(closed_form))}

        inputs = {"kind": kind, "l": l, "gamma": kind_gamma, "a_mean": a_mean, "N": numerics["N"], "horizon": numerics["horizon"]}
        records.append(build_record(f"lambda_{kind}_l={l:.6g}", inputs, outcome, evaluate))
        if outcome.error is None:
            estimate = outcome.value
            rows.append((kind, l, kind_gamma, a_mean, estimate.value, estimate.converged, numerics["horizon"], numerics["N"]))
    if out_dir:
        write_csv(os.path.join(out_dir, "lyapunov.csv"), ["kind", "l", "gamma", "a_mean", "lambda", "converged", "horizon", "N"], rows)

    if bracket:
        length_rows = []
        for kind, outcome in zip((NEUMANN_DIRICHLET, DIRICHLET_DRIFT), outcomes[len(labels) :]):
            kind_gamma = gamma if kind == DIRICHLET_DRIFT else 0.0

            def evaluate(length, kind=kind, kind_gamma=kind_gamma):
                closed_form = critical_length_closed_form(kind, a_mean, kind_gamma)
                outputs = {"critical_length": length, "closed_form": closed_form, "error": length - closed_form}
                length_rows.append((kind, kind_gamma, a_mean, length, closed_form))
                return outputs, {"matches_closed_form": abs(length - closed_form) <= tolerance}

            inputs = {"kind": kind, "bracket": list(bracket), "gamma": kind_gamma, "N": CRITICAL_LENGTH_CELLS}
            records.append(build_record(f"critical_length_{kind}", inputs, outcome, evaluate))
        if out_dir:
            write_csv(os.path.join(out_dir, "critical_lengths.csv"), ["kind", "gamma", "a_mean", "critical_length", "closed_form"], length_rows)
    return records


def experiment_ode_oracle(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    numerics = cfg.numerics
    tolerance = numerics["tolerance"]
    task = (probe_ode_oracle, {"model": cfg.model, "spinup": numerics["spinup"], "horizon": numerics["horizon"], "dt": numerics["dt"]})
    outcome = run_probes([task], workers)[0]

    def evaluate(value):
        difference = np.abs(value["v_star"] - value["oracle"])
        outputs = {
            "max_difference": float(np.max(difference)),
            "max_truncation_bound": float(np.max(value["bounds"])),
            "two_start_gap": value["two_start_gap"],
            "hull_shift": value["tau"],
            "hull_gap": value["hull_gap"],
        }
        checks = {
            "matches_oracle": outputs["max_difference"] < tolerance,
            "hull_consistent": value["hull_gap"] < tolerance,
        }
        return outputs, checks

    inputs = {"a": cfg.model.a, "b": cfg.model.b, "horizon": numerics["horizon"], "dt": numerics["dt"]}
    record = build_record("ode_oracle", inputs, outcome, evaluate)
    if out_dir and outcome.error is None:
        value = outcome.value
        rows = zip(value["times"], value["v_star"], value["oracle"], np.abs(value["v_star"] - value["oracle"]), value["bounds"])
        write_csv(os.path.join(out_dir, "ode_oracle.csv"), ["t", "v_star", "oracle", "difference", "truncation_bound"], rows)
    return [record]


def experiment_semiwave(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Semi-wave speed per mu with the part metric along the two starts, the shooting oracle for
    autonomous models and the epsilon brackets of the sweep
    """
    numerics = cfg.numerics
    model = cfg.model
    params = semiwave_params(cfg)
    mus = _mu_values(cfg)
    eps_values = cfg.sweep["eps"] or ()
    autonomous = is_autonomous(model)

    tasks = [(probe_semiwave, {"model": model, "mu": mu, "params": params}) for mu in mus]
    if autonomous:
        tasks.extend((probe_shoot, {"a": model.a.constant_term, "b": model.b.constant_term, "mu": mu}) for mu in mus)
    eps_tasks = [(mu, epsilon) for mu in mus for epsilon in eps_values]
    tasks.extend((probe_eps_bracket, {"model": model, "mu": mu, "epsilon": epsilon, "params": params}) for mu, epsilon in eps_tasks)
    outcomes = run_probes(tasks, workers)
    semiwave_outcomes = outcomes[: len(mus)]
    shoot_outcomes = outcomes[len(mus) : 2 * len(mus)] if autonomous else [None] * len(mus)
    eps_outcomes = outcomes[len(outcomes) - len(eps_tasks) :] if eps_tasks else []

    records = []
    rows = []
    for k, (mu, outcome, shoot) in enumerate(zip(mus, semiwave_outcomes, shoot_outcomes)):

        def evaluate(result, shoot=shoot):
            outputs = {
                "cstar": result.cstar,
                "speed_bound": result.speed_bound,
                "attraction_gap": result.attraction_gap,
                "midfield_gap": result.midfield_gap,
                "monotone_violation": result.monotone_violation,
            }
            checks = {
                "within_speed_bound": result.within_speed_bound,
                "profile_monotone": result.monotone_violation <= MONOTONE_TOLERANCE,
            }
            metric_outputs, metric_checks = part_metric_checks(result)
            outputs.update(metric_outputs)
            checks.update(metric_checks)
            if shoot is not None:
                if shoot.error is not None:
                    raise RuntimeError(f"shooting oracle failed: {shoot.error}")
                outputs["c_shoot"] = shoot.value[0]
                outputs["shoot_relative_difference"] = relative_difference(result.cstar, shoot.value[0])
                checks["matches_shooting"] = outputs["shoot_relative_difference"] < numerics["speed_tolerance"]
            return outputs, checks

        inputs = {"mu": mu, "X": params["X"], "N": params["N"], "dt": params["dt"], "horizon": params["horizon"]}
        records.append(build_record(f"semiwave_mu={mu:.6g}", inputs, outcome, evaluate))
        if outcome.error is None:
            result = outcome.value
            write_semiwave_csvs(out_dir, f"semiwave_{k}", result)
            c_shoot = shoot.value[0] if shoot is not None and shoot.error is None else math.nan
            rows.append((mu, result.cstar, c_shoot, result.attraction_gap, result.speed_bound))
    if out_dir:
        write_csv(os.path.join(out_dir, "semiwave_speeds.csv"), ["mu", "cstar", "c_shoot", "attraction_gap", "speed_bound"], rows)

    records.extend(_eps_records(mus, eps_tasks, eps_outcomes, semiwave_outcomes, out_dir))
    return records


def _eps_records(mus, eps_tasks, eps_outcomes, semiwave_outcomes, out_dir) -> list:
    """
    c_lower(eps) <= cstar <= c_upper(eps) per probe, and per mu a gap that shrinks with eps
    """
    records = []
    rows = []
    cstar_by_mu = {mu: outcome.value.cstar for mu, outcome in zip(mus, semiwave_outcomes) if outcome.error is None}
    gaps_by_mu = {}
    for (mu, epsilon), outcome in zip(eps_tasks, eps_outcomes):

        def evaluate(bracket, mu=mu):
            if mu not in cstar_by_mu:
                raise RuntimeError("semi-wave run for this mu failed")
            c_lower, c_upper = bracket
            cstar = cstar_by_mu[mu]
            outputs = {"c_lower": c_lower, "c_upper": c_upper, "cstar": cstar, "gap": c_upper - c_lower}
            return outputs, {"brackets_cstar": c_lower <= cstar <= c_upper}

        records.append(build_record(f"eps_bracket_mu={mu:.6g}_eps={epsilon:.6g}", {"mu": mu, "eps": epsilon}, outcome, evaluate))
        if outcome.error is None:
            c_lower, c_upper = outcome.value
            gaps_by_mu.setdefault(mu, []).append((epsilon, c_upper - c_lower))
            rows.append((mu, epsilon, c_lower, c_upper, cstar_by_mu.get(mu, math.nan)))
    for mu, gaps in gaps_by_mu.items():
        ordered = [gap for _, gap in sorted(gaps, reverse=True)]
        shrinking = len(ordered) == len([epsilon for m, epsilon in eps_tasks if m == mu]) and all(
            later < earlier for earlier, later in zip(ordered, ordered[1:])
        )
        records.append(RunRecord(f"eps_gap_shrinks_mu={mu:.6g}", {"mu": mu}, {"gaps": ordered}, {"gap_shrinks_with_eps": shrinking}))
    if out_dir and eps_tasks:
        write_csv(os.path.join(out_dir, "eps_brackets.csv"), ["mu", "eps", "c_lower", "c_upper", "cstar"], rows)
    return records


def _front_outputs(traj, outcome, window_fraction: float) -> dict:
    times, residual = mass_balance_residual(traj)
    outputs = {
        "verdict": outcome.verdict,
        "h_final": outcome.h_final,
        "g_final": outcome.g_final,
        "u_sup_final": outcome.u_sup_final,
        "slack_binding": outcome.evidence["slack_binding"],
        "mass_residual": residual_norm(times, residual),
        "clamped_steps": traj.clamped_steps,
    }
    if outcome.verdict == SPREADING:
        speed = front_speed(traj, window_fraction=window_fraction, outcome=outcome)
        outputs.update({"speed_h": speed.slope, "speed_h_rms": speed.rms_residual, "average_speed_h": speed.average_speed})
        if traj.mode == DOUBLE:
            speed_g = front_speed(traj, window_fraction=window_fraction, outcome=outcome, side="g")
            outputs.update({"speed_g": speed_g.slope, "speed_g_rms": speed_g.rms_residual})
    return outputs


def experiment_front(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Single or double front runs per mu: classification, front speed, mass balance and, for
    even double front data, the symmetry defect
    """
    numerics = cfg.numerics
    model = cfg.model
    mode = SINGLE if cfg.kind == "fb_single" else DOUBLE
    g0 = 0.0 if mode == SINGLE else numerics["g0"]
    mus = _mu_values(cfg)
    autonomous = is_autonomous(model)
    params = front_params(cfg)

    tasks = [front_task(cfg, mode, mu, g0, params) for mu in mus]
    check_speed = autonomous and cfg.expect == SPREADING
    if check_speed:
        tasks.extend((probe_shoot, {"a": model.a.constant_term, "b": model.b.constant_term, "mu": mu}) for mu in mus)
    outcomes = run_probes(tasks, workers)
    shoots = outcomes[len(mus) :] if check_speed else [None] * len(mus)

    records = []
    classifications = []
    for k, (mu, outcome, shoot) in enumerate(zip(mus, outcomes[: len(mus)], shoots)):

        def evaluate(traj, shoot=shoot):
            verdict = classify(traj, **classify_params(cfg))
            outputs = _front_outputs(traj, verdict, numerics["window_fraction"])
            checks = {}
            if cfg.expect != "any":
                checks["verdict_as_expected"] = verdict.verdict == cfg.expect
            if mode == DOUBLE and abs(g0 + numerics["h0"]) == 0.0:
                outputs["symmetry_defect"] = float(np.max(np.abs(traj.g + traj.h)))
                checks["symmetric_fronts"] = outputs["symmetry_defect"] < SYMMETRY_TOLERANCE
            if shoot is not None and verdict.verdict == SPREADING:
                if shoot.error is not None:
                    raise RuntimeError(f"shooting oracle failed: {shoot.error}")
                outputs["c_shoot"] = shoot.value[0]
                checks["speed_matches_shooting"] = relative_difference(outputs["speed_h"], shoot.value[0]) < numerics["speed_tolerance"]
                if mode == DOUBLE:
                    checks["speed_g_matches_shooting"] = relative_difference(outputs["speed_g"], shoot.value[0]) < numerics["speed_tolerance"]
            parameters = dict(params, g0=g0, h0=numerics["h0"], mode=mode)
            classifications.append({"mu": mu, "verdict": verdict.verdict, "evidence": verdict.evidence, "parameters": parameters})
            return outputs, checks

        inputs = {"mode": mode, "mu": mu, "g0": g0, "h0": numerics["h0"], **params}
        records.append(build_record(f"{mode}_front_mu={mu:.6g}", inputs, outcome, evaluate))
        if outcome.error is None:
            write_front_csvs(out_dir, f"{mode}_front_{k}", outcome.value)
    if out_dir:
        save_jsonl(classifications, os.path.join(out_dir, "classification.jsonl"))
    return records


def experiment_speed_consistency(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Per mu: slope of a spreading single front, semi-wave cstar and (autonomous models) the
    shooting speed, which must agree pairwise; across mu the speeds must increase
    """
    numerics = cfg.numerics
    model = cfg.model
    mus = _mu_values(cfg)
    autonomous = is_autonomous(model)
    tolerance = numerics["speed_tolerance"]
    wave_params = semiwave_params(cfg, separate_grid=True)
    params = front_params(cfg)

    tasks = [(probe_semiwave, {"model": model, "mu": mu, "params": wave_params}) for mu in mus]
    tasks.extend(front_task(cfg, SINGLE, mu, 0.0, params) for mu in mus)
    if autonomous:
        tasks.extend((probe_shoot, {"a": model.a.constant_term, "b": model.b.constant_term, "mu": mu}) for mu in mus)
    outcomes = run_probes(tasks, workers)
    count = len(mus)
    waves, fronts = outcomes[:count], outcomes[count : 2 * count]
    shoots = outcomes[2 * count :] if autonomous else [None] * count

    records = []
    rows = []
    for k, (mu, wave, front, shoot) in enumerate(zip(mus, waves, fronts, shoots)):
        errors = [outcome.error for outcome in (wave, front, shoot) if outcome is not None and outcome.error]
        merged = ProbeOutcome(
            None if errors else (wave.value, front.value, shoot.value if shoot else None),
            "; ".join(errors) if errors else None,
            sum(outcome.runtime for outcome in (wave, front, shoot) if outcome is not None),
        )

        def evaluate(value):
            result, traj, shot = value
            verdict = classify(traj, **classify_params(cfg))
            speed = front_speed(traj, window_fraction=numerics["window_fraction"], outcome=verdict)
            outputs = {
                "front_speed": speed.slope,
                "front_speed_rms": speed.rms_residual,
                "cstar": result.cstar,
                "speed_bound": result.speed_bound,
                "front_vs_cstar": relative_difference(speed.slope, result.cstar),
            }
            checks = {"front_matches_semiwave": outputs["front_vs_cstar"] < tolerance, "within_speed_bound": result.within_speed_bound}
            if shot is not None:
                outputs["c_shoot"] = shot[0]
                outputs["cstar_vs_shoot"] = relative_difference(result.cstar, shot[0])
                checks["semiwave_matches_shooting"] = outputs["cstar_vs_shoot"] < tolerance
            return outputs, checks

        records.append(build_record(f"speeds_mu={mu:.6g}", {"mu": mu, **params, "semiwave": wave_params}, merged, evaluate))
        if merged.error is None and records[-1].error is None:
            outputs = records[-1].outputs
            rows.append((mu, outputs["front_speed"], outputs["cstar"], outputs.get("c_shoot", math.nan)))
            write_front_csvs(out_dir, f"speed_front_{k}", front.value)
            write_semiwave_csvs(out_dir, f"speed_semiwave_{k}", wave.value)

    complete = len(rows) == len(mus)
    cstars = [row[2] for row in rows]
    monotone_checks = {"all_speeds_computed": complete, "cstar_increasing_in_mu": all(b > a for a, b in zip(cstars, cstars[1:]))}
    bound = 2.0 * math.sqrt(ap_mean(model.a))
    monotone_checks["all_below_kpp_speed"] = all(row[2] < bound for row in rows)
    if autonomous:
        shots = [row[3] for row in rows]
        monotone_checks["shooting_increasing_in_mu"] = all(b > a for a, b in zip(shots, shots[1:]))
        monotone_checks["shooting_below_kpp_speed"] = all(c < bound for c in shots)
    records.append(RunRecord("speeds_monotone_in_mu", {"mu": list(mus)}, {"cstar": cstars, "kpp_speed": bound}, monotone_checks))
    if out_dir:
        write_csv(os.path.join(out_dir, "speeds.csv"), ["mu", "front_speed", "cstar", "c_shoot"], rows)
    return records


def experiment_dichotomy(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Double front verdicts over a mu sweep, which must read Vanishing* Spreading*, and optionally
    the bisection bracket of the critical mu
    """
    numerics = cfg.numerics
    model = cfg.model
    mus = tuple(sorted(cfg.sweep["mu"] or DEFAULT_DICHOTOMY_MUS))
    params = {"N": numerics["N"], "dt": numerics["dt"], "horizon": numerics["horizon"]}
    probe_args = {"model": model, "g0": numerics["g0"], "h0": numerics["h0"], "classify_params": classify_params(cfg)}

    tasks = [(probe_dichotomy, {"mu": mu, "amplitude": numerics["amplitude"], "params": params, **probe_args}) for mu in mus]
    if cfg.sweep["critical_mu"]:
        bracket = cfg.sweep["bracket"] or (mus[0], mus[-1])
        tasks.append((probe_critical_mu, {"bracket": bracket, "params": params, **probe_args}))
    outcomes = run_probes(tasks, workers)

    records = []
    rows = []
    verdicts = []
    for mu, outcome in zip(mus, outcomes):

        def evaluate(value):
            verdict, horizon_used = value
            return {"verdict": verdict.verdict, "h_final": verdict.h_final, "g_final": verdict.g_final, "horizon_used": horizon_used}, {}

        records.append(build_record(f"dichotomy_mu={mu:.6g}", {"mu": mu, **params}, outcome, evaluate))
        if outcome.error is None:
            verdict, horizon_used = outcome.value
            verdicts.append(verdict.verdict)
            rows.append((mu, verdict.verdict, verdict.h_final, verdict.g_final, verdict.u_sup_final, horizon_used))
    sequence_checks = {"all_probes_classified": len(verdicts) == len(mus), "single_switch": verdicts_monotone(verdicts)}
    records.append(RunRecord("dichotomy_sequence", {"mu": list(mus)}, {"verdicts": verdicts}, sequence_checks))
    if out_dir:
        write_csv(os.path.join(out_dir, "dichotomy.csv"), ["mu", "verdict", "h_final", "g_final", "u_sup_final", "horizon"], rows)

    if cfg.sweep["critical_mu"]:
        outcome = outcomes[-1]

        def evaluate(result):
            verified = any(mu == result.mu_lo and verdict == VANISHING for mu, verdict, _ in result.probes) and any(
                mu == result.mu_hi and verdict == SPREADING for mu, verdict, _ in result.probes
            )
            outputs = {
                "mu_lo": result.mu_lo,
                "mu_hi": result.mu_hi,
                "relative_width": result.relative_width,
                "estimate": result.estimate,
                "probes": len(result.probes),
                "check_verdicts": [[mu, verdict] for mu, verdict in result.checks],
            }
            checks = {"bracket_converged": result.converged, "endpoints_verified": verified, "estimate_confirmed": result.verified}
            return outputs, checks

        inputs = {"bracket": list(bracket), "g0": numerics["g0"], "h0": numerics["h0"], **params}
        records.append(build_record("critical_mu", inputs, outcome, evaluate))
        if out_dir and outcome.error is None:
            probe_rows = [(k, mu, verdict, horizon_used) for k, (mu, verdict, horizon_used) in enumerate(outcome.value.probes)]
            write_csv(os.path.join(out_dir, "critical_mu.csv"), ["probe", "mu", "verdict", "horizon"], probe_rows)
    return records


def experiment_convergence(cfg: ExperimentConfig, out_dir: str, workers: int) -> list:
    """
    Observed orders from runs at (N, dt), (2N, dt/2), (4N, dt/4), ...:
        lambda: Neumann-Dirichlet exponent on [0, l], dt = dx (gate p >= 1.5, also against the closed form)
        front: h(horizon) of a single front run, dt held fixed (gate p >= 1.5)
        cstar: semi-wave speed (gate p >= 0.8)
    The order uses the three finest levels.
    """
    numerics = cfg.numerics
    model = cfg.model
    levels = cfg.sweep["levels"]
    scales = [2**k for k in range(levels)]
    wave_base = semiwave_params(cfg, separate_grid=True)

    tasks = []
    for scale in scales:
        tasks.append(
            (
                probe_lyapunov,
                {"kind": NEUMANN_DIRICHLET, "a": model.a, "l": numerics["l"], "gamma": 0.0, "N": LAMBDA_STUDY_CELLS * scale, "horizon": LAMBDA_STUDY_HORIZON},
            )
        )
    for scale in scales:
        params = dict(front_params(cfg), N=numerics["N"] * scale)
        tasks.append(front_task(cfg, SINGLE, cfg.mu, 0.0, params))
    for scale in scales:
        params = dict(wave_base, N=wave_base["N"] * scale, dt=wave_base["dt"] / scale)
        tasks.append((probe_semiwave, {"model": model, "mu": cfg.mu, "params": params}))
    outcomes = run_probes(tasks, workers)

    studies = {
        "lambda": (outcomes[:levels], lambda estimate: estimate.value, SPATIAL_ORDER_GATE),
        "front_position": (outcomes[levels : 2 * levels], lambda traj: traj.final_state.h, SPATIAL_ORDER_GATE),
        "cstar": (outcomes[2 * levels :], lambda result: result.cstar, SPEED_ORDER_GATE),
    }
    exact_lambda = closed_form_exponent(NEUMANN_DIRICHLET, ap_mean(model.a), numerics["l"])
    records = []
    rows = []
    for quantity, (study, read, gate) in studies.items():
        errors = [outcome.error for outcome in study if outcome.error]
        merged = ProbeOutcome(
            None if errors else [read(outcome.value) for outcome in study],
            "; ".join(errors) or None,
            sum(outcome.runtime for outcome in study),
        )

        def evaluate(values, quantity=quantity, gate=gate):
            order = observed_order(values[-3:])
            monotone = errors_monotone(values)
            if not monotone:
                logger.warning(f"Convergence study of {quantity}: successive differences do not decrease")
            outputs = {"values": values, "observed_order": order, "differences_decrease": monotone}
            if quantity == "lambda":
                outputs["exact"] = exact_lambda
                outputs["order_against_exact"] = observed_order_against_exact(values, exact_lambda)
            return outputs, {"order_gate": order >= gate}

        records.append(build_record(f"order_{quantity}", {"levels": levels, "gate": gate}, merged, evaluate))
        if merged.error is None:
            rows.extend((quantity, level, value) for level, value in enumerate(merged.value))
    if out_dir:
        write_csv(os.path.join(out_dir, "convergence.csv"), ["quantity", "level", "value"], rows)
    return records


experiments = {
    "lyapunov_validation": experiment_lyapunov,
    "ode_oracle": experiment_ode_oracle,
    "semiwave": experiment_semiwave,
    "fb_single": experiment_front,
    "fb_double": experiment_front,
    "speed_consistency": experiment_speed_consistency,
    "dichotomy_sweep": experiment_dichotomy,
    "convergence_study": experiment_convergence,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str = None, workers: int = 1) -> RunReport:
    """
    Execute the experiment named by the config. The filled config, CSVs, records.jsonl
    and report.txt go to out_dir (default the config's output dir).
        Inputs: ExperimentConfig, output directory, worker count
        Outputs: RunReport
    """
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    config_text = emit_config(cfg)
    with open(os.path.join(out_dir, "config.ini"), "w") as config_file:
        config_file.write(config_text)

    logger.info(f"Running {cfg.kind} experiment '{cfg.name}' into {out_dir}")
    records = experiments[cfg.kind](cfg, out_dir, workers)
    report = RunReport(title=f"{cfg.kind}: {cfg.name}", records=records, config_text=config_text)
    write_report(report, out_dir)
    logger.info(f"{cfg.name}: {report.verdict}")
    return report


def convergence_study(cfg: ExperimentConfig, out_dir: str = None, workers: int = 1) -> RunReport:
    """
    run_experiment restricted to convergence_study configs
    """
    if cfg.kind != "convergence_study":
        raise ValueError(f"convergence_study needs a convergence_study config, got kind {cfg.kind}")
    return run_experiment(cfg, out_dir, workers)
