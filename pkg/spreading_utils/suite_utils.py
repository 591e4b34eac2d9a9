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

import filecmp
import logging
import math
import os

from spreading_utils.file_utils import emit_config, load_jsonl_file, parse_config, write_csv
from spreading_utils.forcing_utils import fisher_model
from spreading_utils.freeboundary_utils import SINGLE
from spreading_utils.harness_utils import (
    ProbeOutcome,
    build_record,
    experiments,
    probe_front,
    run_probes,
    write_front_csvs,
)
from spreading_utils.kinetics_utils import ap_positive_solution
from spreading_utils.metrics_utils import (
    SPREADING,
    VANISHING,
    behind_front_gap,
    classify,
    critical_lengths,
    mass_balance_residual,
    occupancy,
    ordering_violation,
    residual_norm,
)
from spreading_utils.semiwave_utils import shoot_autonomous
from spreading_utils.summary_utils import RunRecord, RunReport, write_report

logger = logging.getLogger(__name__)

ALL = "all"

# vanishing side of the dichotomy threshold
DICHOTOMY_MU = 0.05
VANISHING_H0 = 1.2
SPREADING_H0 = 1.8
VANISHING_HORIZON = 30.0
SPREADING_HORIZON = 300.0

ORDERING_FRONT_TOLERANCE = 1e-8
ORDERING_PROFILE_TOLERANCE = 1e-4
UNIFORM_GAP_TOLERANCE = 1e-2
UNIFORM_EPS_FRACTION = 0.25
MASS_REFINEMENT_RATIO = 1.9
MASS_REFINEMENT_N = 400

###################
## SUITE CONFIGS ##
###################

suite_configs = {
    "lyapunov_closed_forms": """
[experiment]
kind = lyapunov_validation
name = lyapunov_closed_forms

[model]
a = 0

[numerics]
N = 400
horizon = 50
gamma = 1
tolerance = 5e-4

[sweep]
lengths = 2, pi
""",
    "mean_shift": """
[experiment]
kind = lyapunov_validation
name = mean_shift

[model]
a = 1 | 0.5:1:0, 0.3:sqrt(2):0

[numerics]
N = 400
horizon = 200
l = 2
tolerance = 1e-3
""",
    "critical_lengths": """
[experiment]
kind = lyapunov_validation
name = critical_lengths

[model]
a = 1

[numerics]
N = 400
horizon = 50
l = 2
tolerance = 1e-3

[sweep]
bracket = 1, 4
""",
    "ode_oracle": """
[experiment]
kind = ode_oracle
name = ode_oracle

[model]
a = 1 | 0.5:1:0
b = 1

[numerics]
horizon = 50
dt = 0.01
tolerance = 1e-6
""",
    "speed_consistency": """
[experiment]
kind = speed_consistency
name = speed_consistency

[model]
a = 1
b = 1

[numerics]
N = 2000
dt = 0.01
h0 = 2
horizon = 80
window_fraction = 0.5
X = 40
semiwave_N = 800
semiwave_dt = 0.01
semiwave_horizon = 150
speed_tolerance = 0.02

[sweep]
mu = 0.5, 1, 2, 5
""",
    "critical_mu": """
[experiment]
kind = dichotomy_sweep
name = critical_mu

[model]
a = 1
b = 1

[numerics]
N = 200
dt = 0.01
g0 = -1
h0 = 1
horizon = 40

[sweep]
critical_mu = true
bracket = 0.01, 10
""",
    "double_front_symmetry": """
[experiment]
kind = fb_double
name = double_front_symmetry
expect = Spreading

[model]
a = 1
b = 1
mu = 1

[numerics]
N = 2000
dt = 0.01
g0 = -2
h0 = 2
horizon = 80
window_fraction = 0.5
speed_tolerance = 0.02
""",
    "part_metric_contraction": """
[experiment]
kind = semiwave
name = part_metric_contraction

[model]
a = 1 | 0.5:1:0
b = 1
mu = 1

[numerics]
X = 40
N = 800
dt = 0.01
horizon = 150
""",
    "eps_bracketing": """
[experiment]
kind = semiwave
name = eps_bracketing

[model]
a = 1
b = 1
mu = 1

[numerics]
X = 40
N = 800
dt = 0.01
horizon = 150

[sweep]
eps = 0.1, 0.05, 0.01
""",
    "mass_balance_refinement": """
[experiment]
kind = convergence_study
name = convergence_study

[model]
a = 1
b = 1
mu = 1

[numerics]
N = 100
dt = 0.001
h0 = 2
horizon = 10
l = 2
X = 30
semiwave_N = 300
semiwave_dt = 0.02
semiwave_horizon = 100

[sweep]
levels = 3
""",
}


def run_config_suite(name: str, out_dir: str, workers: int) -> list:
    """
    Parse a built-in config, echo it into out_dir and run its experiment
    """
    cfg = parse_config(suite_configs[name], f"{name}.ini")
    with open(os.path.join(out_dir, "config.ini"), "w") as config_file:
        config_file.write(emit_config(cfg))
    return experiments[cfg.kind](cfg, out_dir, workers)


def _front_kwargs(mu: float, h0: float, amplitude: float, **params) -> dict:
    return {"mode": SINGLE, "model": fisher_model(), "mu": mu, "g0": 0.0, "h0": h0, "amplitude": amplitude, "params": params}


############
## SUITES ##
############


def suite_dichotomy_threshold(out_dir: str, workers: int) -> list:
    """
    Fisher single front at small mu on both sides of l*, each at (N, dt) and (2N, dt/2)
    """
    l_star = critical_lengths(fisher_model())[0]
    cases = [
        ("vanishing", VANISHING_H0, VANISHING_HORIZON, VANISHING),
        ("spreading", SPREADING_H0, SPREADING_HORIZON, SPREADING),
    ]
    grids = [("coarse", 200, 0.01), ("fine", 400, 0.005)]
    tasks = []
    labels = []
    for label, h0, horizon, expected in cases:
        for grid, N, dt in grids:
            labels.append((label, h0, horizon, expected, grid))
            tasks.append((probe_front, _front_kwargs(DICHOTOMY_MU, h0, 1.0, N=N, dt=dt, horizon=horizon, sample_stride=int(round(0.1 / dt)))))
    outcomes = run_probes(tasks, workers)

    records = []
    verdicts = {}
    for (label, h0, horizon, expected, grid), outcome in zip(labels, outcomes):

        def evaluate(traj, expected=expected, label=label, grid=grid):
            outcome = classify(traj, l_star)
            verdicts[(label, grid)] = outcome.verdict
            outputs = {"verdict": outcome.verdict, "h_final": outcome.h_final, "u_sup_final": outcome.u_sup_final}
            checks = {"verdict_as_expected": outcome.verdict == expected}
            if expected == VANISHING:
                checks["front_below_slack_lstar"] = outcome.h_final <= 1.05 * l_star
                checks["density_vanished"] = outcome.u_sup_final < 1e-4
            return outputs, checks

        inputs = {"mu": DICHOTOMY_MU, "h0": h0, "horizon": horizon, "grid": grid}
        records.append(build_record(f"{label}_{grid}", inputs, outcome, evaluate))
        if outcome.error is None:
            write_front_csvs(out_dir, f"{label}_{grid}", outcome.value)
    stable = all((label, grid) in verdicts for label, *_ , grid in labels) and all(
        verdicts[(label, "coarse")] == verdicts[(label, "fine")] for label, *_ in cases
    )
    records.append(RunRecord("verdicts_stable_under_refinement", {}, {"verdicts": {f"{k[0]}_{k[1]}": v for k, v in verdicts.items()}}, {"stable": stable}))
    return records


def suite_comparison_ordering(out_dir: str, workers: int) -> list:
    """
    Nested initial data (0.5 cap on [0, 1.8]) <= (unit cap on [0, 2.5]) keep their fronts and profiles ordered
    """
    params = {"N": 400, "dt": 0.01, "horizon": 10.0, "sample_stride": 10, "snapshot_interval": 1.0}
    tasks = [(probe_front, _front_kwargs(1.0, 1.8, 0.5, **params)), (probe_front, _front_kwargs(1.0, 2.5, 1.0, **params))]
    lower, upper = run_probes(tasks, workers)
    errors = [outcome.error for outcome in (lower, upper) if outcome.error]
    merged = ProbeOutcome(None if errors else (lower.value, upper.value), "; ".join(errors) or None, lower.runtime + upper.runtime)

    def evaluate(pair):
        low, high = pair
        front_gap = float(max(low.h - high.h))
        violation = ordering_violation(low, high)
        outputs = {"largest_front_excess": front_gap, "largest_profile_excess": violation}
        checks = {"fronts_ordered": front_gap <= ORDERING_FRONT_TOLERANCE, "profiles_ordered": violation <= ORDERING_PROFILE_TOLERANCE}
        return outputs, checks

    record = build_record("nested_single_fronts", {"mu": 1.0, **params}, merged, evaluate)
    if merged.error is None:
        write_front_csvs(out_dir, "lower", lower.value)
        write_front_csvs(out_dir, "upper", upper.value)
    return [record]


def suite_uniform_convergence(out_dir: str, workers: int) -> list:
    """
    Spreading Fisher run: max |u - V*| behind (c* - eps) t, eps = c* / 4, is small at the horizon
    and smaller than at half the horizon
    """
    horizon = 80.0
    params = {"N": 800, "dt": 0.01, "horizon": horizon, "sample_stride": 10, "snapshot_interval": 1.0}
    outcome = run_probes([(probe_front, _front_kwargs(1.0, 2.0, 1.0, **params))], workers)[0]

    def evaluate(traj):
        model = fisher_model()
        c, _ = shoot_autonomous(1.0, 1.0, 1.0)
        eps = UNIFORM_EPS_FRACTION * c
        v_star = ap_positive_solution(model, horizon=horizon, dt=params["dt"])
        gap_end = behind_front_gap(traj, v_star, c, eps, t=horizon)
        gap_half = behind_front_gap(traj, v_star, c, eps, t=0.5 * horizon)
        outputs = {"c_shoot": c, "eps": eps, "gap_half_horizon": gap_half, "gap_horizon": gap_end, "occupancy": occupancy(traj, c - eps)}
        checks = {"gap_small": gap_end < UNIFORM_GAP_TOLERANCE, "gap_decreasing": gap_end < gap_half, "verdict_spreading": classify(traj).verdict == SPREADING}
        return outputs, checks

    record = build_record("behind_front_gap", {"mu": 1.0, "h0": 2.0, **params}, outcome, evaluate)
    if outcome.error is None:
        write_front_csvs(out_dir, "uniform_convergence", outcome.value)
    return [record]


def suite_mass_balance_refinement(out_dir: str, workers: int) -> list:
    """
    The mass balance residual halves from (N, dt) to (2N, dt/2); the convergence study meets its order gates
    """
    tasks = [
        (probe_front, _front_kwargs(1.0, 2.0, 1.0, N=MASS_REFINEMENT_N, dt=0.01, horizon=10.0, sample_stride=1)),
        (probe_front, _front_kwargs(1.0, 2.0, 1.0, N=2 * MASS_REFINEMENT_N, dt=0.005, horizon=10.0, sample_stride=1)),
    ]
    coarse, fine = run_probes(tasks, workers)
    errors = [outcome.error for outcome in (coarse, fine) if outcome.error]
    merged = ProbeOutcome(None if errors else (coarse.value, fine.value), "; ".join(errors) or None, coarse.runtime + fine.runtime)

    def evaluate(pair):
        norms = [residual_norm(*mass_balance_residual(traj)) for traj in pair]
        ratio = norms[0] / norms[1] if norms[1] > 0 else math.inf
        if out_dir:
            write_csv(os.path.join(out_dir, "mass_residual.csv"), ["N", "dt", "residual_norm"], [(MASS_REFINEMENT_N, 0.01, norms[0]), (2 * MASS_REFINEMENT_N, 0.005, norms[1])])
        return {"residual_coarse": norms[0], "residual_fine": norms[1], "ratio": ratio}, {"residual_halves": ratio >= MASS_REFINEMENT_RATIO}

    records = [build_record("mass_balance_refinement", {"mu": 1.0, "h0": 2.0}, merged, evaluate)]
    records.extend(run_config_suite("mass_balance_refinement", out_dir, workers))
    return records


def _differing_records(first_path: str, second_path: str) -> list:
    """
    Names of the records whose entries differ between two records files
    """
    first = {entry["name"]: entry for entry in load_jsonl_file(first_path)}
    second = {entry["name"]: entry for entry in load_jsonl_file(second_path)}
    return sorted(name for name in set(first) | set(second) if first.get(name) != second.get(name))


def suite_determinism(out_dir: str, workers: int) -> list:
    """
    Two runs of a set of suites into separate directories must write byte-identical CSV and records files;
    the second run always goes through a process pool of at least two workers
    """
    names = ["lyapunov_closed_forms", "ode_oracle", "comparison_ordering", "eps_bracketing"]
    directories = [os.path.join(out_dir, "first"), os.path.join(out_dir, "second")]
    for directory, pool_size in zip(directories, (workers, max(2, workers))):
        for name in names:
            run_suite(name, os.path.join(directory, name), pool_size)

    compared = []
    differing = []
    differing_records = {}
    for name in names:
        first = os.path.join(directories[0], name)
        second = os.path.join(directories[1], name)
        for filename in sorted(os.listdir(first)):
            if not (filename.endswith(".csv") or filename.endswith(".jsonl")):
                continue
            compared.append(f"{name}/{filename}")
            other = os.path.join(second, filename)
            if not os.path.exists(other) or not filecmp.cmp(os.path.join(first, filename), other, shallow=False):
                differing.append(f"{name}/{filename}")
                if filename == "records.jsonl" and os.path.exists(other):
                    differing_records[name] = _differing_records(os.path.join(first, filename), other)
    outputs = {"files_compared": len(compared), "differing": differing, "differing_records": differing_records}
    inputs = {"suites": names, "workers": [workers, max(2, workers)]}
    return [RunRecord("byte_identical_outputs", inputs, outputs, {"identical": not differing and bool(compared)})]


def _config_suite(name: str):
    def suite(out_dir: str, workers: int) -> list:
        return run_config_suite(name, out_dir, workers)

    return suite


suites = {
    "lyapunov_closed_forms": _config_suite("lyapunov_closed_forms"),
    "mean_shift": _config_suite("mean_shift"),
    "critical_lengths": _config_suite("critical_lengths"),
    "ode_oracle": _config_suite("ode_oracle"),
    "speed_consistency": _config_suite("speed_consistency"),
    "dichotomy_threshold": suite_dichotomy_threshold,
    "critical_mu": _config_suite("critical_mu"),
    "double_front_symmetry": _config_suite("double_front_symmetry"),
    "part_metric_contraction": _config_suite("part_metric_contraction"),
    "comparison_ordering": suite_comparison_ordering,
    "eps_bracketing": _config_suite("eps_bracketing"),
    "uniform_convergence": suite_uniform_convergence,
    "mass_balance_refinement": suite_mass_balance_refinement,
    "determinism": suite_determinism,
}


def run_suite(name: str, out_dir: str, workers: int = 1) -> RunReport:
    """
    Run a built-in acceptance suite, or every suite for "all", writing into out_dir
    (one sub-directory per suite for "all")
        Outputs: RunReport; report.txt and records.jsonl are written next to the CSVs
    """
    if name != ALL and name not in suites:
        raise ValueError(f"Unknown suite '{name}'. Choose one of: {', '.join(list(suites) + [ALL])}")
    os.makedirs(out_dir, exist_ok=True)
    if name == ALL:
        report = RunReport(title="suite all")
        for suite_name in suites:
            report.extend(run_suite(suite_name, os.path.join(out_dir, suite_name), workers), prefix=suite_name)
        write_report(report, out_dir)
        logger.info(f"suite all: {report.verdict}")
        return report

    logger.info(f"Running suite {name} into {out_dir}")
    report = RunReport(title=f"suite {name}", records=suites[name](out_dir, workers))
    write_report(report, out_dir)
    logger.info(f"suite {name}: {report.verdict}")
    return report
