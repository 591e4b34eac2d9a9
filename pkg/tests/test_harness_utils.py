import filecmp
import math

import pytest

from spreading_utils.file_utils import emit_config, load_jsonl_file, parse_config
from spreading_utils.harness_utils import (
    ProbeOutcome,
    build_record,
    convergence_study,
    critical_length_closed_form,
    relative_difference,
    run_experiment,
    run_probes,
)
from spreading_utils.spectral_utils import DIRICHLET_DRIFT, NEUMANN_DIRICHLET
from spreading_utils.summary_utils import PASS

LYAPUNOV = """
[experiment]
kind = lyapunov_validation
name = quick_lyapunov

[model]
a = 0

[numerics]
N = 64
horizon = 10
gamma = 1
tolerance = 1e-2

[sweep]
lengths = 2
"""

ORACLE = """
[experiment]
kind = ode_oracle

[model]
a = 1 | 0.5:1:0

[numerics]
horizon = 10
tolerance = 1e-6
"""

VANISHING_FRONT = """
[experiment]
kind = fb_single
expect = Vanishing

[model]
mu = 0.05

[numerics]
N = 100
h0 = 1.2
horizon = 30
"""

EVEN_DOUBLE_FRONT = """
[experiment]
kind = fb_double

[numerics]
N = 50
g0 = -1
h0 = 1
horizon = 5
"""

QUICK_SEMIWAVE = """
[experiment]
kind = semiwave

[model]
mu = 1

[numerics]
X = 20
N = 200
dt = 0.02
horizon = 80
gap_tolerance = 1e-2
speed_tolerance = 0.05
"""

DICHOTOMY = """
[experiment]
kind = dichotomy_sweep

[numerics]
N = 50
horizon = 40

[sweep]
mu = 10, 0.01
"""


def halve(value):
    return value / 2


def fail(value):
    raise ValueError(f"cannot use {value}")


def record_named(report, name):
    return next(record for record in report.records if record.name == name)


class TestRunProbes:
    def test_order_and_errors(self):
        outcomes = run_probes([(halve, {"value": 4.0}), (fail, {"value": 1}), (halve, {"value": 1.0})])
        assert [outcome.value for outcome in outcomes] == [2.0, None, 0.5]
        assert outcomes[1].error == "ValueError: cannot use 1"

    def test_pool_keeps_order(self):
        outcomes = run_probes([(halve, {"value": float(k)}) for k in range(6)], workers=2)
        assert [outcome.value for outcome in outcomes] == [k / 2 for k in range(6)]

    def test_rejects_zero_workers(self):
        with pytest.raises(ValueError, match="workers"):
            run_probes([], workers=0)


class TestBuildRecord:
    def test_success(self):
        record = build_record("probe", {"x": 1}, ProbeOutcome(2.0, None, 0.1), lambda value: ({"y": value}, {"ok": value > 1}))
        assert record.passed
        assert record.outputs == {"y": 2.0}

    def test_probe_error(self):
        record = build_record("probe", {}, ProbeOutcome(None, "RuntimeError: boom", 0.1), lambda value: ({}, {}))
        assert not record.passed
        assert record.error == "RuntimeError: boom"

    def test_evaluate_error(self):
        record = build_record("probe", {}, ProbeOutcome(1.0, None, 0.1), lambda value: 1 / 0)
        assert record.error.startswith("ZeroDivisionError")


class TestHelpers:
    def test_critical_length_closed_form(self):
        assert critical_length_closed_form(NEUMANN_DIRICHLET, 1.0) == pytest.approx(math.pi / 2)
        assert critical_length_closed_form(DIRICHLET_DRIFT, 1.0) == pytest.approx(math.pi)
        assert critical_length_closed_form(DIRICHLET_DRIFT, 2.0, 2.0) == pytest.approx(math.pi)
        with pytest.raises(ValueError, match="No critical length"):
            critical_length_closed_form(DIRICHLET_DRIFT, 1.0, 2.0)

    def test_relative_difference(self):
        assert relative_difference(1.02, 1.0) == pytest.approx(0.02)


class TestRunExperiment:
    def test_lyapunov(self, tmp_path):
        cfg = parse_config(LYAPUNOV)
        report = run_experiment(cfg, str(tmp_path), workers=1)
        assert report.verdict == PASS
        assert [record.name for record in report.records] == ["lambda_neumann_dirichlet_l=2", "lambda_dirichlet_drift_l=2"]
        assert (tmp_path / "config.ini").read_text() == emit_config(cfg)
        assert (tmp_path / "report.txt").read_text().splitlines()[-1] == PASS
        assert (tmp_path / "lyapunov.csv").read_text().splitlines()[0] == "kind,l,gamma,a_mean,lambda,converged,horizon,N"
        assert len(load_jsonl_file(str(tmp_path / "records.jsonl"))) == 2

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = parse_config(LYAPUNOV)
        run_experiment(cfg, str(tmp_path / "first"))
        run_experiment(cfg, str(tmp_path / "second"))
        for filename in ("lyapunov.csv", "records.jsonl", "config.ini"):
            assert filecmp.cmp(tmp_path / "first" / filename, tmp_path / "second" / filename, shallow=False)

    def test_pooled_run_matches_serial_run(self, tmp_path):
        cfg = parse_config(LYAPUNOV.replace("lengths = 2", "lengths = 2, 3"))
        run_experiment(cfg, str(tmp_path / "serial"), workers=1)
        run_experiment(cfg, str(tmp_path / "pooled"), workers=2)
        for filename in ("lyapunov.csv", "records.jsonl"):
            assert filecmp.cmp(tmp_path / "serial" / filename, tmp_path / "pooled" / filename, shallow=False)

    def test_ode_oracle(self, tmp_path):
        report = run_experiment(parse_config(ORACLE), str(tmp_path))
        record = report.records[0]
        assert record.checks == {"matches_oracle": True, "hull_consistent": True}
        assert record.outputs["hull_shift"] == pytest.approx(5.0)
        assert (tmp_path / "ode_oracle.csv").exists()

    def test_vanishing_front(self, tmp_path):
        report = run_experiment(parse_config(VANISHING_FRONT), str(tmp_path))
        assert report.verdict == PASS
        record = report.records[0]
        assert record.outputs["verdict"] == "Vanishing"
        assert record.checks == {"verdict_as_expected": True}
        classification = load_jsonl_file(str(tmp_path / "classification.jsonl"))
        assert classification[0]["verdict"] == "Vanishing"
        assert (tmp_path / "single_front_0_trajectory.csv").exists()
        assert (tmp_path / "single_front_0_profile.csv").exists()

    def test_even_double_front(self, tmp_path):
        report = run_experiment(parse_config(EVEN_DOUBLE_FRONT), str(tmp_path))
        record = report.records[0]
        assert record.checks["symmetric_fronts"]
        assert record.outputs["symmetry_defect"] < 1e-8

    def test_semiwave(self, tmp_path):
        report = run_experiment(parse_config(QUICK_SEMIWAVE), str(tmp_path))
        record = record_named(report, "semiwave_mu=1")
        assert record.error is None
        assert record.checks["within_speed_bound"]
        assert record.checks["profile_monotone"]
        assert record.checks["matches_shooting"]
        assert (tmp_path / "semiwave_0_flux.csv").exists()
        assert (tmp_path / "semiwave_speeds.csv").exists()

    def test_dichotomy_sweep(self, tmp_path):
        report = run_experiment(parse_config(DICHOTOMY), str(tmp_path))
        sequence = record_named(report, "dichotomy_sequence")
        assert sequence.outputs["verdicts"] == ["Vanishing", "Spreading"]
        assert sequence.checks == {"all_probes_classified": True, "single_switch": True}
        assert (tmp_path / "dichotomy.csv").read_text().splitlines()[1].startswith("0.01,Vanishing")

    def test_failed_probe_is_recorded(self, tmp_path):
        cfg = parse_config(LYAPUNOV.replace("lengths = 2", "lengths = 2, 1").replace("N = 64", "N = 64\ndt = 0.03125"))
        report = run_experiment(cfg, str(tmp_path))
        failed = [record for record in report.records if record.error]
        assert [record.name for record in failed] == ["lambda_neumann_dirichlet_l=1", "lambda_dirichlet_drift_l=1"]
        assert "accuracy guard" in failed[0].error
        assert report.verdict != PASS

    def test_convergence_study_needs_its_kind(self):
        with pytest.raises(ValueError, match="convergence_study"):
            convergence_study(parse_config(LYAPUNOV))

    @pytest.mark.slow
    def test_convergence_study(self, tmp_path):
        cfg = parse_config("[experiment]\nkind = convergence_study\n")
        report = convergence_study(cfg, str(tmp_path))
        assert [record.name for record in report.records] == ["order_lambda", "order_front_position", "order_cstar"]
        assert all(record.error is None for record in report.records)
        assert record_named(report, "order_lambda").checks["order_gate"]
        assert (tmp_path / "convergence.csv").exists()
