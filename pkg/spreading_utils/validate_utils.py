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
import re

from spreading_utils.forcing_utils import check_hypotheses, parse_number, parse_trig_polynomial, ReactionModel

########################
## GENERAL VALIDATION ##
########################

experiment_kinds = [
    "lyapunov_validation",
    "ode_oracle",
    "semiwave",
    "fb_single",
    "fb_double",
    "speed_consistency",
    "dichotomy_sweep",
    "convergence_study",
]

expected_verdicts = ["any", "Spreading", "Vanishing", "Undetermined"]


class ConfigError(ValueError):
    """
    Every problem found in a config, as (line, message) pairs; line is None when a key is missing
    """

    def __init__(self, errors: list, filename: str = "?"):
        self.errors = list(errors)
        self.filename = filename
        lines = [f"{message} (line {line} of {filename})" if line else f"{message} ({filename})" for line, message in self.errors]
        super().__init__("; ".join(lines))


###################
## CONFIG SCHEMA ##
###################

# key: (type, default, constraint); a None default marks an optional key, REQUIRED a mandatory one
REQUIRED = object()

experiment_schema = {
    "kind": ("choice", REQUIRED, experiment_kinds),
    "name": ("str", "experiment", None),
    "expect": ("choice", "any", expected_verdicts),
}

model_schema = {
    "a": ("trig", "1", None),
    "b": ("trig", "1", None),
    "mu": ("float", 1.0, "positive"),
}

numerics_schema = {
    "N": ("int", 400, "at_least_16"),
    "dt": ("float", 0.01, "positive"),
    "X": ("float", 40.0, "positive"),
    "h0": ("float", 2.0, "positive"),
    "g0": ("float", -1.0, None),
    "horizon": ("float", 30.0, "positive"),
    "spinup": ("float", None, "positive"),
    "window": ("float", None, "positive"),
    "window_fraction": ("float", 0.5, "unit_interval"),
    "amplitude": ("float", 1.0, "nonnegative"),
    "l": ("float", 2.0, "positive"),
    "gamma": ("float", 0.0, "nonnegative"),
    "tolerance": ("float", 1e-3, "unit_interval"),
    "speed_tolerance": ("float", 0.02, "unit_interval"),
    "gap_tolerance": ("float", 1e-5, "unit_interval"),
    "vanish_tol": ("float", 1e-4, "unit_interval"),
    "spread_fraction": ("float", 0.1, "unit_interval"),
    "plateau_tol": ("float", 1e-5, "unit_interval"),
    "sample_stride": ("int", 10, "positive"),
    "snapshot_interval": ("float", 1.0, "positive"),
    "semiwave_N": ("int", 800, "at_least_16"),
    "semiwave_dt": ("float", 0.01, "positive"),
    "semiwave_horizon": ("float", 150.0, "positive"),
}

sweep_schema = {
    "mu": ("float_list", None, "positive"),
    "eps": ("float_list", None, "nonnegative"),
    "lengths": ("float_list", None, "positive"),
    "levels": ("int", 3, "at_least_3"),
    "critical_mu": ("bool", False, None),
    "bracket": ("float_list", None, "bracket"),
}

output_schema = {
    "dir": ("str", "output", None),
}

config_schema = {
    "experiment": experiment_schema,
    "model": model_schema,
    "numerics": numerics_schema,
    "sweep": sweep_schema,
    "output": output_schema,
}

# per-kind overrides of the numerics defaults
kind_defaults = {
    # dt unset means dt = dx = l / N
    "lyapunov_validation": {"N": 400, "horizon": 50.0, "dt": None},
    "ode_oracle": {"horizon": 50.0, "tolerance": 1e-6},
    "semiwave": {"N": 800, "horizon": 150.0},
    "fb_single": {"N": 400, "horizon": 30.0},
    "fb_double": {"N": 200, "h0": 1.0, "g0": -1.0, "horizon": 30.0},
    "speed_consistency": {"N": 2000, "horizon": 80.0, "h0": 2.0},
    "dichotomy_sweep": {"N": 200, "h0": 1.0, "g0": -1.0, "horizon": 40.0},
    "convergence_study": {
        "N": 100,
        "dt": 0.001,
        "horizon": 10.0,
        "X": 30.0,
        "semiwave_N": 300,
        "semiwave_dt": 0.02,
        "semiwave_horizon": 100.0,
    },
}


def convert_value(raw: str, value_type: str):
    """
    Convert the text of a config value to its schema type
        Inputs: raw text, schema type name
        Outputs: converted value, ValueError if the text does not parse
    """
    raw = raw.strip()
    if value_type == "str":
        return raw
    if value_type == "choice":
        return raw
    if value_type == "int":
        if not re.fullmatch(r"[+-]?\d+", raw):
            raise ValueError(f"'{raw}' is not an integer")
        return int(raw)
    if value_type == "float":
        return parse_number(raw)
    if value_type == "float_list":
        items = [item for item in raw.split(",") if item.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(parse_number(item) for item in items)
    if value_type == "bool":
        lowered = raw.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"'{raw}' is not a boolean")
    if value_type == "trig":
        return parse_trig_polynomial(raw)
    raise ValueError(f"Unknown schema type {value_type}")


def constraint_message(key: str, value, constraint) -> str:
    """
    Check a converted value against its schema constraint
        Outputs: None if the value satisfies it, otherwise the error message
    """
    if constraint is None or value is None:
        return None
    if isinstance(constraint, list):
        if value not in constraint:
            return f"{key} must be one of {constraint}, got '{value}'"
        return None
    values = value if isinstance(value, tuple) else (value,)
    for item in values:
        if isinstance(item, float) and not math.isfinite(item):
            return f"{key} must be finite, got {item}"
    if constraint == "positive" and not all(item > 0 for item in values):
        return f"{key} must be > 0, got {value}"
    if constraint == "nonnegative" and not all(item >= 0 for item in values):
        return f"{key} must be >= 0, got {value}"
    if constraint == "unit_interval" and not all(0 < item <= 1 for item in values):
        return f"{key} must lie in (0, 1], got {value}"
    if constraint == "at_least_16" and not value >= 16:
        return f"{key} must be >= 16, got {value}"
    if constraint == "at_least_3" and not value >= 3:
        return f"{key} must be >= 3, got {value}"
    if constraint == "bracket" and not (len(values) == 2 and 0 < values[0] < values[1]):
        return f"{key} must be two values 0 < lo < hi, got {value}"
    return None


def cross_field_messages(values: dict) -> list:
    """
    Domain checks that involve more than one key
        Inputs: filled config values by section
        Outputs: list of (section, key, message)
    """
    messages = []
    numerics = values["numerics"]
    kind = values["experiment"]["kind"]
    model = ReactionModel(values["model"]["a"], values["model"]["b"])
    report = check_hypotheses(model)
    # exponents of the linear problem are defined for any a, including a = 0
    if kind != "lyapunov_validation":
        for message in report.messages:
            messages.append(("model", "b" if message.startswith("(H1)") else "a", message))
    if model.sup_abs_a > 0 and numerics["dt"] is not None and numerics["dt"] >= 0.5 / model.sup_abs_a:
        messages.append(("numerics", "dt", f"dt must be < 0.5 / sup|a| = {0.5 / model.sup_abs_a:.6g}"))
    if kind in ("fb_double", "dichotomy_sweep") and not numerics["g0"] < numerics["h0"]:
        messages.append(("numerics", "g0", f"g0 must be < h0 = {numerics['h0']}, got {numerics['g0']}"))
    separate_grid = kind in ("speed_consistency", "convergence_study")
    semiwave_horizon = numerics["semiwave_horizon"] if separate_grid else numerics["horizon"]
    if numerics["window"] is not None and numerics["window"] > semiwave_horizon:
        messages.append(("numerics", "window", f"window must not exceed the semi-wave horizon {semiwave_horizon}"))
    if kind == "lyapunov_validation" and numerics["dt"] is not None and numerics["dt"] > numerics["l"] / numerics["N"]:
        messages.append(("numerics", "dt", f"dt must be <= dx = l / N = {numerics['l'] / numerics['N']:.6g}"))
    if report.h3_ok and (kind == "semiwave" or separate_grid) and numerics["X"] < 10.0 / math.sqrt(report.mean_a):
        messages.append(("numerics", "X", f"X must be >= 10 / sqrt(mean(a)) = {10.0 / math.sqrt(report.mean_a):.6g}"))
    return messages
