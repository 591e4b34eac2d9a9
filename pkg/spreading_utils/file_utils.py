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

import configparser
import csv
import json
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

from spreading_utils.forcing_utils import format_trig_polynomial, ReactionModel, TrigPolynomial
from spreading_utils.validate_utils import (
    ConfigError,
    REQUIRED,
    config_schema,
    constraint_message,
    convert_value,
    cross_field_messages,
    kind_defaults,
)

FLOAT_FORMAT = "%.17g"

_section_pattern = re.compile(r"^\s*\[(?P<name>[^\]]*)\]")
_key_pattern = re.compile(r"^\s*(?P<key>[^=:\s#;\[][^=:]*?)\s*[=:]")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment description with every default filled in
        kind: one of validate_utils.experiment_kinds
        expect: declared verdict for free-boundary runs, "any" when not declared
        numerics: every numerics_schema key, None for unset optional knobs
        sweep: every sweep_schema key
    """

    kind: str
    name: str
    model: ReactionModel
    mu: float
    numerics: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    output_dir: str = "output"
    expect: str = "any"


#################
## CONFIG TEXT ##
#################


def locate_keys(text: str) -> tuple:
    """
    Scan config text for the line of every section header and key
        Inputs: config text
        Outputs: section_lines {section: line}, key_lines {(section, key): line}
    """
    section_lines = {}
    key_lines = {}
    section = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        section_match = _section_pattern.match(line)
        if section_match:
            section = section_match.group("name").strip()
            section_lines.setdefault(section, line_no)
            continue
        key_match = _key_pattern.match(line)
        if key_match and section is not None and not line[0].isspace():
            key_lines.setdefault((section, key_match.group("key").strip()), line_no)
    return section_lines, key_lines


def _syntax_errors(err: configparser.Error, text: str) -> list:
    """
    Convert a configparser exception into (line, message) pairs with a column
    """
    lines = text.splitlines()

    def column(line_no):
        if line_no is None or not 0 < line_no <= len(lines):
            return 1
        line = lines[line_no - 1]
        return len(line) - len(line.lstrip()) + 1

    if isinstance(err, configparser.DuplicateOptionError):
        return [(err.lineno, f"Duplicate key '{err.option}' in [{err.section}], column {column(err.lineno)}")]
    if isinstance(err, configparser.DuplicateSectionError):
        return [(err.lineno, f"Duplicate section [{err.section}], column {column(err.lineno)}")]
    if isinstance(err, configparser.MissingSectionHeaderError):
        return [(err.lineno, f"Key outside of any [section], column {column(err.lineno)}")]
    if isinstance(err, configparser.ParsingError):
        return [(line_no, f"Syntax error in {line.strip()}, column {column(line_no)}") for line_no, line in err.errors]
    return [(None, str(err))]


def parse_config(text: str, filename: str = "<config>") -> ExperimentConfig:
    """
    Read and validate config text. Duplicate keys or sections, unknown keys or sections,
    unparseable values and violated constraints are all collected and raised together.
        Inputs: INI text, filename used in error messages
        Outputs: ExperimentConfig with defaults filled, ConfigError listing (line, message)
    """
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=filename)
    except configparser.Error as err:
        raise ConfigError(_syntax_errors(err, text), filename) from err

    section_lines, key_lines = locate_keys(text)
    errors = []
    for section in parser.sections():
        if section not in config_schema:
            errors.append((section_lines.get(section), f"Unknown section [{section}]"))
            continue
        for key in parser[section]:
            if key not in config_schema[section]:
                errors.append((key_lines.get((section, key)), f"Unknown key '{key}' in [{section}]"))

    # convert what was given; defaults are filled once the kind is known
    given = {section: {} for section in config_schema}
    for section, schema in config_schema.items():
        if not parser.has_section(section):
            continue
        for key, (value_type, _, constraint) in schema.items():
            if key not in parser[section]:
                continue
            line_no = key_lines.get((section, key))
            try:
                value = convert_value(parser[section][key], value_type)
            except ValueError as err:
                errors.append((line_no, f"{key}: {err}"))
                continue
            message = constraint_message(key, value, constraint)
            if message:
                errors.append((line_no, message))
                continue
            given[section][key] = value

    if not parser.has_option("experiment", "kind"):
        errors.append((None, "Missing required key 'kind' in [experiment]"))
    if errors:
        raise ConfigError(errors, filename)

    values = fill_defaults(given)
    messages = cross_field_messages(values)
    if messages:
        raise ConfigError([(key_lines.get((section, key)), message) for section, key, message in messages], filename)

    return ExperimentConfig(
        kind=values["experiment"]["kind"],
        name=values["experiment"]["name"],
        expect=values["experiment"]["expect"],
        model=ReactionModel(values["model"]["a"], values["model"]["b"]),
        mu=values["model"]["mu"],
        numerics=values["numerics"],
        sweep=values["sweep"],
        output_dir=values["output"]["dir"],
    )


def fill_defaults(given: dict) -> dict:
    """
    Complete converted values with schema defaults, numerics overridden per kind
    """
    kind = given["experiment"]["kind"]
    values = {}
    for section, schema in config_schema.items():
        values[section] = {}
        for key, (value_type, default, _) in schema.items():
            if key in given[section]:
                values[section][key] = given[section][key]
            elif section == "numerics" and key in kind_defaults.get(kind, {}):
                values[section][key] = kind_defaults[kind][key]
            elif default is REQUIRED or default is None:
                values[section][key] = None
            elif value_type == "trig":
                values[section][key] = convert_value(default, value_type)
            else:
                values[section][key] = default
    return values


def load_config(config_filename: str) -> ExperimentConfig:
    """
    Open a config file and parse it, naming the file in every error
    """
    if not os.path.isfile(config_filename):
        raise ValueError(f"Config file {config_filename} does not exist!")
    with open(config_filename) as config_file:
        text = config_file.read()
    return parse_config(text, os.path.basename(config_filename))


def _emit_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, TrigPolynomial):
        return format_trig_polynomial(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_emit_value(item) for item in value)
    return str(value)


def emit_config(cfg: ExperimentConfig) -> str:
    """
    Canonical config text: schema order, every set value written out, floats by repr
    """
    sections = {
        "experiment": {"kind": cfg.kind, "name": cfg.name, "expect": cfg.expect},
        "model": {"a": cfg.model.a, "b": cfg.model.b, "mu": cfg.mu},
        "numerics": cfg.numerics,
        "sweep": cfg.sweep,
        "output": {"dir": cfg.output_dir},
    }
    lines = []
    for section, schema in config_schema.items():
        lines.append(f"[{section}]")
        for key in schema:
            value = sections[section].get(key)
            if value is not None:
                lines.append(f"{key} = {_emit_value(value)}")
        lines.append("")
    return "\n".join(lines)


#################
## CSV / JSONL ##
#################


def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(csv_filename: str, column_names: list, rows) -> None:
    """
    Write rows under a header, floats with 17 significant digits
        Inputs: output path (its directory must exist), column names, iterable of rows
    """
    if not os.path.isdir(os.path.dirname(csv_filename) or "."):
        raise ValueError(f"Directory path {os.path.dirname(csv_filename)} does not exist!")
    with open(csv_filename, "w", newline="") as csv_file:
        csv_writer = csv.writer(csv_file, delimiter=",", lineterminator="\n")
        csv_writer.writerow(column_names)
        for row in rows:
            csv_writer.writerow([_format_cell(value) for value in row])


def write_trajectory_csv(csv_filename: str, traj) -> None:
    """
    Sampled front history: t, h, g, h_dot, mass, u_sup, u_at_0
    """
    rows = zip(traj.times, traj.h, traj.g, traj.h_dot, traj.mass, traj.u_sup, traj.u_at_0)
    write_csv(csv_filename, ["t", "h", "g", "h_dot", "mass", "u_sup", "u_at_0"], rows)


def write_profile_csv(csv_filename: str, times, xs, us) -> None:
    """
    Profile snapshots in long form: t, x, u
    """
    rows = []
    for t, x, u in zip(times, xs, us):
        rows.extend((float(t), float(x_k), float(u_k)) for x_k, u_k in zip(x, u))
    write_csv(csv_filename, ["t", "x", "u"], rows)


def write_flux_csv(csv_filename: str, times, flux, mu: float) -> None:
    """
    Semi-wave boundary flux history: t, flux0, mu_times_flux0
    """
    rows = ((float(t), float(f), mu * float(f)) for t, f in zip(times, flux))
    write_csv(csv_filename, ["t", "flux0", "mu_times_flux0"], rows)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_json_safe(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, TrigPolynomial):
        return format_trig_polynomial(value)
    return value


def save_jsonl(json_object_list, outfile_path) -> None:
    """Write a JSON-lines file, one sorted-key object per line

    Args:
        json_object_list (list): list of dictionaries
        outfile_path (str): output file path
    """
    if not os.path.isdir(os.path.dirname(outfile_path) or "."):
        raise ValueError(f"Directory path {os.path.dirname(outfile_path)} does not exist!")
    with open(outfile_path, "w") as outfile:
        for entry in json_object_list:
            outfile.write(json.dumps(_json_safe(entry), sort_keys=True))
            outfile.write("\n")


def load_jsonl_file(jsonl_filename: str) -> list:
    """
    Read a JSON-lines file back, naming the line of any malformed entry
    """
    entries = []
    with open(jsonl_filename) as jsonl_file:
        for line_no, line in enumerate(jsonl_file, start=1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise ValueError(f"Malformed JSON on line {line_no} of {jsonl_filename}: {err}") from err
    return entries
