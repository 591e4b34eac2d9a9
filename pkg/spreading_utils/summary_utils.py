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

import os
from dataclasses import dataclass, field

from spreading_utils.file_utils import save_jsonl

PASS = "PASS"
FAIL = "FAIL"


@dataclass
class RunRecord:
    """
    One probe of an experiment
        inputs / outputs: plain values, written to the records file
        checks: check name -> bool
        mandatory: counts towards the aggregate verdict
        error: "ExceptionName: message" when the probe raised
        runtime: seconds, shown in the text report only
    """

    name: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    mandatory: bool = True
    error: str = None
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and all(bool(value) for value in self.checks.values())

    def as_json(self) -> dict:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "checks": self.checks,
            "mandatory": self.mandatory,
            "error": self.error,
            "passed": self.passed,
        }


@dataclass
class RunReport:
    title: str
    records: list = field(default_factory=list)
    config_text: str = ""

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records if record.mandatory)

    @property
    def verdict(self) -> str:
        return PASS if self.passed else FAIL

    def extend(self, other: "RunReport", prefix: str = None) -> None:
        for record in other.records:
            if prefix:
                record.name = f"{prefix}/{record.name}"
            self.records.append(record)


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, (list, tuple)) and len(value) > 8:
        return f"[{len(value)} values]"
    return str(value)


def format_report(report: RunReport) -> str:
    """
    Human-readable report; the last line is PASS or FAIL
    """
    lines = [f"# {report.title}", ""]
    if report.config_text:
        lines.append("## config")
        lines.extend(report.config_text.rstrip().splitlines())
        lines.append("")
    for record in report.records:
        status = "ok" if record.passed else "FAILED"
        optional = "" if record.mandatory else " (optional)"
        lines.append(f"## {record.name}: {status}{optional} [{record.runtime:.2f} s]")
        for key, value in record.inputs.items():
            lines.append(f"  input  {key} = {_format_value(value)}")
        for key, value in record.outputs.items():
            lines.append(f"  output {key} = {_format_value(value)}")
        for key, value in record.checks.items():
            lines.append(f"  check  {key}: {'pass' if value else 'fail'}")
        if record.error:
            lines.append(f"  error  {record.error}")
        lines.append("")
    mandatory = [record for record in report.records if record.mandatory]
    failed = [record.name for record in mandatory if not record.passed]
    lines.append(f"{len(mandatory) - len(failed)} of {len(mandatory)} mandatory records passed")
    if failed:
        lines.append(f"failed: {', '.join(failed)}")
    lines.append(report.verdict)
    return "\n".join(lines) + "\n"


def write_report(report: RunReport, out_dir: str) -> str:
    """
    Write report.txt and records.jsonl into out_dir
        Outputs: path of the text report
    """
    if not os.path.isdir(out_dir):
        raise ValueError(f"Directory path {out_dir} does not exist!")
    report_path = os.path.join(out_dir, "report.txt")
    with open(report_path, "w") as report_file:
        report_file.write(format_report(report))
    save_jsonl([record.as_json() for record in report.records], os.path.join(out_dir, "records.jsonl"))
    return report_path
