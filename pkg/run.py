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

import argparse
import logging
import sys

from spreading_utils.file_utils import load_config
from spreading_utils.harness_utils import run_experiment
from spreading_utils.validate_utils import ConfigError

"""
Python script to run the experiment described by a config file
    Inputs: <config file path>, --out <output directory>, --workers <process count>, --quiet
    Outputs: CSVs, records.jsonl and report.txt in the output directory; exit code 0 iff the run passes
    Example usage: `python run.py sample_configs/fisher_single.ini --out output/fisher_single`
"""

if __name__ == "__main__":
    # Parse command line arguments
    parser = argparse.ArgumentParser(description="Python script to run a free boundary spreading experiment")
    parser.add_argument("config", help="Path to the experiment config (INI)")
    parser.add_argument("--out", help="Output directory (default: the [output] dir of the config)", default=None)
    parser.add_argument("--workers", help="Number of worker processes for independent probes", type=int, default=1)
    parser.add_argument("--quiet", help="Only print warnings and errors", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING if args.quiet else logging.INFO)

    try:
        if args.workers < 1:
            raise ValueError(f"--workers must be >= 1, got {args.workers}")
        cfg = load_config(args.config)
        report = run_experiment(cfg, args.out, args.workers)
        print(report.verdict)
        sys.exit(0 if report.passed else 1)

    except ConfigError as err:
        for line, message in err.errors:
            print(f"ERROR: {message} (line {line} of {err.filename})" if line else f"ERROR: {message} ({err.filename})")
        sys.exit(2)
    except Exception as err:
        print(f"ERROR: {err}")
        sys.exit(2)
