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

from spreading_utils.suite_utils import ALL, run_suite, suites

"""
Python script to run a built-in acceptance suite, or all of them
    Inputs: <suite name | all>, --out <output directory>, --workers <process count>, --quiet
    Outputs: per-suite CSVs and reports in the output directory; exit code 0 iff every mandatory record passes
    Example usage: `python suite.py all --out output/suites --workers 4`
"""

if __name__ == "__main__":
    # Parse command line arguments
    parser = argparse.ArgumentParser(description="Python script to run built-in acceptance suites")
    parser.add_argument("name", help="Suite to run", choices=list(suites) + [ALL])
    parser.add_argument("--out", help="Output directory", default="output/suites")
    parser.add_argument("--workers", help="Number of worker processes for independent probes", type=int, default=1)
    parser.add_argument("--quiet", help="Only print warnings and errors", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING if args.quiet else logging.INFO)

    try:
        if args.workers < 1:
            raise ValueError(f"--workers must be >= 1, got {args.workers}")
        report = run_suite(args.name, args.out, args.workers)
        print(report.verdict)
        sys.exit(0 if report.passed else 1)

    except Exception as err:
        print(f"ERROR: {err}")
        sys.exit(2)
