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

from spreading_utils.file_utils import emit_config, load_config
from spreading_utils.validate_utils import ConfigError

"""
Python script to verify that an experiment config has been constructed correctly
    Inputs: <config file path>, --quiet
    Outputs: the filled config and a Success line, or one ERROR line per problem
    Example usage: `python validate.py sample_configs/fisher_single.ini`
"""

if __name__ == "__main__":
    # Parse command line arguments
    parser = argparse.ArgumentParser(description="Python script to verify that an experiment config has been constructed correctly")
    parser.add_argument("config", help="Path to the config file to verify")
    parser.add_argument("--quiet", help="Do not echo the filled config", action="store_true")
    args = parser.parse_args()

    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING if args.quiet else logging.INFO)

    try:
        cfg = load_config(args.config)
        if not args.quiet:
            print(emit_config(cfg))
        print(f"Success: {args.config} is a valid {cfg.kind} config")
        sys.exit(0)

    except ConfigError as err:
        for line, message in err.errors:
            print(f"ERROR: {message} (line {line} of {err.filename})" if line else f"ERROR: {message} ({err.filename})")
        sys.exit(1)
    except Exception as err:
        print(f"ERROR: {err}")
        sys.exit(1)
