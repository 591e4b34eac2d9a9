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
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    rms_residual: float
    n_points: int


def linear_fit(x, y) -> LinearFit:
    """Ordinary least-squares fit y = intercept + slope * x

    Args:
        x (array): abscissae (at least 2 distinct values)
        y (array): ordinates

    Returns:
        LinearFit: slope, intercept and root-mean-square residual of the fit
    """

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError(f"A linear fit needs at least 2 points, got {x.size}")

    # fit via statsmodels OLS with an explicit intercept column
    results = sm.OLS(y, sm.add_constant(x, has_constant="add")).fit()
    intercept, slope = results.params
    rms_residual = float(np.sqrt(np.mean(results.resid**2)))

    return LinearFit(slope=float(slope), intercept=float(intercept), rms_residual=rms_residual, n_points=int(x.size))


def observed_order(values, refinement_ratio: float = 2.0) -> float:
    """Observed convergence order from three successively refined values (Richardson triple)

    Args:
        values (list): quantity computed at levels h, h / r, h / r^2
        refinement_ratio (float): r, the refinement factor between levels

    Returns:
        float: log(|v0 - v1| / |v1 - v2|) / log(r); nan when the sequence does not contract
    """

    v0, v1, v2 = (float(value) for value in values[:3])
    coarse = abs(v0 - v1)
    fine = abs(v1 - v2)
    if fine == 0.0 or coarse == 0.0:
        return math.inf if fine == 0.0 and coarse > 0.0 else math.nan
    return math.log(coarse / fine) / math.log(refinement_ratio)


def observed_order_against_exact(values, exact: float, refinement_ratio: float = 2.0) -> float:
    """Observed convergence order from errors against a known exact value

    Args:
        values (list): quantity at successively refined levels (>= 2)
        exact (float): closed-form value
        refinement_ratio (float): refinement factor between levels

    Returns:
        float: slope of -log(error) against log(refinement) fitted over all levels
    """

    errors = np.abs(np.asarray(values, dtype=float) - exact)
    if np.any(errors == 0.0):
        return math.inf
    levels = np.arange(errors.size) * math.log(refinement_ratio)
    return -linear_fit(levels, np.log(errors)).slope


def errors_monotone(values, exact: float = None) -> bool:
    """Whether successive differences (or errors against `exact`) strictly decrease"""

    values = np.asarray(values, dtype=float)
    if exact is None:
        errors = np.abs(np.diff(values))
    else:
        errors = np.abs(values - exact)
    return bool(np.all(np.diff(errors) < 0))
