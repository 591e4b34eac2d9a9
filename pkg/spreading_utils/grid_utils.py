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

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid


def solve_tridiagonal(lower, diag, upper, rhs):
    """
    Solve the tridiagonal system
        lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i],   i = 0..n-1
    lower[0] and upper[-1] are ignored.
        Inputs: 1D arrays of equal length
        Outputs: solution u
    """
    n = len(diag)
    if not (len(lower) == n and len(upper) == n and len(rhs) == n):
        raise ValueError("Tridiagonal bands and right-hand side must have equal length")
    # banded storage expected by scipy: row 0 superdiagonal, row 1 diagonal, row 2 subdiagonal
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


def flux_left(values, dx: float) -> float:
    """
    One-sided second-order derivative at the first node: (-3 u0 + 4 u1 - u2) / (2 dx)
    """
    return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)


def flux_right(values, dx: float) -> float:
    """
    One-sided second-order derivative at the last node: (3 uN - 4 uN-1 + uN-2) / (2 dx)
    """
    return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)


def integrate(values, dx: float) -> float:
    return float(trapezoid(values, dx=dx))


def steps_for(horizon: float, dt: float) -> tuple:
    """
    Number of uniform steps covering [0, horizon] and the step actually used
        Inputs: horizon > 0, requested dt > 0
        Outputs: (n_steps, dt_used) with n_steps * dt_used == horizon
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    n_steps = max(1, int(math.ceil(horizon / dt - 1e-9)))
    return n_steps, horizon / n_steps


def interpolate_profile(x_from, values, x_to):
    """
    Linear interpolation of a sampled profile, zero outside its support
    """
    return np.interp(x_to, x_from, values, left=0.0, right=0.0)
