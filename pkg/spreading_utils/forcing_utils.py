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
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# sampling used by check_hypotheses for the reported (non-authoritative) inf of b
HYPOTHESIS_SAMPLE_STEP = 1e-3
HYPOTHESIS_SAMPLE_WINDOW = 1e3


def canonical_phase(phase: float) -> float:
    """
    Reduce a phase to the canonical interval [0, 2*pi)
    """
    reduced = math.fmod(phase, TWO_PI)
    if reduced < 0:
        reduced += TWO_PI
    # fmod of a tiny negative number can round back up to 2*pi
    if reduced >= TWO_PI:
        reduced = 0.0
    return reduced


###########################
## TRIGONOMETRIC FORCING ##
###########################


@dataclass(frozen=True)
class TrigPolynomial:
    """
    Finite sum c0 + sum_i amplitude_i * sin(frequency_i * t + phase_i), the computable
    sub-class of time almost periodic coefficients. Frequencies such as 1 and sqrt(2)
    give genuinely non-periodic forcing.
        constant_term: c0
        modes: tuple of (amplitude, frequency > 0, phase in [0, 2*pi))
    """

    constant_term: float
    modes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not math.isfinite(self.constant_term):
            raise ValueError(f"constant_term must be finite, got {self.constant_term}")
        canonical = []
        for mode in self.modes:
            if len(mode) != 3:
                raise ValueError(f"Mode {mode} is not an (amplitude, frequency, phase) triple")
            amplitude, frequency, phase = (float(value) for value in mode)
            if not math.isfinite(amplitude):
                raise ValueError(f"Mode amplitude must be finite, got {amplitude}")
            if not (math.isfinite(frequency) and frequency > 0):
                raise ValueError(f"Mode frequency must be finite and > 0, got {frequency}")
            if not math.isfinite(phase):
                raise ValueError(f"Mode phase must be finite, got {phase}")
            canonical.append((amplitude, frequency, canonical_phase(phase)))
        object.__setattr__(self, "constant_term", float(self.constant_term))
        object.__setattr__(self, "modes", tuple(canonical))


def ap_eval(p: TrigPolynomial, t):
    """
    Evaluate p at time t (scalar or numpy array)
        Inputs: TrigPolynomial, t
        Outputs: c0 + sum amplitude * sin(frequency * t + phase), same shape as t
    """
    t = np.asarray(t, dtype=float)
    value = np.full(t.shape, p.constant_term)
    for amplitude, frequency, phase in p.modes:
        value = value + amplitude * np.sin(frequency * t + phase)
    if value.ndim == 0:
        return float(value)
    return value


def ap_mean(p: TrigPolynomial) -> float:
    """
    Exact long-time average of p; every sinusoidal mode averages to zero
    """
    return p.constant_term


def ap_bounds(p: TrigPolynomial) -> tuple:
    """
    Analytic (inf, sup) bounds c0 -/+ sum |amplitude|
    """
    spread = sum(abs(amplitude) for amplitude, _, _ in p.modes)
    return p.constant_term - spread, p.constant_term + spread


def ap_integral(p: TrigPolynomial, s, t):
    """
    Closed-form integral of p over [s, t], evaluated mode by mode
        Inputs: TrigPolynomial, lower limit s, upper limit t (scalars or arrays)
        Outputs: c0 (t - s) + sum amplitude / frequency * (cos(frequency s + phase) - cos(frequency t + phase))
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    value = p.constant_term * (t - s)
    for amplitude, frequency, phase in p.modes:
        value = value + (amplitude / frequency) * (np.cos(frequency * s + phase) - np.cos(frequency * t + phase))
    if np.ndim(value) == 0:
        return float(value)
    return value


def ap_translate(p: TrigPolynomial, tau: float) -> TrigPolynomial:
    """
    Hull translate p(. + tau); only the phases change
    """
    if not math.isfinite(tau):
        raise ValueError(f"Translation must be finite, got {tau}")
    modes = tuple((amplitude, frequency, canonical_phase(phase + frequency * tau)) for amplitude, frequency, phase in p.modes)
    return TrigPolynomial(p.constant_term, modes)


def ap_add_constant(p: TrigPolynomial, shift: float) -> TrigPolynomial:
    return TrigPolynomial(p.constant_term + shift, p.modes)


########################
## TEXT SERIALIZATION ##
########################

_number_pattern = re.compile(
    r"^(?P<coef>[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?)?\s*\*?\s*(?P<name>pi|sqrt\((?P<arg>[^)]+)\))?$"
)


def parse_number(text: str) -> float:
    """
    Parse a real number written as a decimal, `pi`, `k*pi`, `sqrt(k)` or `k*sqrt(m)`
    """
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    negative = text.startswith("-")
    body = text[1:].strip() if negative else text
    match = _number_pattern.match(body)
    if not match or not match.group("name"):
        raise ValueError(f"Could not parse number '{text}'")
    coefficient = float(match.group("coef")) if match.group("coef") else 1.0
    if match.group("name") == "pi":
        value = coefficient * math.pi
    else:
        argument = parse_number(match.group("arg"))
        if argument < 0:
            raise ValueError(f"Negative square root in '{text}'")
        value = coefficient * math.sqrt(argument)
    return -value if negative else value


def parse_trig_polynomial(text: str) -> TrigPolynomial:
    """
    Read the `c0 | amp:freq:phase, amp:freq:phase, ...` text form
        Inputs: text, e.g. "1 | 0.5:1:0, 0.3:sqrt(2):0"
        Outputs: TrigPolynomial
    """
    head, _, tail = text.partition("|")
    if not head.strip():
        raise ValueError(f"Missing constant term in '{text}'")
    constant_term = parse_number(head)
    modes = []
    for chunk in tail.split(","):
        if not chunk.strip():
            continue
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ValueError(f"Mode '{chunk.strip()}' must be written as amp:freq:phase")
        modes.append(tuple(parse_number(part) for part in parts))
    return TrigPolynomial(constant_term, tuple(modes))


def format_trig_polynomial(p: TrigPolynomial) -> str:
    """
    Write p in the `c0 | amp:freq:phase, ...` form with round-trip exact floats
    """
    text = repr(p.constant_term)
    if p.modes:
        text += " | " + ", ".join(f"{amp!r}:{freq!r}:{phase!r}" for amp, freq, phase in p.modes)
    return text


####################
## REACTION MODEL ##
####################


@dataclass(frozen=True)
class ReactionModel:
    """
    KPP nonlinearity f(t, u) = a(t) - b(t) u
        a: intrinsic growth (1/time)
        b: self-limitation (1/(time * density))
    """

    a: TrigPolynomial
    b: TrigPolynomial

    @property
    def m_bound(self) -> float:
        """
        Carrying capacity bound sup a / inf b; infinite when inf b <= 0
        """
        inf_b = ap_bounds(self.b)[0]
        sup_a = ap_bounds(self.a)[1]
        if inf_b <= 0:
            return math.inf
        return max(sup_a, 0.0) / inf_b

    @property
    def sup_abs_a(self) -> float:
        inf_a, sup_a = ap_bounds(self.a)
        return max(abs(inf_a), abs(sup_a))


def growth_rate(m: ReactionModel, t, u):
    """
    f(t, u) = a(t) - b(t) u
    """
    return ap_eval(m.a, t) - ap_eval(m.b, t) * u


def reaction(m: ReactionModel, t, u):
    """
    u f(t, u), vectorized in u
    """
    return u * growth_rate(m, t, u)


def fisher_model(a: float = 1.0, b: float = 1.0) -> ReactionModel:
    return ReactionModel(TrigPolynomial(a), TrigPolynomial(b))


def shift_growth(m: ReactionModel, epsilon: float) -> ReactionModel:
    """
    Model with f(t, u) + epsilon, realized as a(t) + epsilon
    """
    return ReactionModel(ap_add_constant(m.a, epsilon), m.b)


def translate_model(m: ReactionModel, tau: float) -> ReactionModel:
    """
    Hull element f(. + tau, .)
    """
    return ReactionModel(ap_translate(m.a, tau), ap_translate(m.b, tau))


@dataclass(frozen=True)
class HypothesisReport:
    h1_ok: bool
    h3_ok: bool
    inf_b_sampled: float
    inf_b_analytic: float
    mean_a: float
    m_bound: float
    messages: tuple = ()

    @property
    def ok(self) -> bool:
        return self.h1_ok and self.h3_ok


@lru_cache(maxsize=64)
def check_hypotheses(m: ReactionModel) -> HypothesisReport:
    """
    Check the monostable hypotheses on a ReactionModel. Failures are reported, not raised.
        (H1): inf_t b(t) > 0, so f_u < 0 and f(t, u) < 0 beyond M = sup a / inf b
        (H3): mean(a) > 0
    The analytic bound c0 - sum |amplitude| decides (H1); the dense sample is reported alongside.
    """
    inf_b_analytic = ap_bounds(m.b)[0]
    samples = np.arange(0.0, HYPOTHESIS_SAMPLE_WINDOW, HYPOTHESIS_SAMPLE_STEP)
    inf_b_sampled = float(np.min(ap_eval(m.b, samples)))
    mean_a = ap_mean(m.a)

    messages = []
    h1_ok = inf_b_analytic > 0
    if not h1_ok:
        messages.append(f"(H1) fails: inf b >= {inf_b_analytic} is not positive (sampled inf {inf_b_sampled})")
    h3_ok = mean_a > 0
    if not h3_ok:
        messages.append(f"(H3) fails: mean(a) = {mean_a} is not positive")

    return HypothesisReport(
        h1_ok=h1_ok,
        h3_ok=h3_ok,
        inf_b_sampled=inf_b_sampled,
        inf_b_analytic=inf_b_analytic,
        mean_a=mean_a,
        m_bound=m.m_bound,
        messages=tuple(messages),
    )


def require_hypotheses(m: ReactionModel) -> HypothesisReport:
    """
    Raise ValueError with the failing checks when a model violates (H1) or (H3)
    """
    report = check_hypotheses(m)
    if not report.ok:
        raise ValueError("Reaction model rejected: " + "; ".join(report.messages))
    return report
