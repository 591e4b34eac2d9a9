import math

import pytest

from spreading_utils.forcing_utils import TrigPolynomial, parse_trig_polynomial
from spreading_utils.validate_utils import ConfigError, constraint_message, convert_value, cross_field_messages


def filled(kind, a="1", b="1", **numerics):
    defaults = {
        "N": 400, "dt": 0.01, "X": 40.0, "h0": 2.0, "g0": -1.0, "horizon": 30.0, "window": None, "l": 2.0,
        "semiwave_horizon": 150.0,
    }
    defaults.update(numerics)
    return {
        "experiment": {"kind": kind},
        "model": {"a": parse_trig_polynomial(a), "b": parse_trig_polynomial(b)},
        "numerics": defaults,
    }


class TestConvertValue:
    def test_scalars(self):
        assert convert_value(" 12 ", "int") == 12
        assert convert_value("2*pi", "float") == pytest.approx(2 * math.pi)
        assert convert_value("name", "str") == "name"

    def test_lists_and_flags(self):
        assert convert_value("1, sqrt(4),", "float_list") == (1.0, 2.0)
        assert convert_value("Yes", "bool") is True
        assert convert_value("off", "bool") is False

    def test_trig(self):
        assert convert_value("2 | 1:1:0", "trig") == TrigPolynomial(2.0, ((1.0, 1.0, 0.0),))

    @pytest.mark.parametrize(
        "raw, value_type, message",
        [("1.5", "int", "not an integer"), ("", "float_list", "empty list"), ("maybe", "bool", "not a boolean")],
    )
    def test_rejects(self, raw, value_type, message):
        with pytest.raises(ValueError, match=message):
            convert_value(raw, value_type)


class TestConstraintMessage:
    def test_satisfied(self):
        assert constraint_message("dt", 0.1, "positive") is None
        assert constraint_message("kind", "semiwave", ["semiwave"]) is None
        assert constraint_message("window", None, "positive") is None
        assert constraint_message("bracket", (0.1, 2.0), "bracket") is None

    def test_violations(self):
        assert constraint_message("gamma", -1.0, "nonnegative") == "gamma must be >= 0, got -1.0"
        assert constraint_message("tolerance", 2.0, "unit_interval") == "tolerance must lie in (0, 1], got 2.0"
        assert constraint_message("levels", 2, "at_least_3") == "levels must be >= 3, got 2"
        assert constraint_message("mu", (1.0, -2.0), "positive") == "mu must be > 0, got (1.0, -2.0)"
        assert "two values" in constraint_message("bracket", (2.0, 1.0), "bracket")
        assert "finite" in constraint_message("dt", math.inf, "positive")


class TestCrossFieldMessages:
    def test_valid_config(self):
        assert cross_field_messages(filled("fb_single")) == []

    def test_hypotheses(self):
        messages = cross_field_messages(filled("semiwave", a="-1"))
        assert ("model", "a", "(H3) fails: mean(a) = -1.0 is not positive") in messages

    def test_lyapunov_accepts_zero_growth(self):
        assert cross_field_messages(filled("lyapunov_validation", a="0", dt=None, N=400)) == []

    def test_step_guards(self):
        messages = [key for _, key, _ in cross_field_messages(filled("fb_single", a="2", dt=0.3))]
        assert messages == ["dt"]
        messages = cross_field_messages(filled("lyapunov_validation", a="0", dt=0.01, N=400, l=2.0))
        assert [key for _, key, _ in messages] == ["dt"]

    def test_front_order(self):
        messages = cross_field_messages(filled("dichotomy_sweep", g0=1.0, h0=1.0))
        assert [key for _, key, _ in messages] == ["g0"]

    def test_window_and_truncation(self):
        messages = cross_field_messages(filled("semiwave", horizon=100.0, window=120.0, X=5.0))
        assert sorted(key for _, key, _ in messages) == ["X", "window"]
        messages = cross_field_messages(filled("speed_consistency", horizon=10.0, window=120.0))
        assert messages == []


class TestConfigError:
    def test_message(self):
        err = ConfigError([(3, "first"), (None, "second")], "run.ini")
        assert str(err) == "first (line 3 of run.ini); second (run.ini)"
        assert err.errors == [(3, "first"), (None, "second")]
        assert isinstance(err, ValueError)
