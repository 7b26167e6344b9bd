"""Tests for exact cost values."""

from fractions import Fraction

import pytest

from app.exceptions import ExactArithmeticError, InputError
from app.services.exact import (
    INF,
    Infinity,
    exact,
    exact_sum,
    format_exact,
    is_infinite,
    marginal,
)


# =============================================================================
# PARSING TESTS
# =============================================================================


class TestExactParsing:
    """Tests for turning file values into exact values."""

    def test_parses_integers_and_fractions(self):
        """Test ints, "p/q" strings and Fractions."""
        assert exact(3) == Fraction(3)
        assert exact("1/2") == Fraction(1, 2)
        assert exact(" -4/6 ") == Fraction(-2, 3)
        assert exact(Fraction(5, 7)) == Fraction(5, 7)

    def test_parses_infinity(self):
        """Test "inf" parses to the singleton."""
        assert exact("inf") is INF
        assert exact("+INF") is INF
        assert Infinity() is INF

    @pytest.mark.parametrize("value", [0.5, "0.5", "1e3", True, None, "abc", "1/0"])
    def test_rejects_inexact_values(self, value):
        """Test floats, decimals and garbage are refused."""
        with pytest.raises(InputError):
            exact(value)


# =============================================================================
# ARITHMETIC TESTS
# =============================================================================


class TestInfinityArithmetic:
    """Tests for +inf arithmetic and ordering."""

    def test_ordering(self):
        """Test inf is above every rational and equal to itself."""
        assert Fraction(10**12) < INF
        assert INF > Fraction(-1)
        assert INF <= INF
        assert not INF < INF
        assert INF == exact("inf")
        assert INF != Fraction(0)

    def test_addition_absorbs(self):
        """Test adding anything finite keeps inf."""
        assert INF + Fraction(1) is INF
        assert Fraction(1) + INF is INF

    def test_undefined_differences(self):
        """Test inf - inf and finite - inf raise."""
        with pytest.raises(ExactArithmeticError):
            INF - INF
        with pytest.raises(ExactArithmeticError):
            Fraction(1) - INF

    def test_floats_are_not_comparable(self):
        """Test comparisons against floats raise."""
        with pytest.raises(TypeError):
            INF < 1.5

    def test_sum_short_circuits(self):
        """Test exact_sum returns inf as soon as one term is infinite."""
        assert exact_sum([Fraction(1, 2), Fraction(1, 3)]) == Fraction(5, 6)
        assert exact_sum([Fraction(1, 2), INF, Fraction(1)]) is INF
        assert exact_sum([]) == 0

    def test_marginal(self):
        """Test derivatives across the capacity boundary."""
        assert marginal(Fraction(1), Fraction(1, 3)) == Fraction(2, 3)
        assert marginal(INF, Fraction(1)) is INF
        assert marginal(INF, INF) is INF
        with pytest.raises(ExactArithmeticError):
            marginal(Fraction(1), INF)


class TestFormatting:
    """Tests for the report encoding of exact values."""

    def test_format(self):
        """Test "p/q", "p" and "inf"."""
        assert format_exact(Fraction(4, 3)) == "4/3"
        assert format_exact(Fraction(2)) == "2"
        assert format_exact(INF) == "inf"
        assert is_infinite(INF)
        assert not is_infinite(Fraction(0))
