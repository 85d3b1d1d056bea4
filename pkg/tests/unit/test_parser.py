"""Unit tests for element expression parsing."""

from fractions import Fraction

import numpy as np
import pytest

from lp_graph_algebras.errors import GraphError, ParseError, PreconditionError
from lp_graph_algebras.parser import (
    ElementExpr,
    Factor,
    Term,
    format_expr,
    lower,
    parse_element,
    parse_exponent,
    parse_expr,
)
from lp_graph_algebras.scalars import GaussianRational


class TestParseExpr:
    """Test parsing text into the AST."""

    def test_single_vertex(self, a2):
        """Test a lone vertex name."""
        expr = parse_expr("v", a2)
        assert expr == ElementExpr(terms=(Term(factors=(Factor(name="v"),)),))

    def test_signed_sum(self):
        """Test signs, coefficients and ghost factors."""
        expr = parse_expr("-v + 2*e.e* - 3/4*w")
        assert [(t.re, t.im) for t in expr.terms] == [("-1", "0"), ("2", "0"), ("-3/4", "0")]
        assert expr.terms[1].factors == (Factor(name="e"), Factor(name="e", star=True))
        assert expr.names() == ["e", "v", "w"]

    def test_complex_coefficients(self):
        """Test imaginary and parenthesized complex coefficients."""
        expr = parse_expr("2i*e + (1/2-3i)*f + (-1+1i)*g")
        assert [(t.re, t.im) for t in expr.terms] == [("0", "2"), ("1/2", "-3"), ("-1", "1")]

    def test_decimal_coefficient(self):
        """Test that decimals become exact rationals."""
        expr = parse_expr("0.25*v")
        assert expr.terms[0].re == "1/4"

    def test_constant_term(self):
        """Test that a coefficient alone has no factors."""
        expr = parse_expr("5")
        assert expr.terms == (Term(re="5"),)

    def test_whitespace(self):
        """Test that whitespace is ignored."""
        assert parse_expr("  2 * e . e*  -v ") == parse_expr("2*e.e* - v")


class TestParseErrors:
    """Test error positions and rendering."""

    def test_unknown_name(self, a2):
        """Test that names are checked against the graph."""
        with pytest.raises(ParseError, match="Unknown name 'x'") as info:
            parse_expr("v + x", a2)
        assert info.value.position == 4
        assert info.value.span == (4, 5)
        assert info.value.render() == "Unknown name 'x' at position 4\n  v + x\n      ^"

    def test_unexpected_character(self):
        """Test an illegal character."""
        with pytest.raises(ParseError, match="Unexpected character") as info:
            parse_expr("v $ w")
        assert info.value.position == 2

    def test_unexpected_end(self):
        """Test a dangling operator."""
        with pytest.raises(ParseError, match="Unexpected end"):
            parse_expr("v +")

    def test_empty_text(self):
        """Test that the empty string is rejected."""
        with pytest.raises(ParseError):
            parse_expr("")

    def test_malformed_coefficient(self):
        """Test a zero denominator."""
        with pytest.raises(ParseError, match="Malformed coefficient '1/0'"):
            parse_expr("1/0*v")

    def test_render_without_text(self):
        """Test rendering when no source text is attached."""
        error = ParseError("Bad", position=3)
        assert error.span == (3, 4)
        assert error.render() == "Bad at position 3"


class TestFormat:
    """Test printing the AST back to text."""

    @pytest.mark.parametrize(
        "text",
        [
            "v",
            "-v",
            "2*e.e* - v",
            "2*e.e* - v + (1/2-3i)*e + 3i*w + 5",
            "-3/4*e* + w",
        ],
    )
    def test_format_is_canonical(self, text):
        """Test that canonical text prints back unchanged and reparses to the same AST."""
        expr = parse_expr(text)
        assert format_expr(expr) == text
        assert parse_expr(format_expr(expr)) == expr

    def test_generated_round_trip(self):
        """Test print-then-parse on 100 generated expressions."""
        rng = np.random.default_rng(5)
        parts = [Fraction(0), Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 2), Fraction(-3, 4), Fraction(5, 3)]
        factors = [
            Factor(name="v"),
            Factor(name="w"),
            Factor(name="e"),
            Factor(name="e", star=True),
            Factor(name="f_1", star=True),
        ]
        for _ in range(100):
            terms = []
            for _ in range(int(rng.integers(1, 5))):
                re, im = GaussianRational(
                    parts[int(rng.integers(len(parts)))], parts[int(rng.integers(len(parts)))]
                ).to_pair()
                chosen = rng.integers(len(factors), size=int(rng.integers(0, 4)))
                terms.append(Term(re=re, im=im, factors=tuple(factors[int(i)] for i in chosen)))
            expr = ElementExpr(terms=tuple(terms))
            assert parse_expr(format_expr(expr)) == expr

    def test_format_empty(self):
        """Test the empty sum."""
        assert format_expr(ElementExpr()) == "0"


class TestLowering:
    """Test evaluation into the algebra."""

    def test_relation_reduces(self, a2, a2_algebra):
        """Test 2 e e^* - v = v in L(A2)."""
        assert parse_element("2*e.e* - v", a2, a2_algebra) == a2_algebra.vertex("v")

    def test_non_composable_product(self, r2):
        """Test a^* b = 0 in L(R2)."""
        assert str(parse_element("a*.b", r2)) == "0"

    def test_constant_is_unit_multiple(self, a2, a2_algebra):
        """Test that a bare coefficient is a multiple of the unit."""
        expected = a2_algebra.vertex("v") * 5 + a2_algebra.vertex("w") * 5
        assert parse_element("5", a2, a2_algebra) == expected

    def test_lower_unknown_name(self, a2_algebra):
        """Test lowering an AST parsed without a graph."""
        with pytest.raises(GraphError, match="Unknown name"):
            lower(parse_expr("x"), a2_algebra)


class TestExponent:
    """Test exponent literals."""

    @pytest.mark.parametrize("text,expected", [("3", 3.0), ("3/2", 1.5), ("1.5", 1.5), (" 4 ", 4.0), ("1", 1.0)])
    def test_valid(self, text, expected):
        """Test integer, rational and decimal exponents."""
        assert parse_exponent(text) == expected

    def test_below_one(self):
        """Test that p < 1 is a precondition violation."""
        with pytest.raises(PreconditionError, match="at least 1"):
            parse_exponent("1/2")

    def test_malformed(self):
        """Test that garbage is a parse error."""
        with pytest.raises(ParseError, match="Invalid exponent"):
            parse_exponent("three")
