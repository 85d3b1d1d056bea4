"""Element expressions: parsing to an AST, printing, and lowering into L_Q.

Grammar (see grammar/element.lark)::

    expr   := ["+"|"-"] term (("+"|"-") term)*
    term   := [coeff "*"] factor ("." factor)*  |  coeff
    factor := name | name "*"
    coeff  := rational | rational "i" | "(" [sign] rational sign rational "i" ")"

A coefficient on its own is that multiple of the unit. Products that do
not compose are accepted and evaluate to 0.
"""

from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Tuple

import structlog
from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedInput, UnexpectedToken, VisitError
from pydantic import BaseModel, ConfigDict, Field

from lp_graph_algebras.errors import GraphError, ParseError, PreconditionError
from lp_graph_algebras.lpa import LeavittPathAlgebra, LpaElement
from lp_graph_algebras.quiver import Quiver
from lp_graph_algebras.scalars import ONE, GaussianRational, format_rational

logger = structlog.get_logger(__name__)

GRAMMAR_PATH = Path(__file__).parent / "grammar" / "element.lark"


class Factor(BaseModel):
    """A vertex or edge name, starred for the ghost edge."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., description="Vertex or edge id")
    star: bool = Field(default=False, description="Ghost edge e*")


class Term(BaseModel):
    """Coefficient times a dotted product; no factors means a multiple of the unit."""

    model_config = ConfigDict(frozen=True)

    re: str = Field(default="1", description="Real part as p/q")
    im: str = Field(default="0", description="Imaginary part as p/q")
    factors: Tuple[Factor, ...] = Field(default=(), description="Factors left to right")

    @property
    def coefficient(self) -> GaussianRational:
        return GaussianRational(self.re, self.im)


class ElementExpr(BaseModel):
    """Parsed element expression."""

    model_config = ConfigDict(frozen=True)

    terms: Tuple[Term, ...] = Field(default=(), description="Summands in source order")

    def names(self) -> List[str]:
        return sorted({f.name for t in self.terms for f in t.factors})


def _term(coefficient: GaussianRational, factors: List[Factor]) -> Term:
    re, im = coefficient.to_pair()
    return Term(re=re, im=im, factors=tuple(factors))


class _ExprBuilder(Transformer):
    """Builds the AST bottom-up, checking names against a graph when one is given."""

    def __init__(self, text: str, quiver: Optional[Quiver] = None) -> None:
        super().__init__()
        self.text = text
        self.quiver = quiver

    def _rational(self, token: Token, value: Optional[str] = None) -> Fraction:
        try:
            return Fraction(token if value is None else value)
        except (ValueError, ZeroDivisionError):
            raise ParseError(
                f"Malformed coefficient {str(token)!r}",
                position=token.start_pos or 0,
                span=(token.start_pos or 0, token.end_pos or 0),
                text=self.text,
            ) from None

    def real(self, items: list) -> GaussianRational:
        return GaussianRational(self._rational(items[0]))

    def imaginary(self, items: list) -> GaussianRational:
        token = items[0]
        return GaussianRational(0, self._rational(token, str(token)[:-1]))

    def complex(self, items: list) -> GaussianRational:
        if len(items) == 4:
            lead, re_token, sign, im_token = items
        else:
            lead, (re_token, sign, im_token) = None, items
        re = self._rational(re_token)
        im = self._rational(im_token, str(im_token)[:-1])
        if lead == "-":
            re = -re
        if sign == "-":
            im = -im
        return GaussianRational(re, im)

    def factor(self, items: list) -> Factor:
        name = items[0]
        if self.quiver is not None and not (self.quiver.has_vertex(name) or self.quiver.has_edge(name)):
            raise ParseError(
                f"Unknown name {str(name)!r}",
                position=name.start_pos or 0,
                span=(name.start_pos or 0, name.end_pos or 0),
                text=self.text,
            )
        return Factor(name=str(name), star=len(items) == 2)

    def product(self, items: list) -> List[Factor]:
        return list(items)

    def scaled(self, items: list) -> Tuple[GaussianRational, List[Factor]]:
        return items[0], items[2]

    def constant(self, items: list) -> Tuple[GaussianRational, List[Factor]]:
        return items[0], []

    def plain(self, items: list) -> Tuple[GaussianRational, List[Factor]]:
        return ONE, items[0]

    def signed_term(self, items: list) -> Term:
        coefficient, factors = items[-1]
        if len(items) == 2 and items[0] == "-":
            coefficient = -coefficient
        return _term(coefficient, factors)

    def start(self, items: list) -> ElementExpr:
        terms = [items[0]]
        for sign, (coefficient, factors) in zip(items[1::2], items[2::2]):
            terms.append(_term(-coefficient if sign == "-" else coefficient, factors))
        return ElementExpr(terms=tuple(terms))


@lru_cache(maxsize=1)
def get_parser() -> Lark:
    return Lark(GRAMMAR_PATH.read_text(encoding="utf-8"), parser="lalr")


def _syntax_error(error: UnexpectedInput, text: str) -> ParseError:
    position = error.pos_in_stream if error.pos_in_stream is not None and error.pos_in_stream >= 0 else len(text)
    if isinstance(error, UnexpectedCharacters):
        message = f"Unexpected character {text[position]!r}"
        span = (position, position + 1)
    elif isinstance(error, UnexpectedToken) and error.token.type != "$END":
        token = error.token
        message = f"Unexpected {str(token)!r}, expected one of {sorted(error.expected)}"
        span = (position, position + max(1, len(str(token))))
    else:
        message = "Unexpected end of expression"
        span = (position, position + 1)
    return ParseError(message, position=position, span=span, text=text)


def parse_expr(text: str, quiver: Optional[Quiver] = None) -> ElementExpr:
    """Parse an element expression.

    Args:
        text: Source text
        quiver: When given, every name must be a vertex or edge of it

    Returns:
        The AST

    Raises:
        ParseError: On a syntax error, malformed coefficient or unknown name
    """
    try:
        tree = get_parser().parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(e, text) from None
    try:
        expr = _ExprBuilder(text, quiver).transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, ParseError):
            raise e.orig_exc from None
        raise
    logger.debug("Parsed element expression", terms=len(expr.terms))
    return expr


def _format_term(term: Term) -> Tuple[bool, str]:
    """(negative, body) so the sign can be pulled into the joining operator."""
    c = term.coefficient
    product = ".".join(f"{f.name}*" if f.star else f.name for f in term.factors)
    if c.im == 0:
        negative = c.re < 0
        magnitude = abs(c.re)
        if magnitude == 1 and product:
            return negative, product
        scalar = format_rational(magnitude)
    elif c.re == 0:
        negative = c.im < 0
        scalar = f"{format_rational(abs(c.im))}i"
    else:
        negative = False
        sign = "+" if c.im > 0 else "-"
        scalar = f"({format_rational(c.re)}{sign}{format_rational(abs(c.im))}i)"
    return negative, f"{scalar}*{product}" if product else scalar


def format_expr(expr: ElementExpr) -> str:
    """Print an AST back to source text; parse_expr(format_expr(e)) == e."""
    if not expr.terms:
        return "0"
    parts: List[str] = []
    for index, term in enumerate(expr.terms):
        negative, body = _format_term(term)
        if index == 0:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f" - {body}" if negative else f" + {body}")
    return "".join(parts)


def lower(expr: ElementExpr, algebra: LeavittPathAlgebra) -> LpaElement:
    """Evaluate the AST to a normal-form element of the algebra.

    Raises:
        GraphError: If a name is not a vertex or edge of the algebra's graph
    """
    quiver = algebra.quiver
    total = algebra.zero()
    for term in expr.terms:
        if not term.factors:
            value = algebra.unit()
        else:
            value = None
            for factor in term.factors:
                if quiver.has_vertex(factor.name):
                    x = algebra.vertex(factor.name)
                elif quiver.has_edge(factor.name):
                    x = algebra.ghost(factor.name) if factor.star else algebra.edge(factor.name)
                else:
                    raise GraphError(f"Unknown name {factor.name!r} in graph {quiver.name}")
                value = x if value is None else algebra.mul(value, x)
        total = algebra.add(total, algebra.scalar_mul(term.coefficient, value))
    return total


def parse_element(text: str, quiver: Quiver, algebra: Optional[LeavittPathAlgebra] = None) -> LpaElement:
    """Parse text over the graph and lower it into L_Q."""
    expr = parse_expr(text, quiver)
    return lower(expr, algebra or LeavittPathAlgebra(quiver))


def parse_exponent(text: str) -> float:
    """Parse p as an exact rational or decimal string ("3", "3/2", "1.5").

    Raises:
        ParseError: If the literal is malformed
        PreconditionError: If p < 1
    """
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"Invalid exponent {text!r}", position=0, span=(0, len(text)), text=text) from None
    if value < 1:
        raise PreconditionError(f"Exponent p must be at least 1, got {format_rational(value)}")
    return float(value)
