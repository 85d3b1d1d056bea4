"""Exact symbolic arithmetic in the Leavitt path algebra L_Q.

Elements are sparse maps from monomials alpha beta^* to Gaussian rationals,
kept in the normal form determined by a choice of special edge at each
regular vertex: no monomial has both halves ending in the special edge of
their common penultimate vertex.
"""

from collections import defaultdict
from typing import (
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import structlog

from lp_graph_algebras.cache import Cache
from lp_graph_algebras.config import get_config
from lp_graph_algebras.errors import GraphError, PreconditionError
from lp_graph_algebras.models import TermSpec
from lp_graph_algebras.quiver import (
    Path,
    Quiver,
    concat,
    extends,
    matrix_head_edge,
    matrix_head_vertex,
    paths_of_length,
    paths_up_to,
    strip_prefix,
    vertex_path,
)
from lp_graph_algebras.scalars import ONE, GaussianRational, Number

logger = structlog.get_logger(__name__)

COEFFICIENT_GRID = [
    GaussianRational(1),
    GaussianRational(-1),
    GaussianRational(2),
    GaussianRational(-2),
    GaussianRational("1/2"),
    GaussianRational("-1/2"),
    GaussianRational(0, 1),
    GaussianRational(0, -1),
    GaussianRational(1, 1),
    GaussianRational(1, -1),
]


class Monomial(NamedTuple):
    """alpha beta^* with r(alpha) = r(beta)."""

    alpha: Path
    beta: Path

    @property
    def degree(self) -> int:
        return self.alpha.length - self.beta.length

    @property
    def vertex(self) -> str:
        return self.alpha.dst

    def star(self) -> "Monomial":
        return Monomial(self.beta, self.alpha)

    def is_idempotent(self) -> bool:
        return self.alpha == self.beta


def make_monomial(alpha: Path, beta: Path) -> Monomial:
    if alpha.dst != beta.dst:
        raise GraphError(f"Range mismatch in {alpha.label()}({beta.label()})*")
    return Monomial(alpha, beta)


def mono_mul(first: Monomial, second: Monomial) -> Optional[Monomial]:
    """Product in the inverse semigroup S(Q); None stands for 0."""
    alpha, beta = first
    gamma, delta = second
    if extends(gamma, beta):
        return Monomial(concat(alpha, strip_prefix(gamma, beta)), delta)
    if extends(beta, gamma):
        return Monomial(alpha, concat(delta, strip_prefix(beta, gamma)))
    return None


class Block(NamedTuple):
    """One matrix block of (L_Q)_{0,n}, indexed by paths into its vertex."""

    paths: List[Path]
    matrix: np.ndarray


Terms = Dict[Monomial, GaussianRational]


class LpaElement:
    """An element of L_Q in normal form."""

    __slots__ = ("algebra", "_terms")

    def __init__(self, algebra: "LeavittPathAlgebra", terms: Terms) -> None:
        self.algebra = algebra
        self._terms = {m: c for m, c in terms.items() if not c.is_zero()}

    @property
    def terms(self) -> Terms:
        return dict(self._terms)

    def items(self) -> List[Tuple[Monomial, GaussianRational]]:
        """Terms in deterministic order."""
        return sorted(self._terms.items(), key=lambda item: self.algebra.sort_key(item[0]))

    def coefficient(self, monomial: Monomial) -> GaussianRational:
        return self._terms.get(monomial, GaussianRational(0))

    def is_zero(self) -> bool:
        return not self._terms

    def max_length(self) -> int:
        return max((max(m.alpha.length, m.beta.length) for m in self._terms), default=0)

    def __add__(self, other: "LpaElement") -> "LpaElement":
        return self.algebra.add(self, other)

    def __neg__(self) -> "LpaElement":
        return self.algebra.scalar_mul(GaussianRational(-1), self)

    def __sub__(self, other: "LpaElement") -> "LpaElement":
        return self.algebra.add(self, -other)

    def __mul__(self, other: Union["LpaElement", Number]) -> "LpaElement":
        if isinstance(other, LpaElement):
            return self.algebra.mul(self, other)
        return self.algebra.scalar_mul(other, self)

    def __rmul__(self, other: Number) -> "LpaElement":
        return self.algebra.scalar_mul(other, self)

    def star(self) -> "LpaElement":
        return self.algebra.involution(self)

    def grade_decompose(self) -> Dict[int, "LpaElement"]:
        return self.algebra.grade_decompose(self)

    def to_terms(self) -> List[TermSpec]:
        """JSON-ready term list."""
        result = []
        for m, c in self.items():
            re, im = c.to_pair()
            result.append(
                TermSpec(
                    alpha=list(m.alpha.edges),
                    beta=list(m.beta.edges),
                    vertex=m.vertex,
                    re=re,
                    im=im,
                )
            )
        return result

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LpaElement):
            return NotImplemented
        return self.algebra.equals(self, other)

    __hash__ = None  # type: ignore[assignment]

    def __str__(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"LpaElement({self!s})"


def format_monomial(monomial: Monomial) -> str:
    """Dotted factors: alpha's edges then the ghosts of beta reversed."""
    factors = list(monomial.alpha.edges) + [f"{e}*" for e in reversed(monomial.beta.edges)]
    return ".".join(factors) if factors else monomial.vertex


def format_element(x: LpaElement) -> str:
    if x.is_zero():
        return "0"
    parts = []
    for m, c in x.items():
        word = format_monomial(m)
        if c == ONE:
            text = word
        elif c == GaussianRational(-1):
            text = f"-{word}"
        else:
            text = f"{c}*{word}"
        if parts and not text.startswith("-"):
            text = f"+{text}"
        parts.append(text)
    return "".join(parts)


class LeavittPathAlgebra:
    """L_Q over Q(i) with a fixed special edge at each regular vertex."""

    def __init__(
        self,
        quiver: Quiver,
        special_edges: Optional[Dict[str, str]] = None,
        cohn: Optional[bool] = None,
        cache: Optional[Cache] = None,
    ) -> None:
        """Set up arithmetic over a quiver.

        Args:
            quiver: The graph Q
            special_edges: Explicit special edge per regular vertex; defaults
                follow the configured first/last declared edge
            cohn: Skip CK2 rewriting and compute in the Cohn algebra
            cache: Memo for monomial reductions
        """
        config = get_config()
        self.quiver = quiver
        self.cohn = config.algebra.cohn if cohn is None else cohn
        self.logger = logger.bind(component="lpa", graph=quiver.name)
        self.special_edges = self._choose_special_edges(
            special_edges or {}, config.algebra.special_edge
        )
        self._cache = cache or Cache(config.cache, name=f"lpa:{quiver.name}")
        # Everything the rewrite reads; caches can be shared between algebras.
        self._memo_key = (
            quiver.name,
            tuple(quiver.vertices),
            tuple((e, quiver.s(e), quiver.r(e)) for e in quiver.edge_names),
            tuple(sorted(self.special_edges.items())),
            self.cohn,
        )

    def _choose_special_edges(self, explicit: Dict[str, str], rule: str) -> Dict[str, str]:
        choice: Dict[str, str] = {}
        for v in self.quiver.vertices:
            out = self.quiver.out_edges(v)
            if not out:
                continue
            if v in explicit:
                edge = explicit[v]
                if self.quiver.s(edge) != v:
                    raise GraphError(f"Special edge {edge} does not start at {v}")
                choice[v] = edge
            else:
                choice[v] = out[0] if rule == "first" else out[-1]
        unknown = set(explicit) - set(choice)
        if unknown:
            raise GraphError(f"Special edges given for non-regular vertices: {sorted(unknown)}")
        return choice

    # Ordering

    def sort_key(self, monomial: Monomial) -> Tuple[int, ...]:
        q = self.quiver
        alpha, beta = monomial
        return (
            alpha.length + beta.length,
            alpha.length,
            *[q.edge_position(e) for e in alpha.edges],
            -1,
            *[q.edge_position(e) for e in beta.edges],
            -1,
            q.vertex_position(monomial.vertex),
        )

    # Constructors

    def zero(self) -> LpaElement:
        return LpaElement(self, {})

    def vertex(self, v: str) -> LpaElement:
        p = self.quiver.vertex_path(v)
        return LpaElement(self, {Monomial(p, p): ONE})

    def unit(self) -> LpaElement:
        """Sum of all vertices."""
        terms = {}
        for v in self.quiver.vertices:
            p = vertex_path(v)
            terms[Monomial(p, p)] = ONE
        return LpaElement(self, terms)

    def edge(self, e: str) -> LpaElement:
        return self.monomial(self.quiver.path([e]), vertex_path(self.quiver.r(e)))

    def ghost(self, e: str) -> LpaElement:
        return self.monomial(vertex_path(self.quiver.r(e)), self.quiver.path([e]))

    def monomial(self, alpha: Path, beta: Path, coeff: Number = 1) -> LpaElement:
        return self.normal_form({make_monomial(alpha, beta): GaussianRational.coerce(coeff)})

    def path_element(self, edges: Sequence[str], start: Optional[str] = None) -> LpaElement:
        p = self.quiver.path(edges, start=start)
        return self.monomial(p, vertex_path(p.dst))

    def idempotent(self, alpha: Path) -> LpaElement:
        """alpha alpha^*."""
        return self.monomial(alpha, alpha)

    # Normal form

    def is_reducible(self, monomial: Monomial) -> bool:
        alpha, beta = monomial
        if self.cohn or not alpha.edges or not beta.edges:
            return False
        last = alpha.edges[-1]
        return beta.edges[-1] == last and self.special_edges.get(self.quiver.s(last)) == last

    def rewrite_once(self, monomial: Monomial) -> Terms:
        """One CK2 rewrite at the outermost position of a reducible monomial."""
        if not self.is_reducible(monomial):
            return {monomial: ONE}
        alpha, beta = monomial
        special = alpha.edges[-1]
        v = self.quiver.s(special)
        head_a = Path(alpha.src, alpha.edges[:-1], v)
        head_b = Path(beta.src, beta.edges[:-1], v)
        result: Terms = {Monomial(head_a, head_b): ONE}
        for f in self.quiver.out_edges(v):
            if f == special:
                continue
            r = self.quiver.r(f)
            result[Monomial(
                Path(head_a.src, head_a.edges + (f,), r),
                Path(head_b.src, head_b.edges + (f,), r),
            )] = GaussianRational(-1)
        return result

    def _reduce(self, monomial: Monomial) -> Tuple[Tuple[Monomial, GaussianRational], ...]:
        def compute() -> Tuple[Tuple[Monomial, GaussianRational], ...]:
            if not self.is_reducible(monomial):
                return ((monomial, ONE),)
            acc: Dict[Monomial, GaussianRational] = defaultdict(GaussianRational)
            for m, c in self.rewrite_once(monomial).items():
                for n, d in self._reduce(m):
                    acc[n] = acc[n] + c * d
            return tuple((m, c) for m, c in acc.items() if not c.is_zero())

        return self._cache.get_or_compute(("nf", self._memo_key, monomial), compute)

    def normal_form(self, raw: Union[Terms, Iterable[Tuple[Monomial, Number]]]) -> LpaElement:
        """Rewrite a raw linear combination into the canonical basis."""
        pairs = raw.items() if isinstance(raw, dict) else raw
        acc: Dict[Monomial, GaussianRational] = defaultdict(GaussianRational)
        for m, c in pairs:
            coeff = GaussianRational.coerce(c)
            if coeff.is_zero():
                continue
            for n, d in self._reduce(m):
                acc[n] = acc[n] + coeff * d
        return LpaElement(self, acc)

    # Arithmetic

    def _check(self, *elements: LpaElement) -> None:
        for x in elements:
            if x.algebra is not self and x.algebra.quiver != self.quiver:
                raise PreconditionError("Elements belong to different algebras")

    def add(self, x: LpaElement, y: LpaElement) -> LpaElement:
        self._check(x, y)
        acc: Dict[Monomial, GaussianRational] = defaultdict(GaussianRational)
        for m, c in list(x.terms.items()) + list(y.terms.items()):
            acc[m] = acc[m] + c
        return LpaElement(self, acc)

    def scalar_mul(self, scalar: Number, x: LpaElement) -> LpaElement:
        s = GaussianRational.coerce(scalar)
        return LpaElement(self, {m: s * c for m, c in x.terms.items()})

    def mul(self, x: LpaElement, y: LpaElement) -> LpaElement:
        self._check(x, y)
        raw: List[Tuple[Monomial, GaussianRational]] = []
        for m1, c1 in x.terms.items():
            for m2, c2 in y.terms.items():
                product = mono_mul(m1, m2)
                if product is not None:
                    raw.append((product, c1 * c2))
        return self.normal_form(raw)

    def involution(self, x: LpaElement) -> LpaElement:
        """alpha beta^* -> beta alpha^* with conjugated coefficients."""
        return self.normal_form([(m.star(), c.conjugate()) for m, c in x.terms.items()])

    def grade_decompose(self, x: LpaElement) -> Dict[int, LpaElement]:
        parts: Dict[int, Terms] = defaultdict(dict)
        for m, c in x.terms.items():
            parts[m.degree][m] = c
        return {d: LpaElement(self, parts[d]) for d in sorted(parts)}

    def is_zero(self, x: LpaElement) -> bool:
        return x.is_zero()

    def equals(self, x: LpaElement, y: LpaElement) -> bool:
        self._check(x, y)
        return x.terms == y.terms

    # Levels and blocks

    def expand_to_level(self, x: LpaElement, n: int) -> List[Tuple[Path, Path, GaussianRational]]:
        """Rewrite x as a combination of alpha beta^* with |beta| = n exactly."""
        if self.quiver.sinks():
            raise PreconditionError("Level expansion needs a graph without sinks")
        if self.cohn:
            raise PreconditionError("Level expansion uses CK2, unavailable in the Cohn algebra")
        acc: Dict[Tuple[Path, Path], GaussianRational] = defaultdict(GaussianRational)
        order: List[Tuple[Path, Path]] = []
        for m, c in x.items():
            if m.beta.length > n:
                raise PreconditionError(
                    f"Level {n} is below the length of {format_monomial(m)}"
                )
            for gamma in paths_of_length(self.quiver, n - m.beta.length, src=m.vertex):
                key = (concat(m.alpha, gamma), concat(m.beta, gamma))
                if key not in acc:
                    order.append(key)
                acc[key] = acc[key] + c
        return [(a, b, acc[(a, b)]) for a, b in order if not acc[(a, b)].is_zero()]

    def in_level_zero(self, x: LpaElement, n: int) -> bool:
        return all(m.alpha.length == m.beta.length <= n for m in x.terms)

    def block_decompose_0n(self, x: LpaElement, n: int) -> Dict[Tuple[str, int], Block]:
        """Matrix blocks of x in (L_Q)_{0,n}, only the nonzero ones."""
        if not self.in_level_zero(x, n):
            raise PreconditionError(f"Element is not in (L_Q)_(0,{n})")
        if self.cohn:
            raise PreconditionError("Block decomposition uses CK2, unavailable in the Cohn algebra")
        entries: Dict[Tuple[str, int], Dict[Tuple[Path, Path], GaussianRational]] = defaultdict(
            lambda: defaultdict(GaussianRational)
        )

        def expand(alpha: Path, beta: Path, coeff: GaussianRational) -> None:
            v = alpha.dst
            if alpha.length == n or self.quiver.is_sink(v):
                entries[(v, alpha.length)][(alpha, beta)] += coeff
                return
            for e in self.quiver.out_edges(v):
                step = self.quiver.path([e])
                expand(concat(alpha, step), concat(beta, step), coeff)

        for m, c in x.items():
            expand(m.alpha, m.beta, c)

        blocks: Dict[Tuple[str, int], Block] = {}
        for v in self.quiver.vertices:
            for k in range(n + 1):
                cell = entries.get((v, k))
                if not cell or all(c.is_zero() for c in cell.values()):
                    continue
                paths = paths_of_length(self.quiver, k, dst=v)
                index = {p: i for i, p in enumerate(paths)}
                matrix = np.zeros((len(paths), len(paths)), dtype=complex)
                for (a, b), c in cell.items():
                    matrix[index[a], index[b]] += complex(c)
                blocks[(v, k)] = Block(paths, matrix)
        return blocks

    # Enumeration

    def monomials(self, max_length: int) -> List[Monomial]:
        """All alpha beta^* with |alpha|, |beta| <= max_length."""
        paths = paths_up_to(self.quiver, max_length)
        by_range: Dict[str, List[Path]] = defaultdict(list)
        for p in paths:
            by_range[p.dst].append(p)
        result = [Monomial(a, b) for a in paths for b in by_range[a.dst]]
        return sorted(result, key=self.sort_key)

    def basis(self, max_length: int) -> List[Monomial]:
        """Irreducible monomials with both halves of length at most max_length."""
        return [m for m in self.monomials(max_length) if not self.is_reducible(m)]

    # Transport between graphs

    def transport(self, x: LpaElement, target: "LeavittPathAlgebra") -> LpaElement:
        """Read x in a supergraph's algebra through the generator inclusion."""
        q, t = self.quiver, target.quiver
        for v in q.vertices:
            if not t.has_vertex(v):
                raise GraphError(f"Vertex {v} missing from target graph")
        for edge in q.edges:
            if not t.has_edge(edge.name) or t.edge(edge.name) != edge:
                raise GraphError(f"Edge {edge.name} missing from target graph")
        return target.normal_form(list(x.terms.items()))

    def matrix_unit(
        self, target: "LeavittPathAlgebra", n: int, i: int, j: int, x: LpaElement
    ) -> LpaElement:
        """E_{ij} (x) x inside L_{M_nQ}, with v_k <-> E_{k+1,k+1} (x) v."""
        if not (1 <= i <= n and 1 <= j <= n):
            raise PreconditionError(f"Matrix indices must lie in 1..{n}")
        raw = []
        for m, c in x.terms.items():
            left = self._head_path(m.alpha.src, i)
            right = self._head_path(m.beta.src, j)
            raw.append((Monomial(concat(left, m.alpha), concat(right, m.beta)), c))
        return target.normal_form(raw)

    @staticmethod
    def _head_path(v: str, i: int) -> Path:
        """Path v_{i-1} -> ... -> v_0 = v along the matrix head."""
        edges = tuple(matrix_head_edge(v, k) for k in range(i - 1, 0, -1))
        return Path(matrix_head_vertex(v, i - 1), edges, v)

    # Serialization

    def from_terms(self, terms: Iterable[Union[TermSpec, Dict[str, object]]]) -> LpaElement:
        raw = []
        for item in terms:
            spec = item if isinstance(item, TermSpec) else TermSpec(**item)  # type: ignore[arg-type]
            alpha = self.quiver.path(spec.alpha, start=spec.vertex)
            beta = self.quiver.path(spec.beta, start=spec.vertex)
            if alpha.dst != spec.vertex or beta.dst != spec.vertex:
                raise GraphError(f"Term does not range at {spec.vertex}")
            raw.append((make_monomial(alpha, beta), GaussianRational(spec.re, spec.im)))
        return self.normal_form(raw)

    def __repr__(self) -> str:
        kind = "C" if self.cohn else "L"
        return f"LeavittPathAlgebra({kind}_{self.quiver.name})"


def random_element(
    algebra: LeavittPathAlgebra,
    rng: np.random.Generator,
    max_terms: int = 6,
    max_length: int = 3,
) -> LpaElement:
    """Seeded random element with coefficients from a small Gaussian grid."""
    paths = paths_up_to(algebra.quiver, max_length)
    if not paths:
        return algebra.zero()
    by_range: Dict[str, List[Path]] = defaultdict(list)
    for p in paths:
        by_range[p.dst].append(p)
    count = int(rng.integers(1, max_terms + 1))
    raw = []
    for _ in range(count):
        alpha = paths[int(rng.integers(len(paths)))]
        partners = by_range[alpha.dst]
        beta = partners[int(rng.integers(len(partners)))]
        coeff = COEFFICIENT_GRID[int(rng.integers(len(COEFFICIENT_GRID)))]
        raw.append((Monomial(alpha, beta), coeff))
    return algebra.normal_form(raw)
