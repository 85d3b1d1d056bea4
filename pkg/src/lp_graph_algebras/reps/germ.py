"""Germ-groupoid representations built from a tight action of S(Q) on X = N.

X is split over the vertices by x -> (x mod k, x div k) with k = |Q^0|.
Inside X_v the local index j is split over R_v (the edges leaving v, or v
itself at a sink) by j -> (R_v[j mod m], j div m). The edge maps S_e send
X_{r(e)} onto X_e, so X_v is the disjoint union of the X_e, s(e) = v.

Atoms are germs [alpha beta^*, x] with source x in a finite set of base
points, kept in minimal form (alpha and beta never share a last edge).
"""

from typing import Dict, List, NamedTuple, Optional, Tuple

import structlog

from lp_graph_algebras.config import get_config
from lp_graph_algebras.errors import PreconditionError
from lp_graph_algebras.lpa import Monomial, format_monomial
from lp_graph_algebras.models import GeneratorKind
from lp_graph_algebras.quiver import Path, Quiver, concat, paths_up_to, vertex_path
from lp_graph_algebras.reps.base import Generator, Representation, partial_map_image
from lp_graph_algebras.spatial import FiniteMeasureSpace, SpatialMatrix

logger = structlog.get_logger(__name__)


class Germ(NamedTuple):
    """[alpha beta^*, x] with x in X_beta."""

    alpha: Path
    beta: Path
    point: int

    def label(self) -> str:
        return f"[{format_monomial(Monomial(self.alpha, self.beta))},{self.point}]"


class PointAction:
    """The canonical pairing bijections of X = N along the graph."""

    def __init__(self, quiver: Quiver) -> None:
        if not quiver.vertices:
            raise PreconditionError("The germ model needs at least one vertex")
        self.quiver = quiver
        self.k = len(quiver.vertices)
        self.choices: Dict[str, List[str]] = {
            v: list(quiver.out_edges(v)) or [v] for v in quiver.vertices
        }

    def vertex_of(self, x: int) -> str:
        return self.quiver.vertices[x % self.k]

    def point(self, v: str, j: int) -> int:
        return self.k * j + self.quiver.vertex_position(v)

    def next_edge(self, x: int) -> Tuple[Optional[str], int]:
        """First edge of x's decoding and the point S_e^{-1}(x); (None, x) at sinks."""
        v = self.vertex_of(x)
        j = x // self.k
        options = self.choices[v]
        m = len(options)
        choice, rest = options[j % m], j // m
        if choice == v and self.quiver.is_sink(v):
            return None, x
        return choice, self.point(self.quiver.r(choice), rest)

    def edge_map(self, e: str, x: int) -> int:
        """S_e: X_{r(e)} -> X_e."""
        v = self.quiver.s(e)
        options = self.choices[v]
        j = x // self.k
        return self.point(v, options.index(e) + len(options) * j)

    def decode(self, x: int, length: int) -> Tuple[Path, int]:
        """Longest prefix beta of x's decoding with |beta| <= length, and S_beta^{-1}(x)."""
        start = self.vertex_of(x)
        edges: List[str] = []
        y = x
        while len(edges) < length:
            e, nxt = self.next_edge(y)
            if e is None:
                break
            edges.append(e)
            y = nxt
        return self.quiver.path(edges, start=start), y


def _minimal(quiver: Quiver, alpha: Path, beta: Path) -> Tuple[Path, Path]:
    while alpha.edges and beta.edges and alpha.edges[-1] == beta.edges[-1]:
        v = quiver.s(alpha.edges[-1])
        alpha = Path(alpha.src, alpha.edges[:-1], v)
        beta = Path(beta.src, beta.edges[:-1], v)
    return alpha, beta


def germ_atoms(quiver: Quiver, depth: int, base_points: int) -> List[Germ]:
    """Minimal germs with source below base_points and |alpha| + |beta| <= depth."""
    action = PointAction(quiver)
    into: Dict[str, List[Path]] = {}
    for path in paths_up_to(quiver, depth):
        into.setdefault(path.dst, []).append(path)
    atoms: List[Germ] = []
    for x in range(base_points):
        full, _ = action.decode(x, depth)
        for k in range(full.length + 1):
            beta = quiver.path(full.edges[:k], start=full.src)
            for alpha in into.get(beta.dst, []):
                if alpha.length + k > depth:
                    continue
                if alpha.edges and beta.edges and alpha.edges[-1] == beta.edges[-1]:
                    continue
                atoms.append(Germ(alpha, beta, x))
    return atoms


def germ_groupoid_rep(
    quiver: Quiver,
    p: float,
    depth: Optional[int] = None,
    points_per_vertex: Optional[int] = None,
) -> Representation:
    """Left regular action of the germ groupoid on germs with sources in the base points."""
    config = get_config().representations
    d = config.germ_depth if depth is None else depth
    per_vertex = config.germ_points_per_vertex if points_per_vertex is None else points_per_vertex
    if d < 0 or per_vertex < 1:
        raise PreconditionError("Germ depth must be non-negative and base points positive")

    action = PointAction(quiver)
    atoms = germ_atoms(quiver, d, len(quiver.vertices) * per_vertex)
    if len(atoms) > config.max_atoms:
        raise PreconditionError(f"Germ model needs {len(atoms)} atoms, above the limit {config.max_atoms}")
    index = {g: i for i, g in enumerate(atoms)}
    space = FiniteMeasureSpace([g.label() for g in atoms])
    mask = set()

    def left_edge(e: str, g: Germ) -> Germ:
        alpha = concat(quiver.path([e]), g.alpha)
        a, b = _minimal(quiver, alpha, g.beta)
        return Germ(a, b, g.point)

    def left_ghost(e: str, g: Germ) -> Optional[Germ]:
        if g.alpha.edges:
            if g.alpha.edges[0] != e:
                return None
            rest = Path(quiver.r(e), g.alpha.edges[1:], g.alpha.dst)
            return Germ(rest, g.beta, g.point)
        if g.alpha.src != quiver.s(e):
            return None
        full, _ = action.decode(g.point, g.beta.length + 1)
        if full.length <= g.beta.length or full.edges[g.beta.length] != e:
            return None
        return Germ(vertex_path(quiver.r(e)), concat(g.beta, quiver.path([e])), g.point)

    images: Dict[Generator, SpatialMatrix] = {}
    for v in quiver.vertices:
        support = {i: i for i, g in enumerate(atoms) if g.alpha.src == v}
        images[(GeneratorKind.VERTEX, v)] = partial_map_image(support, p, space)
    for e in quiver.edge_names:
        forward: Dict[int, int] = {}
        backward: Dict[int, int] = {}
        for i, g in enumerate(atoms):
            if g.alpha.src == quiver.r(e):
                target = left_edge(e, g)
                if target in index:
                    forward[i] = index[target]
                else:
                    mask.add(i)
            if g.alpha.src == quiver.s(e):
                target_ghost = left_ghost(e, g)
                if target_ghost is None:
                    continue
                if target_ghost in index:
                    backward[i] = index[target_ghost]
                else:
                    mask.add(i)
        images[(GeneratorKind.EDGE, e)] = partial_map_image(forward, p, space)
        images[(GeneratorKind.GHOST, e)] = partial_map_image(backward, p, space)

    logger.info(
        "Built germ-groupoid representation",
        graph=quiver.name,
        depth=d,
        base_points=len(quiver.vertices) * per_vertex,
        atoms=len(atoms),
        masked=len(mask),
    )
    return Representation(
        quiver, p, space, images, mask=mask, name=f"germ({quiver.name},{d})", atoms=atoms
    )
