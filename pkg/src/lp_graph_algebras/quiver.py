"""Finite oriented graphs: path combinatorics, structural deciders, quotients and moves."""

import itertools
import json
from pathlib import Path as FilePath
from typing import (
    Any,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import networkx as nx
import structlog

from lp_graph_algebras.errors import GraphError, PreconditionError
from lp_graph_algebras.models import EdgeSpec, GraphSpec, MoveKind, PathOrder, SimplicityReport

logger = structlog.get_logger(__name__)

MAX_SUBSET_VERTICES = 20


class Edge(NamedTuple):
    """A named edge with source and range vertex."""

    name: str
    src: str
    dst: str


class Path(NamedTuple):
    """A finite path; length 0 paths are vertices (src == dst, no edges)."""

    src: str
    edges: Tuple[str, ...]
    dst: str

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def is_vertex(self) -> bool:
        return not self.edges

    def label(self) -> str:
        """Dotted edge sequence, or the vertex name for length 0."""
        return ".".join(self.edges) if self.edges else self.src


class VertexClass(NamedTuple):
    """Structural flags of a vertex (finite graphs have no infinite emitters)."""

    sink: bool
    source: bool
    regular: bool


def vertex_path(v: str) -> Path:
    """The length-0 path at v."""
    return Path(v, (), v)


def concat(first: Path, second: Path) -> Path:
    """Concatenate composable paths."""
    if first.dst != second.src:
        raise GraphError(f"Paths {first.label()} and {second.label()} are not composable")
    return Path(first.src, first.edges + second.edges, second.dst)


def extends(alpha: Path, beta: Path) -> bool:
    """alpha <= beta, i.e. alpha = beta.gamma for some path gamma."""
    if alpha.src != beta.src or len(alpha.edges) < len(beta.edges):
        return False
    return alpha.edges[: len(beta.edges)] == beta.edges


def strip_prefix(alpha: Path, beta: Path) -> Path:
    """The gamma with alpha = beta.gamma; alpha must extend beta."""
    if not extends(alpha, beta):
        raise GraphError(f"{alpha.label()} does not extend {beta.label()}")
    return Path(beta.dst, alpha.edges[len(beta.edges):], alpha.dst)


def path_compare(alpha: Path, beta: Path) -> PathOrder:
    """Compare two paths in the prefix order."""
    if alpha == beta:
        return PathOrder.EQUAL
    if extends(alpha, beta):
        return PathOrder.LESS
    if extends(beta, alpha):
        return PathOrder.GREATER
    return PathOrder.INCOMPARABLE


def comparable(alpha: Path, beta: Path) -> bool:
    return path_compare(alpha, beta) != PathOrder.INCOMPARABLE


class Quiver:
    """Finite oriented graph with named vertices and edges in declaration order."""

    def __init__(
        self,
        vertices: Iterable[str],
        edges: Iterable[Union[Edge, Tuple[str, str, str]]] = (),
        name: str = "Q",
    ) -> None:
        self.name = name
        self._vertices: Tuple[str, ...] = tuple(vertices)
        self._edges: Tuple[Edge, ...] = tuple(Edge(*edge) for edge in edges)

        if len(set(self._vertices)) != len(self._vertices):
            raise GraphError("Vertex ids must be unique")
        names = [edge.name for edge in self._edges]
        if len(set(names)) != len(names):
            raise GraphError("Edge ids must be unique")
        if set(names) & set(self._vertices):
            raise GraphError("An id is used for both a vertex and an edge")

        self._vertex_index = {v: i for i, v in enumerate(self._vertices)}
        self._edge_map: Dict[str, Edge] = {}
        self._edge_index: Dict[str, int] = {}
        out: Dict[str, List[str]] = {v: [] for v in self._vertices}
        into: Dict[str, List[str]] = {v: [] for v in self._vertices}
        for i, edge in enumerate(self._edges):
            if edge.src not in self._vertex_index or edge.dst not in self._vertex_index:
                raise GraphError(f"Edge {edge.name} joins undeclared vertices")
            self._edge_map[edge.name] = edge
            self._edge_index[edge.name] = i
            out[edge.src].append(edge.name)
            into[edge.dst].append(edge.name)
        self._out = {v: tuple(es) for v, es in out.items()}
        self._in = {v: tuple(es) for v, es in into.items()}

    # Basic structure

    @property
    def vertices(self) -> Tuple[str, ...]:
        return self._vertices

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self._edges

    @property
    def edge_names(self) -> Tuple[str, ...]:
        return tuple(edge.name for edge in self._edges)

    def has_vertex(self, v: str) -> bool:
        return v in self._vertex_index

    def has_edge(self, e: str) -> bool:
        return e in self._edge_map

    def edge(self, e: str) -> Edge:
        if e not in self._edge_map:
            raise GraphError(f"Unknown edge: {e}")
        return self._edge_map[e]

    def s(self, e: str) -> str:
        """Source of an edge."""
        return self.edge(e).src

    def r(self, e: str) -> str:
        """Range of an edge."""
        return self.edge(e).dst

    def vertex_position(self, v: str) -> int:
        if v not in self._vertex_index:
            raise GraphError(f"Unknown vertex: {v}")
        return self._vertex_index[v]

    def edge_position(self, e: str) -> int:
        if e not in self._edge_index:
            raise GraphError(f"Unknown edge: {e}")
        return self._edge_index[e]

    def out_edges(self, v: str) -> Tuple[str, ...]:
        """s^{-1}(v) in declaration order."""
        self.vertex_position(v)
        return self._out[v]

    def in_edges(self, v: str) -> Tuple[str, ...]:
        """r^{-1}(v) in declaration order."""
        self.vertex_position(v)
        return self._in[v]

    def is_sink(self, v: str) -> bool:
        return not self.out_edges(v)

    def is_source(self, v: str) -> bool:
        return not self.in_edges(v)

    def is_regular(self, v: str) -> bool:
        return not self.is_sink(v)

    def vertex_class(self, v: str) -> VertexClass:
        sink = self.is_sink(v)
        return VertexClass(sink=sink, source=self.is_source(v), regular=not sink)

    def sinks(self) -> List[str]:
        return [v for v in self._vertices if self.is_sink(v)]

    def sources(self) -> List[str]:
        return [v for v in self._vertices if self.is_source(v)]

    def regular_vertices(self) -> List[str]:
        return [v for v in self._vertices if self.is_regular(v)]

    # Paths

    def vertex_path(self, v: str) -> Path:
        self.vertex_position(v)
        return vertex_path(v)

    def path(self, edges: Sequence[str], start: Optional[str] = None) -> Path:
        """Build a path from an edge sequence, checking composability."""
        if not edges:
            if start is None:
                raise GraphError("A length-0 path needs its vertex")
            return self.vertex_path(start)
        first = self.edge(edges[0])
        current = first.dst
        for name in edges[1:]:
            edge = self.edge(name)
            if edge.src != current:
                raise GraphError(f"Edges do not compose at {name}: {'.'.join(edges)}")
            current = edge.dst
        return Path(first.src, tuple(edges), current)

    # Conversions

    @classmethod
    def from_spec(cls, spec: GraphSpec, name: str = "Q") -> "Quiver":
        return cls(spec.vertices, [(e.name, e.src, e.dst) for e in spec.edges], name=name)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], name: str = "Q") -> "Quiver":
        try:
            spec = GraphSpec(**data)
        except ValueError as e:
            raise GraphError(f"Invalid graph JSON: {e}") from e
        return cls.from_spec(spec, name=name)

    @classmethod
    def from_file(cls, path: Union[str, FilePath]) -> "Quiver":
        """Load a graph from Graph JSON."""
        path = FilePath(path)
        if not path.exists():
            raise GraphError(f"Graph file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise GraphError(f"Graph file is not valid JSON: {e}") from e
        quiver = cls.from_dict(data, name=path.stem)
        logger.info(
            "Loaded graph",
            path=str(path),
            vertices=len(quiver.vertices),
            edges=len(quiver.edges),
        )
        return quiver

    def to_spec(self) -> GraphSpec:
        return GraphSpec(
            vertices=list(self._vertices),
            edges=[EdgeSpec(name=e.name, src=e.src, dst=e.dst) for e in self._edges],
        )

    def to_networkx(self) -> nx.MultiDiGraph:
        """Multigraph with one keyed arc per edge."""
        graph = nx.MultiDiGraph(name=self.name)
        graph.add_nodes_from(self._vertices)
        for edge in self._edges:
            graph.add_edge(edge.src, edge.dst, key=edge.name)
        return graph

    def adjacency(self) -> nx.DiGraph:
        """Simple digraph of the vertex adjacency relation."""
        graph = nx.DiGraph()
        graph.add_nodes_from(self._vertices)
        graph.add_edges_from((edge.src, edge.dst) for edge in self._edges)
        return graph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Quiver):
            return NotImplemented
        return self._vertices == other._vertices and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self._vertices, self._edges))

    def __repr__(self) -> str:
        return f"Quiver({self.name!r}, vertices={len(self._vertices)}, edges={len(self._edges)})"


# Path combinatorics


def paths_of_length(
    quiver: Quiver, n: int, src: Optional[str] = None, dst: Optional[str] = None
) -> List[Path]:
    """All composable paths of length n, optionally with fixed endpoints."""
    if n < 0:
        raise PreconditionError("Path length must be non-negative")
    starts = [src] if src is not None else list(quiver.vertices)
    for v in starts:
        quiver.vertex_position(v)
    if dst is not None:
        quiver.vertex_position(dst)

    result: List[Path] = []

    def walk(path: Path) -> None:
        if path.length == n:
            if dst is None or path.dst == dst:
                result.append(path)
            return
        for e in quiver.out_edges(path.dst):
            walk(Path(path.src, path.edges + (e,), quiver.r(e)))

    for v in starts:
        walk(vertex_path(v))
    return result


def paths_up_to(
    quiver: Quiver, n: int, src: Optional[str] = None, dst: Optional[str] = None
) -> List[Path]:
    """All paths of length at most n, shortest first."""
    return [p for k in range(n + 1) for p in paths_of_length(quiver, k, src=src, dst=dst)]


# Cycles


def _canonical_rotation(quiver: Quiver, edges: Tuple[str, ...]) -> Tuple[str, ...]:
    rotations = [edges[i:] + edges[:i] for i in range(len(edges))]
    return min(rotations, key=lambda rot: [quiver.edge_position(e) for e in rot])


def cycles(quiver: Quiver) -> List[Path]:
    """Simple cycles, one per rotation class, as closed paths."""
    found: Set[Tuple[str, ...]] = set()
    for nodes in nx.simple_cycles(quiver.adjacency()):
        hops = [
            [e for e in quiver.out_edges(a) if quiver.r(e) == b]
            for a, b in zip(nodes, nodes[1:] + nodes[:1])
        ]
        for choice in itertools.product(*hops):
            found.add(_canonical_rotation(quiver, tuple(choice)))
    ordered = sorted(found, key=lambda c: (len(c), [quiver.edge_position(e) for e in c]))
    return [quiver.path(c) for c in ordered]


def has_exit(quiver: Quiver, cycle: Path) -> bool:
    """Some vertex on the cycle emits an edge not on the cycle."""
    on_cycle = set(cycle.edges)
    return any(
        e not in on_cycle for name in cycle.edges for e in quiver.out_edges(quiver.s(name))
    )


def cycle_vertices(quiver: Quiver) -> Set[str]:
    return {quiver.s(e) for c in cycles(quiver) for e in c.edges}


def rotate_to(quiver: Quiver, cycle: Path, v: str) -> Path:
    """Rotate a cycle so that it is based at v."""
    for i, e in enumerate(cycle.edges):
        if quiver.s(e) == v:
            return quiver.path(cycle.edges[i:] + cycle.edges[:i])
    raise PreconditionError(f"Vertex {v} is not on cycle {cycle.label()}")


# Hereditary and saturated sets


def is_hereditary(quiver: Quiver, subset: Iterable[str]) -> bool:
    members = set(subset)
    return all(quiver.r(e) in members for v in members for e in quiver.out_edges(v))


def is_saturated(quiver: Quiver, subset: Iterable[str]) -> bool:
    members = set(subset)
    for v in quiver.vertices:
        if v in members or not quiver.is_regular(v):
            continue
        if all(quiver.r(e) in members for e in quiver.out_edges(v)):
            return False
    return True


def hereditary_saturated_subsets(quiver: Quiver) -> List[FrozenSet[str]]:
    """All hereditary and saturated vertex subsets, smallest first."""
    if len(quiver.vertices) > MAX_SUBSET_VERTICES:
        raise PreconditionError(
            f"Subset enumeration is limited to {MAX_SUBSET_VERTICES} vertices"
        )
    result = []
    for size in range(len(quiver.vertices) + 1):
        for combo in itertools.combinations(quiver.vertices, size):
            if is_hereditary(quiver, combo) and is_saturated(quiver, combo):
                result.append(frozenset(combo))
    return result


def is_simple(quiver: Quiver) -> SimplicityReport:
    """L_Q is simple iff Q^0 is the only nonempty hereditary saturated set and every cycle has an exit."""
    if not quiver.vertices:
        return SimplicityReport(simple=False, reason="empty graph: L_Q = 0")
    full = frozenset(quiver.vertices)
    for subset in hereditary_saturated_subsets(quiver):
        if subset and subset != full:
            ordered = [v for v in quiver.vertices if v in subset]
            return SimplicityReport(
                simple=False,
                reason="proper nonempty hereditary saturated subset",
                witness_vertices=ordered,
            )
    for cycle in cycles(quiver):
        if not has_exit(quiver, cycle):
            return SimplicityReport(
                simple=False, reason="cycle without exit", witness_cycle=list(cycle.edges)
            )
    return SimplicityReport(simple=True, reason="no proper hereditary saturated subset; every cycle has an exit")


def is_cofinal(quiver: Quiver) -> bool:
    """Every vertex connects to every cycle."""
    graph = quiver.adjacency()
    for cycle in cycles(quiver):
        on_cycle = {quiver.s(e) for e in cycle.edges}
        for v in quiver.vertices:
            reach = nx.descendants(graph, v) | {v}
            if not reach & on_cycle:
                return False
    return True


def is_purely_infinite_simple(quiver: Quiver) -> bool:
    """Simple and every vertex reaches a cycle."""
    if not is_simple(quiver).simple:
        return False
    graph = quiver.adjacency()
    targets = cycle_vertices(quiver)
    return all((nx.descendants(graph, v) | {v}) & targets for v in quiver.vertices)


def shortest_path(quiver: Quiver, start: str, targets: Iterable[str]) -> Path:
    """Shortest path from start into targets, first declared edge at each hop."""
    graph = quiver.adjacency()
    goal = set(targets)
    if start in goal:
        return vertex_path(start)
    lengths = nx.single_source_shortest_path(graph, start)
    reachable = [v for v in quiver.vertices if v in goal and v in lengths]
    if not reachable:
        raise PreconditionError(f"No path from {start} to {sorted(goal)}")
    best = min(reachable, key=lambda v: (len(lengths[v]), quiver.vertex_position(v)))
    nodes = lengths[best]
    edges = [
        next(e for e in quiver.out_edges(a) if quiver.r(e) == b) for a, b in zip(nodes, nodes[1:])
    ]
    return quiver.path(edges)


def quotient_graph(quiver: Quiver, subset: Iterable[str]) -> Quiver:
    """Q/H: drop H and every edge ranging in H."""
    members = set(subset)
    for v in members:
        quiver.vertex_position(v)
    if not is_hereditary(quiver, members) or not is_saturated(quiver, members):
        raise PreconditionError("Quotient needs a hereditary and saturated subset")
    if members == set(quiver.vertices):
        raise PreconditionError("Quotient by the full vertex set is the zero algebra")
    return Quiver(
        [v for v in quiver.vertices if v not in members],
        [e for e in quiver.edges if e.dst not in members],
        name=f"{quiver.name}/H",
    )


# Graph moves


def tail_vertex(v: str, i: int) -> str:
    return v if i == 0 else f"{v}_t{i}"


def tail_edge(v: str, i: int) -> str:
    return f"ft{i}_{v}"


def head_vertex(w: str, i: int) -> str:
    return w if i == 0 else f"{w}_h{i}"


def head_edge(w: str, i: int) -> str:
    return f"fh{i}_{w}"


def matrix_head_vertex(v: str, i: int) -> str:
    """v_i of the head added by the matrix move (v_0 = v)."""
    return v if i == 0 else f"{v}_m{i}"


def matrix_head_edge(v: str, i: int) -> str:
    """e^v_i : v_i -> v_{i-1}."""
    return f"em{i}_{v}"


def _check_fresh(quiver: Quiver, vertices: Sequence[str], edges: Sequence[Edge]) -> None:
    """Generated ids must not reuse an id of the base graph."""
    taken = set(quiver.vertices) | set(quiver.edge_names)
    clashes = sorted(taken.intersection(list(vertices) + [e.name for e in edges]))
    if clashes:
        raise PreconditionError(
            f"Generated ids {clashes} clash with ids of graph {quiver.name}; rename them before applying the move"
        )


class DecoratedQuiver:
    """A quiver with symbolic infinite tails at sinks and heads at sources."""

    def __init__(
        self,
        base: Quiver,
        tails: Sequence[str] = (),
        heads: Sequence[str] = (),
        move: Optional[MoveKind] = None,
    ) -> None:
        for v in list(tails) + list(heads):
            base.vertex_position(v)
        self.base = base
        self.tails = tuple(tails)
        self.heads = tuple(heads)
        self.move = move

    @property
    def is_identity(self) -> bool:
        return not self.tails and not self.heads

    def materialize(self, depth: int) -> Quiver:
        """Truncate every tail and head after depth vertices."""
        if depth < 0:
            raise PreconditionError("Depth must be non-negative")
        vertices: List[str] = []
        edges: List[Edge] = []
        for v in self.tails:
            for i in range(1, depth + 1):
                vertices.append(tail_vertex(v, i))
                edges.append(Edge(tail_edge(v, i), tail_vertex(v, i - 1), tail_vertex(v, i)))
        for w in self.heads:
            for i in range(1, depth + 1):
                vertices.append(head_vertex(w, i))
                edges.append(Edge(head_edge(w, i), head_vertex(w, i), head_vertex(w, i - 1)))
        _check_fresh(self.base, vertices, edges)
        return Quiver(
            list(self.base.vertices) + vertices,
            list(self.base.edges) + edges,
            name=f"{self.base.name}#{depth}",
        )

    def generator_map(self) -> Dict[str, str]:
        """Images of Q's vertices and edges: the identity inclusion."""
        names = list(self.base.vertices) + list(self.base.edge_names)
        return {name: name for name in names}

    def __repr__(self) -> str:
        return f"DecoratedQuiver({self.base!r}, tails={self.tails}, heads={self.heads})"


def desingularize(quiver: Quiver) -> DecoratedQuiver:
    """Attach an infinite tail at every sink."""
    return DecoratedQuiver(quiver, tails=quiver.sinks(), move=MoveKind.DESINGULARIZATION)


def remove_sources(quiver: Quiver) -> DecoratedQuiver:
    """Attach an infinite head at every source."""
    return DecoratedQuiver(quiver, heads=quiver.sources(), move=MoveKind.SOURCE_REMOVAL)


def materialize(decorated: DecoratedQuiver, depth: int) -> Quiver:
    return decorated.materialize(depth)


def apply_move(quiver: Quiver, move: MoveKind) -> DecoratedQuiver:
    if move == MoveKind.DESINGULARIZATION:
        return desingularize(quiver)
    return remove_sources(quiver)


def matrix_graph(quiver: Quiver, n: int) -> Quiver:
    """M_nQ: a head v_{n-1} -> ... -> v_1 -> v at every vertex."""
    if n < 1:
        raise PreconditionError("Matrix size must be at least 1")
    vertices: List[str] = []
    edges: List[Edge] = []
    for v in quiver.vertices:
        for i in range(1, n):
            vertices.append(matrix_head_vertex(v, i))
            edges.append(
                Edge(matrix_head_edge(v, i), matrix_head_vertex(v, i), matrix_head_vertex(v, i - 1))
            )
    _check_fresh(quiver, vertices, edges)
    return Quiver(list(quiver.vertices) + vertices, list(quiver.edges) + edges, name=f"M{n}{quiver.name}")


def export_dot(quiver: Quiver) -> str:
    """Graphviz digraph text, one node per vertex and one labelled arc per edge."""
    lines = [f"digraph {json.dumps(quiver.name)} {{"]
    for v in quiver.vertices:
        lines.append(f"  {json.dumps(v)};")
    for edge in quiver.edges:
        lines.append(
            f"  {json.dumps(edge.src)} -> {json.dumps(edge.dst)} [label={json.dumps(edge.name)}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# Catalogue


def line_graph(n: int) -> Quiver:
    """A_n: n vertices in a row (A2 uses v -e-> w)."""
    if n < 1:
        raise GraphError("Line graph needs at least one vertex")
    if n == 2:
        return Quiver(["v", "w"], [("e", "v", "w")], name="A2")
    vertices = [f"v{i}" for i in range(1, n + 1)]
    edges = [(f"e{i}", f"v{i}", f"v{i + 1}") for i in range(1, n)]
    return Quiver(vertices, edges, name=f"A{n}")


def rose(n: int) -> Quiver:
    """R_n: one vertex with n loops (R1 has the loop c, R_n uses a, b, ...)."""
    if n < 1 or n > 26:
        raise GraphError("Rose needs between 1 and 26 loops")
    if n == 1:
        return Quiver(["v"], [("c", "v", "v")], name="R1")
    letters = [chr(ord("a") + i) for i in range(n)]
    return Quiver(["v"], [(x, "v", "v") for x in letters], name=f"R{n}")


def standard_graph(name: str) -> Quiver:
    """Look up E1, T2, A<n> or R<n>."""
    key = name.strip().upper()
    if key == "E1":
        return Quiver(["v"], [], name="E1")
    if key == "T2":
        return Quiver(["v", "w"], [("c", "v", "v"), ("e", "v", "w")], name="T2")
    if key[:1] in ("A", "R") and key[1:].isdigit():
        n = int(key[1:])
        return line_graph(n) if key[0] == "A" else rose(n)
    raise GraphError(f"Unknown standard graph: {name}")


def load_graph(reference: str) -> Quiver:
    """Load Graph JSON from a file, falling back to the standard catalogue."""
    path = FilePath(reference)
    if path.exists():
        return Quiver.from_file(path)
    try:
        return standard_graph(reference)
    except GraphError:
        raise GraphError(f"Graph file not found and not a standard graph: {reference}") from None


def enumerate_graphs(
    max_vertices: int, max_edges: int, connected: bool = True
) -> Iterator[Quiver]:
    """Every graph on vertices u1..uk (k <= max_vertices) with at most max_edges edges."""
    for k in range(1, max_vertices + 1):
        vertices = [f"u{i}" for i in range(1, k + 1)]
        slots = list(itertools.product(vertices, repeat=2))
        for m in range(max_edges + 1):
            for choice in itertools.combinations_with_replacement(slots, m):
                edges = [(f"g{i}", a, b) for i, (a, b) in enumerate(choice, start=1)]
                quiver = Quiver(vertices, edges, name=f"G{k}_{m}")
                if connected and not nx.is_weakly_connected(quiver.adjacency()):
                    continue
                yield quiver
