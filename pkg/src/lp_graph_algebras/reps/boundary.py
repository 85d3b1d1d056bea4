"""Boundary-path representations: edges act by prepending to boundary paths.

Atoms are finite paths ending at sinks together with eventually periodic
infinite paths gamma c c c ... over simple cycles c. An infinite path is
stored in canonical form: the prefix never ends in the last edge of the
cycle, which is rotated to start at the end of the prefix.
"""

from typing import Dict, List, NamedTuple, Optional, Tuple

import networkx as nx
import structlog

from lp_graph_algebras.config import get_config
from lp_graph_algebras.errors import PreconditionError
from lp_graph_algebras.models import GeneratorKind
from lp_graph_algebras.quiver import Path, Quiver, cycles, vertex_path
from lp_graph_algebras.reps.base import Generator, Representation, partial_map_image
from lp_graph_algebras.spatial import FiniteMeasureSpace, SpatialMatrix

logger = structlog.get_logger(__name__)


class BoundaryPath(NamedTuple):
    """prefix followed by cycle repeated forever (no cycle: a finite path ending at a sink)."""

    prefix: Path
    cycle: Tuple[str, ...] = ()

    @property
    def start(self) -> str:
        return self.prefix.src

    @property
    def is_finite(self) -> bool:
        return not self.cycle

    def label(self) -> str:
        if self.is_finite:
            return self.prefix.label()
        head = ".".join(self.prefix.edges)
        loop = ".".join(self.cycle)
        return f"{head}({loop})^inf" if head else f"({loop})^inf"


def canonical(quiver: Quiver, prefix: Path, cycle: Tuple[str, ...]) -> BoundaryPath:
    """Shorten the prefix while it ends in the cycle's last edge."""
    edges = prefix.edges
    while cycle and edges and edges[-1] == cycle[-1]:
        edges = edges[:-1]
        cycle = cycle[-1:] + cycle[:-1]
    if edges:
        return BoundaryPath(Path(prefix.src, edges, quiver.r(edges[-1])), cycle)
    start = quiver.s(cycle[0]) if cycle else prefix.src
    return BoundaryPath(vertex_path(start), cycle)


def prepend(quiver: Quiver, e: str, x: BoundaryPath) -> BoundaryPath:
    """e.x, assuming r(e) is the start of x."""
    prefix = Path(quiver.s(e), (e,) + x.prefix.edges, x.prefix.dst)
    return canonical(quiver, prefix, x.cycle)


def base_atoms(quiver: Quiver) -> List[BoundaryPath]:
    """Atoms with empty prefix: sinks and each rotation of each simple cycle."""
    atoms: List[BoundaryPath] = []
    rotations: Dict[str, List[Tuple[str, ...]]] = {v: [] for v in quiver.vertices}
    for cycle in cycles(quiver):
        edges = cycle.edges
        for i in range(len(edges)):
            rotated = edges[i:] + edges[:i]
            rotations[quiver.s(rotated[0])].append(rotated)
    for v in quiver.vertices:
        if quiver.is_sink(v):
            atoms.append(BoundaryPath(vertex_path(v)))
        for rotated in rotations[v]:
            atoms.append(BoundaryPath(vertex_path(v), rotated))
    return atoms


def boundary_atoms(quiver: Quiver, depth: int) -> List[BoundaryPath]:
    """All canonical boundary atoms with prefix length at most depth, by level."""
    level = base_atoms(quiver)
    atoms = list(level)
    seen = set(atoms)
    for k in range(depth):
        nxt: List[BoundaryPath] = []
        for x in level:
            for e in quiver.in_edges(x.start):
                y = prepend(quiver, e, x)
                if y.prefix.length == k + 1 and y not in seen:
                    seen.add(y)
                    nxt.append(y)
        atoms.extend(nxt)
        level = nxt
        if not level:
            break
    return atoms


def exact_depth(quiver: Quiver) -> Optional[int]:
    """Longest path length for acyclic graphs, None when a cycle exists."""
    graph = quiver.adjacency()
    if not nx.is_directed_acyclic_graph(graph):
        return None
    return int(nx.dag_longest_path_length(graph)) if quiver.vertices else 0


def boundary_path_rep(quiver: Quiver, p: float, depth: Optional[int] = None) -> Representation:
    """Action of L_Q on boundary paths by prepending and stripping edges.

    Args:
        quiver: The graph Q
        p: Exponent of the L^p space
        depth: Prefix length bound; ignored for acyclic graphs, where the
            whole finite boundary is used

    Returns:
        Representation on counting measure, masked at atoms pushed past depth
    """
    config = get_config().representations
    exact = exact_depth(quiver)
    d = exact if exact is not None else (config.boundary_depth if depth is None else depth)
    if d < 0:
        raise PreconditionError("Depth must be non-negative")

    atoms = boundary_atoms(quiver, d)
    if len(atoms) > config.max_atoms:
        raise PreconditionError(f"Boundary model needs {len(atoms)} atoms, above the limit {config.max_atoms}")
    index = {x: i for i, x in enumerate(atoms)}
    space = FiniteMeasureSpace([x.label() for x in atoms])

    images: Dict[Generator, SpatialMatrix] = {}
    mask = set()
    for v in quiver.vertices:
        support = {i: i for i, x in enumerate(atoms) if x.start == v}
        images[(GeneratorKind.VERTEX, v)] = partial_map_image(support, p, space)
    for e in quiver.edge_names:
        forward: Dict[int, int] = {}
        for i, x in enumerate(atoms):
            if x.start != quiver.r(e):
                continue
            y = prepend(quiver, e, x)
            if y in index:
                forward[i] = index[y]
            else:
                mask.add(i)
        images[(GeneratorKind.EDGE, e)] = partial_map_image(forward, p, space)
        images[(GeneratorKind.GHOST, e)] = partial_map_image(
            {y: x for x, y in forward.items()}, p, space
        )

    logger.info(
        "Built boundary-path representation",
        graph=quiver.name,
        depth=d,
        atoms=len(atoms),
        masked=len(mask),
    )
    return Representation(
        quiver, p, space, images, mask=mask, name=f"boundary({quiver.name},{d})", atoms=atoms
    )


def path_length_levels(rep: Representation) -> List[List[int]]:
    """Partition atoms of a finite boundary model by prefix length."""
    levels: Dict[int, List[int]] = {}
    for i, atom in enumerate(rep.atoms):
        if not isinstance(atom, BoundaryPath) or not atom.is_finite:
            raise PreconditionError("Path-length levels need a boundary model of finite paths")
        levels.setdefault(atom.prefix.length, []).append(i)
    if not levels:
        return []
    return [levels.get(k, []) for k in range(max(levels) + 1)]
