"""Constructions on representations: amplification, corners, gauge and shift twists, graph-move extensions."""

from typing import Dict, Hashable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np
import structlog
from scipy.sparse import csr_matrix, hstack, kron

from lp_graph_algebras.errors import PreconditionError, RepresentationError
from lp_graph_algebras.lpa import LeavittPathAlgebra, LpaElement, Monomial
from lp_graph_algebras.models import GeneratorKind, MoveKind
from lp_graph_algebras.quiver import (
    Quiver,
    apply_move,
    head_edge,
    head_vertex,
    is_hereditary,
    is_saturated,
    matrix_graph,
    matrix_head_edge,
    matrix_head_vertex,
    quotient_graph,
    tail_edge,
    tail_vertex,
)
from lp_graph_algebras.reps.base import (
    Generator,
    Representation,
    compress,
    generators_of,
    partial_map_image,
)
from lp_graph_algebras.spatial import (
    Certificate,
    FiniteMeasureSpace,
    SpatialMatrix,
    SpatialSystem,
    certify,
    spatial_from_system,
)

logger = structlog.get_logger(__name__)

EXACT_TOLERANCE = 1e-12


def kron_spatial(first: SpatialMatrix, second: SpatialMatrix, space: FiniteMeasureSpace) -> SpatialMatrix:
    """first (x) second on the product space, row-major atom order."""
    data = kron(first.data, second.data, format="csr")
    certificate = None
    if first.certificate is not None and second.certificate is not None:
        n2 = second.domain_space.size
        mapping: Dict[int, int] = {}
        phases: Dict[int, complex] = {}
        s1, s2 = first.certificate.system, second.certificate.system
        for x1, y1 in s1.mapping.items():
            for x2, y2 in s2.mapping.items():
                target = y1 * second.space.size + y2
                mapping[x1 * n2 + x2] = target
                phases[target] = s1.phases[y1] * s2.phases[y2]
        certificate = Certificate(SpatialSystem(mapping, phases), first.certificate.p)
    return SpatialMatrix(data, space, space, certificate)


def matrix_unit_operator(n: int, i: int, j: int, p: float) -> SpatialMatrix:
    """E_{ij} on counting measure over 1..n."""
    return spatial_from_system(SpatialSystem({j - 1: i - 1}), p, index_space(n))


def index_space(n: int) -> FiniteMeasureSpace:
    return FiniteMeasureSpace([str(i) for i in range(1, n + 1)])


def amplify(rep: Representation, n: int) -> Representation:
    """Representation of L_{M_nQ} on I x X through L_{M_nQ} = M_n(L_Q)."""
    if n < 1:
        raise PreconditionError("Index set must be nonempty")
    quiver = rep.quiver
    target = matrix_graph(quiver, n)
    space = index_space(n).product(rep.space)
    size = rep.dimension

    def unit(i: int, j: int, image: SpatialMatrix) -> SpatialMatrix:
        return kron_spatial(matrix_unit_operator(n, i, j, rep.p), image, space)

    images: Dict[Generator, SpatialMatrix] = {}
    for v in quiver.vertices:
        images[(GeneratorKind.VERTEX, v)] = unit(1, 1, rep.vertex_image(v))
        for i in range(1, n):
            images[(GeneratorKind.VERTEX, matrix_head_vertex(v, i))] = unit(i + 1, i + 1, rep.vertex_image(v))
            images[(GeneratorKind.EDGE, matrix_head_edge(v, i))] = unit(i + 1, i, rep.vertex_image(v))
            images[(GeneratorKind.GHOST, matrix_head_edge(v, i))] = unit(i, i + 1, rep.vertex_image(v))
    for e in quiver.edge_names:
        images[(GeneratorKind.EDGE, e)] = unit(1, 1, rep.edge_image(e))
        images[(GeneratorKind.GHOST, e)] = unit(1, 1, rep.ghost_image(e))

    mask = [i * size + x for i in range(n) for x in rep.mask]
    atoms = [(i, atom) for i in range(1, n + 1) for atom in rep.atoms]
    return Representation(target, rep.p, space, images, mask=mask, name=f"M{n}{rep.name}", atoms=atoms)


class Corner(NamedTuple):
    """Result of extract_corner: rho = u sigma_I u^{-1}."""

    sigma: Representation
    u: SpatialMatrix
    deviation: float


def extract_corner(rep: Representation, quiver: Quiver, n: int, corner: int = 1) -> Corner:
    """Recover sigma on the E_{ii} corner and the intertwiner u from a representation of L_{M_nQ}."""
    if not 1 <= corner <= n:
        raise PreconditionError(f"Corner index must lie in 1..{n}")
    if rep.quiver != matrix_graph(quiver, n):
        raise PreconditionError("Representation is not over the matrix graph of the given graph")
    if rep.check_relations().degenerate:
        raise RepresentationError("Corner extraction needs a nondegenerate representation")

    big = LeavittPathAlgebra(rep.quiver)
    small = LeavittPathAlgebra(quiver)
    support: Set[int] = set()
    for v in quiver.vertices:
        support.update(rep.vertex_support(matrix_head_vertex(v, corner - 1)))
    keep = sorted(support)
    position = {old: new for new, old in enumerate(keep)}
    subspace = rep.space.subspace(keep)

    def corner_image(x: LpaElement) -> SpatialMatrix:
        image = rep.evaluate(small.matrix_unit(big, n, corner, corner, x))
        return certify(SpatialMatrix(image.data[keep][:, keep], subspace), rep.p)

    images: Dict[Generator, SpatialMatrix] = {}
    for v in quiver.vertices:
        images[(GeneratorKind.VERTEX, v)] = corner_image(small.vertex(v))
    for e in quiver.edge_names:
        images[(GeneratorKind.EDGE, e)] = corner_image(small.edge(e))
        images[(GeneratorKind.GHOST, e)] = corner_image(small.ghost(e))
    sigma = Representation(
        quiver,
        rep.p,
        subspace,
        images,
        mask=[position[i] for i in rep.mask if i in position],
        name=f"corner{corner}({rep.name})",
        atoms=[rep.atoms[i] for i in keep],
    )

    blocks = []
    for i in range(1, n + 1):
        column = rep.evaluate(small.matrix_unit(big, n, i, corner, small.unit()))
        blocks.append(column.data[:, keep])
    domain = index_space(n).product(subspace)
    u = certify(SpatialMatrix(csr_matrix(hstack(blocks)), rep.space, domain), rep.p)

    amplified = amplify(sigma, n)
    deviation = 0.0
    for generator in generators_of(rep.quiver):
        lhs = rep.images[generator] @ u
        rhs = u @ amplified.images[generator]
        deviation = max(deviation, (lhs - rhs).max_abs())
    logger.debug("Extracted corner", rep=rep.name, corner=corner, atoms=len(keep), deviation=deviation)
    return Corner(sigma, u, deviation)


GaugeBlock = Union[complex, float, int, np.ndarray]


def gauge_modify(rep: Representation, blocks: Mapping[str, GaugeBlock]) -> Representation:
    """rho_u(v) = rho(v), rho_u(e) = u_{s(e)} rho(e), rho_u(e^*) = rho(e^*) u_{s(e)}^{-1}."""
    size = rep.dimension
    forward: Dict[str, csr_matrix] = {}
    backward: Dict[str, csr_matrix] = {}
    for v, block in blocks.items():
        corner = rep.vertex_support(v)
        k = len(corner)
        if k == 0:
            continue
        if np.isscalar(block):
            local = np.eye(k, dtype=complex) * complex(block)  # type: ignore[arg-type]
        else:
            array = np.asarray(block, dtype=complex)
            if array.shape == (size, size):
                local = array[np.ix_(corner, corner)]
            elif array.shape == (k, k):
                local = array
            else:
                raise PreconditionError(f"Gauge block for {v} has shape {array.shape}, expected {(k, k)}")
        if np.linalg.matrix_rank(local) < k:
            raise RepresentationError(f"Gauge block for {v} is not invertible")
        inverse = np.linalg.inv(local)
        full = np.zeros((size, size), dtype=complex)
        full_inv = np.zeros((size, size), dtype=complex)
        full[np.ix_(corner, corner)] = local
        full_inv[np.ix_(corner, corner)] = inverse
        forward[v] = csr_matrix(full)
        backward[v] = csr_matrix(full_inv)

    images: Dict[Generator, SpatialMatrix] = dict(rep.images)
    for e in rep.quiver.edge_names:
        s = rep.quiver.s(e)
        if s not in forward:
            continue
        edge = SpatialMatrix(forward[s] @ rep.edge_image(e).data, rep.space)
        ghost = SpatialMatrix(rep.ghost_image(e).data @ backward[s], rep.space)
        images[(GeneratorKind.EDGE, e)] = certify(edge, rep.p)
        images[(GeneratorKind.GHOST, e)] = certify(ghost, rep.p)
    return Representation(
        rep.quiver, rep.p, rep.space, images, mask=rep.mask, name=f"gauge({rep.name})", atoms=rep.atoms
    )


def cyclic_shift(modulus: int, p: float, power: int = 1) -> SpatialMatrix:
    """u^power for the shift m -> m + 1 on Z/N."""
    space = FiniteMeasureSpace([str(m) for m in range(modulus)])
    return spatial_from_system(SpatialSystem({m: (m + power) % modulus for m in range(modulus)}), p, space)


def shift_tensor_rep(rep: Representation, modulus: int) -> Representation:
    """rho^u(e) = rho(e) (x) u and rho^u(e^*) = rho(e^*) (x) u^{-1} for the cyclic shift u."""
    if modulus < 1:
        raise PreconditionError("Shift modulus must be at least 1")
    shift_space = FiniteMeasureSpace([str(m) for m in range(modulus)])
    space = rep.space.product(shift_space)
    identity = cyclic_shift(modulus, rep.p, 0)
    forward = cyclic_shift(modulus, rep.p, 1)
    backward = cyclic_shift(modulus, rep.p, -1)

    images: Dict[Generator, SpatialMatrix] = {}
    for v in rep.quiver.vertices:
        images[(GeneratorKind.VERTEX, v)] = kron_spatial(rep.vertex_image(v), identity, space)
    for e in rep.quiver.edge_names:
        images[(GeneratorKind.EDGE, e)] = kron_spatial(rep.edge_image(e), forward, space)
        images[(GeneratorKind.GHOST, e)] = kron_spatial(rep.ghost_image(e), backward, space)
    mask = [x * modulus + m for x in rep.mask for m in range(modulus)]
    atoms = [(atom, m) for atom in rep.atoms for m in range(modulus)]
    return Representation(
        rep.quiver, rep.p, space, images, mask=mask, name=f"shift{modulus}({rep.name})", atoms=atoms
    )


def shift_partition(rep: Representation, modulus: int) -> List[List[int]]:
    """E_m = X x {m} for a shift-tensored representation."""
    if rep.dimension % modulus:
        raise PreconditionError("Atom count is not a multiple of the modulus")
    return [list(range(m, rep.dimension, modulus)) for m in range(modulus)]


def _cells(rep: Representation, partition: Sequence[Sequence[int]]) -> Dict[int, int]:
    cell: Dict[int, int] = {}
    for index, atoms in enumerate(partition):
        for atom in atoms:
            if atom in cell:
                raise PreconditionError(f"Atom {atom} appears in two cells")
            cell[int(atom)] = index
    if set(cell) != set(range(rep.dimension)):
        raise PreconditionError("Partition does not cover the atoms")
    return cell


def is_free(rep: Representation, partition: Sequence[Sequence[int]], cyclic: bool = False) -> bool:
    """Every edge image maps the span of E_m into the span of E_{m+1}."""
    cell = _cells(rep, partition)
    count = len(partition)
    for e in rep.quiver.edge_names:
        for y, x, _ in rep.edge_image(e).entries():
            step = cell[x] + 1
            if cyclic:
                step %= count
            elif step >= count:
                return False
            if cell[y] != step:
                return False
    return True


def is_approximately_free(rep: Representation, partition: Sequence[Sequence[int]]) -> bool:
    """Free with cyclic cell index."""
    return is_free(rep, partition, cyclic=True)


def _pad(image: SpatialMatrix, space: FiniteMeasureSpace) -> SpatialMatrix:
    """Extend by zero to a larger space whose first atoms are the old ones."""
    old = image.data.tocoo()
    data = csr_matrix((old.data, (old.row, old.col)), shape=(space.size, space.size), dtype=complex)
    certificate = None
    if image.certificate is not None:
        certificate = Certificate(image.certificate.system, image.certificate.p)
    return SpatialMatrix(data, space, space, certificate)


def extend_along_move(rep: Representation, move: MoveKind, depth: int) -> Representation:
    """Extend rho to the moved graph, truncated after depth tail or head vertices.

    New atoms are copies X_u x {n}; tails use rho(f_n) = tau_{n-1} tau_n^{-1}
    and heads rho(f_n) = tau_n tau_{n-1}^{-1}, where tau_n copies X_u to level n.
    """
    if depth < 0:
        raise PreconditionError("Depth must be non-negative")
    if rep.check_relations().degenerate:
        raise RepresentationError("Move extension needs a nondegenerate representation")
    decorated = apply_move(rep.quiver, move)
    target = decorated.materialize(depth)
    anchors = decorated.tails if move == MoveKind.DESINGULARIZATION else decorated.heads

    labels = list(rep.space.labels)
    weights = list(rep.space.weights)
    atoms: List[Hashable] = list(rep.atoms)
    copy: Dict[Tuple[str, int, int], int] = {}
    for u in anchors:
        for n in range(1, depth + 1):
            for x in rep.vertex_support(u):
                copy[(u, n, x)] = len(labels)
                labels.append(f"{rep.space.labels[x]}#{u}:{n}")
                weights.append(rep.space.weights[x])
                atoms.append((u, n, rep.atoms[x]))
    space = FiniteMeasureSpace(labels, weights)

    def level(u: str, n: int, x: int) -> int:
        return x if n == 0 else copy[(u, n, x)]

    images: Dict[Generator, SpatialMatrix] = {
        generator: _pad(image, space) for generator, image in rep.images.items()
    }
    for u in anchors:
        support = rep.vertex_support(u)
        for n in range(1, depth + 1):
            if move == MoveKind.DESINGULARIZATION:
                vertex, edge = tail_vertex(u, n), tail_edge(u, n)
                step = {level(u, n, x): level(u, n - 1, x) for x in support}
            else:
                vertex, edge = head_vertex(u, n), head_edge(u, n)
                step = {level(u, n - 1, x): level(u, n, x) for x in support}
            images[(GeneratorKind.VERTEX, vertex)] = partial_map_image(
                {level(u, n, x): level(u, n, x) for x in support}, rep.p, space
            )
            images[(GeneratorKind.EDGE, edge)] = partial_map_image(step, rep.p, space)
            images[(GeneratorKind.GHOST, edge)] = partial_map_image(
                {y: x for x, y in step.items()}, rep.p, space
            )

    extended = Representation(
        target, rep.p, space, images, mask=rep.mask, name=f"{move.value}({rep.name},{depth})", atoms=atoms
    )
    base = LeavittPathAlgebra(rep.quiver)
    generators = [base.vertex(v) for v in rep.quiver.vertices]
    generators += [base.edge(e) for e in rep.quiver.edge_names]
    generators += [base.ghost(e) for e in rep.quiver.edge_names]
    deviation = corner_deviation(rep, extended, generators)
    if deviation > EXACT_TOLERANCE:
        raise RepresentationError(f"Extension does not restrict to the original representation ({deviation})")
    logger.info(
        "Extended representation along move",
        move=move.value,
        depth=depth,
        atoms=space.size,
        added=space.size - rep.dimension,
    )
    return extended


def corner_deviation(rep: Representation, extended: Representation, elements: Sequence[LpaElement]) -> float:
    """max |sigma(rho(a)) - rho_#(phi(a))| over the given elements."""
    target = LeavittPathAlgebra(extended.quiver)
    deviation = 0.0
    for x in elements:
        padded = _pad(rep.evaluate(x), extended.space)
        moved = extended.evaluate(x.algebra.transport(x, target))
        deviation = max(deviation, (padded - moved).max_abs())
    return deviation


def restrict_nondegenerate(rep: Representation) -> Representation:
    """Drop atoms outside the union of the X_v."""
    keep: Set[int] = set()
    for v in rep.quiver.vertices:
        keep.update(rep.vertex_support(v))
    if len(keep) == rep.dimension:
        return rep
    logger.debug("Dropped degenerate atoms", rep=rep.name, dropped=rep.dimension - len(keep))
    return rep.restrict(sorted(keep))


def pad_atoms(rep: Representation, count: int) -> Representation:
    """Add count atoms on which every generator acts as 0."""
    labels = list(rep.space.labels) + [f"pad{i}" for i in range(count)]
    space = FiniteMeasureSpace(labels, list(rep.space.weights) + [1] * count)
    images = {generator: _pad(image, space) for generator, image in rep.images.items()}
    atoms = list(rep.atoms) + [f"pad{i}" for i in range(count)]
    return Representation(rep.quiver, rep.p, space, images, mask=rep.mask, name=rep.name, atoms=atoms)


def permute_atoms(rep: Representation, order: Sequence[int]) -> Representation:
    """Relabel atoms so that new atom i is old atom order[i]."""
    if sorted(order) != list(range(rep.dimension)):
        raise PreconditionError("Order must be a permutation of the atoms")
    keep = list(order)
    position = {old: new for new, old in enumerate(keep)}
    space = rep.space.subspace(keep)
    images = {generator: compress(image, keep, position, space) for generator, image in rep.images.items()}
    return Representation(
        rep.quiver,
        rep.p,
        space,
        images,
        mask=[position[i] for i in rep.mask],
        name=rep.name,
        atoms=[rep.atoms[i] for i in keep],
    )


def conjugate(rep: Representation, change: np.ndarray, name: Optional[str] = None) -> Representation:
    """W rho W^{-1} for an invertible W; certificates are recomputed."""
    w = np.asarray(change, dtype=complex)
    if w.shape != (rep.dimension, rep.dimension) or np.linalg.matrix_rank(w) < rep.dimension:
        raise RepresentationError("Conjugating matrix must be invertible of the representation's size")
    w_inv = np.linalg.inv(w)
    images = {
        generator: certify(SpatialMatrix(csr_matrix(w @ image.to_dense() @ w_inv), rep.space), rep.p)
        for generator, image in rep.images.items()
    }
    return Representation(
        rep.quiver, rep.p, rep.space, images, mask=rep.mask, name=name or f"conj({rep.name})", atoms=rep.atoms
    )


def pullback_along_quotient(rep: Representation, quiver: Quiver, hereditary: Sequence[str]) -> Representation:
    """Compose L_Q -> L_{Q/H} with a representation of L_{Q/H}."""
    members = set(hereditary)
    if not is_hereditary(quiver, members) or not is_saturated(quiver, members):
        raise PreconditionError("Pullback needs a hereditary and saturated subset")
    if rep.quiver != quotient_graph(quiver, members):
        raise PreconditionError("Representation is not over the quotient graph")
    zero = SpatialMatrix.zeros(rep.space)
    images: Dict[Generator, SpatialMatrix] = {}
    for generator in generators_of(quiver):
        kind, name = generator
        dead = name in members if kind == GeneratorKind.VERTEX else quiver.r(name) in members
        images[generator] = zero if dead else rep.images[generator]
    return Representation(
        quiver, rep.p, rep.space, images, mask=rep.mask, name=f"pullback({rep.name})", atoms=rep.atoms
    )


def orthogonal_family(
    rep: Representation, max_length: int = 2, include_idempotents: bool = False
) -> List[Tuple[Monomial, SpatialMatrix]]:
    """Greedy family of nonzero monomial images with pairwise disjoint domains and ranges."""
    algebra = LeavittPathAlgebra(rep.quiver)
    family: List[Tuple[Monomial, SpatialMatrix]] = []
    used_rows: Set[int] = set()
    used_cols: Set[int] = set()
    for m in algebra.monomials(max_length):
        if m.is_idempotent() and not include_idempotents:
            continue
        image = rep.monomial_image(m)
        if image.certificate is None or image.nnz == 0:
            continue
        rows = set(image.certificate.system.range)
        cols = set(image.certificate.system.domain)
        if rows & used_rows or cols & used_cols:
            continue
        used_rows |= rows
        used_cols |= cols
        family.append((m, image))
    logger.debug("Harvested orthogonal family", rep=rep.name, size=len(family))
    return family
