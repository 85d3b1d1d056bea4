"""Representations of L_Q by operators on finite measure spaces."""

from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.sparse import csr_matrix

from lp_graph_algebras.errors import PreconditionError, RepresentationError
from lp_graph_algebras.lpa import LpaElement, Monomial
from lp_graph_algebras.models import GeneratorKind, RelationReport, RepresentationBundle
from lp_graph_algebras.quiver import Path, Quiver
from lp_graph_algebras.spatial import (
    Certificate,
    FiniteMeasureSpace,
    SpatialMatrix,
    SpatialSystem,
    is_spatial_partial_isometry,
    spatial_from_system,
    spectral_norm,
)

logger = structlog.get_logger(__name__)

Generator = Tuple[GeneratorKind, str]

RESIDUAL_FLOOR = 1e-14


def generator_label(generator: Generator) -> str:
    kind, name = generator
    return f"{name}*" if kind == GeneratorKind.GHOST else name


def generators_of(quiver: Quiver) -> List[Generator]:
    """Vertices, edges and ghost edges in declaration order."""
    result: List[Generator] = [(GeneratorKind.VERTEX, v) for v in quiver.vertices]
    result += [(GeneratorKind.EDGE, e) for e in quiver.edge_names]
    result += [(GeneratorKind.GHOST, e) for e in quiver.edge_names]
    return result


def partial_map_image(
    mapping: Mapping[int, int], p: float, space: FiniteMeasureSpace
) -> SpatialMatrix:
    """Certified 0/1 matrix of a partial injection with trivial phases."""
    return spatial_from_system(SpatialSystem(mapping), p, space)


def operator_two_norm(data: csr_matrix) -> float:
    """Operator 2-norm of a sparse matrix, 0 for numerically empty ones."""
    if data.nnz == 0 or abs(data).max() <= RESIDUAL_FLOOR:
        return 0.0
    return spectral_norm(data)


class Representation:
    """Generator images of L_Q on a finite measure space, with an optional truncation mask."""

    def __init__(
        self,
        quiver: Quiver,
        p: float,
        space: FiniteMeasureSpace,
        images: Mapping[Generator, SpatialMatrix],
        mask: Iterable[int] = (),
        name: str = "rep",
        atoms: Optional[Sequence[Hashable]] = None,
    ) -> None:
        self.quiver = quiver
        self.p = float(p)
        self.space = space
        self.name = name
        self.mask = frozenset(mask)
        self.atoms: List[Hashable] = list(atoms) if atoms is not None else list(space.labels)
        self.images: Dict[Generator, SpatialMatrix] = {}
        for generator in generators_of(quiver):
            if generator not in images:
                raise RepresentationError(f"Missing image for generator {generator_label(generator)}")
            image = images[generator]
            if image.shape != (space.size, space.size):
                raise RepresentationError(f"Image of {generator_label(generator)} has the wrong shape")
            self.images[generator] = image
        self.logger = logger.bind(component="representation", rep=name)
        self._path_cache: Dict[Tuple[bool, Path], SpatialMatrix] = {}

    @property
    def dimension(self) -> int:
        return self.space.size

    @property
    def interior(self) -> np.ndarray:
        """Atom indices outside the truncation mask."""
        return np.array([i for i in range(self.dimension) if i not in self.mask], dtype=int)

    def image(self, kind: GeneratorKind, name: str) -> SpatialMatrix:
        try:
            return self.images[(kind, name)]
        except KeyError:
            raise PreconditionError(f"Unknown generator {name} of kind {kind.value}") from None

    def vertex_image(self, v: str) -> SpatialMatrix:
        return self.image(GeneratorKind.VERTEX, v)

    def edge_image(self, e: str) -> SpatialMatrix:
        return self.image(GeneratorKind.EDGE, e)

    def ghost_image(self, e: str) -> SpatialMatrix:
        return self.image(GeneratorKind.GHOST, e)

    def vertex_support(self, v: str) -> List[int]:
        """Atoms of X_v, the range of rho(v)."""
        data = self.vertex_image(v).data.tocoo()
        return sorted({int(i) for i, value in zip(data.row, data.data) if abs(value) > RESIDUAL_FLOOR})

    # Evaluation

    def path_image(self, path: Path, ghost: bool = False) -> SpatialMatrix:
        """rho(alpha), or rho(alpha^*) when ghost is set."""
        key = (ghost, path)
        if key in self._path_cache:
            return self._path_cache[key]
        if path.is_vertex:
            result = self.vertex_image(path.src)
        elif path.length == 1:
            e = path.edges[0]
            result = self.ghost_image(e) if ghost else self.edge_image(e)
        else:
            head = Path(path.src, path.edges[:-1], self.quiver.s(path.edges[-1]))
            last = Path(head.dst, path.edges[-1:], path.dst)
            if ghost:
                result = self.path_image(last, True) @ self.path_image(head, True)
            else:
                result = self.path_image(head) @ self.path_image(last)
        self._path_cache[key] = result
        return result

    def monomial_image(self, monomial: Monomial) -> SpatialMatrix:
        return self.path_image(monomial.alpha) @ self.path_image(monomial.beta, ghost=True)

    def monomial_matrix(self, monomial: Monomial) -> csr_matrix:
        return self.monomial_image(monomial).data

    def evaluate(self, x: LpaElement) -> SpatialMatrix:
        """rho(x) as a sparse matrix."""
        if x.algebra.quiver != self.quiver:
            raise PreconditionError("Element and representation live over different graphs")
        total = csr_matrix((self.dimension, self.dimension), dtype=complex)
        for m, c in x.items():
            total = total + self.monomial_matrix(m) * complex(c)
        return SpatialMatrix(total, self.space)

    def exact_columns(self, x: LpaElement) -> List[int]:
        """Columns on which rho(x) is computed without passing through a masked atom.

        A monomial alpha beta^* is applied generator by generator, ghosts of
        beta first; a column is dropped when any intermediate atom is masked.
        """
        if not self.mask:
            return list(range(self.dimension))
        factors: List[List[Mapping[int, int]]] = []
        for m, _ in x.items():
            steps: List[Mapping[int, int]] = []
            generators = [(GeneratorKind.GHOST, e) for e in m.beta.edges]
            generators += [(GeneratorKind.EDGE, e) for e in reversed(m.alpha.edges)]
            if not generators:
                generators = [(GeneratorKind.VERTEX, m.vertex)]
            for generator in generators:
                certificate = self.images[generator].certificate
                if certificate is None:
                    return [int(i) for i in self.interior]
                steps.append(certificate.system.mapping)
            factors.append(steps)
        columns = []
        for j in range(self.dimension):
            exact = True
            for steps in factors:
                atom: Optional[int] = j
                for mapping in steps:
                    if atom in self.mask:
                        exact = False
                        break
                    atom = mapping.get(atom)  # type: ignore[arg-type]
                    if atom is None:
                        break
                if not exact:
                    break
            if exact:
                columns.append(j)
        return columns

    def exact_image(self, x: LpaElement) -> SpatialMatrix:
        """rho(x) restricted to its exact columns."""
        columns = self.exact_columns(x)
        image = self.evaluate(x)
        return SpatialMatrix(image.data[:, columns], self.space, self.space.subspace(columns))

    def unit_image(self) -> SpatialMatrix:
        total = SpatialMatrix.zeros(self.space)
        for v in self.quiver.vertices:
            total = total + self.vertex_image(v)
        return total

    # Checks

    def check_relations(self) -> RelationReport:
        """Largest 2-norm deviation per relation family, on interior columns."""
        q = self.quiver
        interior = self.interior
        residuals: Dict[str, float] = {
            "vertex-orthogonality": 0.0,
            "source-range": 0.0,
            "ck1": 0.0,
            "ck2": 0.0,
        }
        worst: Tuple[float, Optional[str], Optional[str]] = (0.0, None, None)

        def record(relation: str, generator: str, deviation: csr_matrix) -> None:
            nonlocal worst
            value = operator_two_norm(deviation[:, interior]) if len(interior) else 0.0
            residuals[relation] = max(residuals[relation], value)
            if value > worst[0]:
                worst = (value, relation, generator)

        vertex = {v: self.vertex_image(v).data for v in q.vertices}
        edge = {e: self.edge_image(e).data for e in q.edge_names}
        ghost = {e: self.ghost_image(e).data for e in q.edge_names}

        for v in q.vertices:
            for w in q.vertices:
                target = vertex[v] if v == w else vertex[v] * 0
                record("vertex-orthogonality", f"{v}.{w}", vertex[v] @ vertex[w] - target)
        for e in q.edge_names:
            s, r = q.s(e), q.r(e)
            record("source-range", e, vertex[s] @ edge[e] - edge[e])
            record("source-range", e, edge[e] @ vertex[r] - edge[e])
            record("source-range", f"{e}*", vertex[r] @ ghost[e] - ghost[e])
            record("source-range", f"{e}*", ghost[e] @ vertex[s] - ghost[e])
        for e in q.edge_names:
            for f in q.edge_names:
                target = vertex[q.r(e)] if e == f else vertex[q.r(e)] * 0
                record("ck1", f"{e}*.{f}", ghost[e] @ edge[f] - target)
        for v in q.regular_vertices():
            total = vertex[v] * 0
            for e in q.out_edges(v):
                total = total + edge[e] @ ghost[e]
            record("ck2", v, vertex[v] - total)

        unit = self.unit_image().data[:, interior] if len(interior) else None
        degenerate = False
        if unit is not None:
            eye = csr_matrix(np.eye(self.dimension, dtype=complex))[:, interior]
            degenerate = operator_two_norm(unit - eye) > RESIDUAL_FLOOR
        elif self.dimension == 0:
            degenerate = bool(q.vertices)

        report = RelationReport(
            residuals=residuals,
            worst_relation=worst[1],
            worst_generator=worst[2],
            max_residual=worst[0],
            degenerate=degenerate,
            masked_atoms=len(self.mask),
        )
        self.logger.debug("Checked relations", max_residual=report.max_residual, degenerate=degenerate)
        return report

    def is_spatial(self, tolerance: float = 1e-9) -> bool:
        """Every generator image is a spatial partial isometry."""
        return all(
            is_spatial_partial_isometry(image, self.p, tolerance=tolerance)[0]
            for image in self.images.values()
        )

    # Restriction and serialization

    def restrict(self, atoms: Sequence[int], name: Optional[str] = None) -> "Representation":
        """Compress every image to a subset of atoms."""
        keep = sorted(set(int(i) for i in atoms))
        position = {old: new for new, old in enumerate(keep)}
        subspace = self.space.subspace(keep)
        images = {
            generator: compress(image, keep, position, subspace)
            for generator, image in self.images.items()
        }
        return Representation(
            self.quiver,
            self.p,
            subspace,
            images,
            mask=[position[i] for i in self.mask if i in position],
            name=name or self.name,
            atoms=[self.atoms[i] for i in keep],
        )

    def to_bundle(self) -> RepresentationBundle:
        images = {
            generator_label(generator): [
                (i, j, value.real, value.imag) for i, j, value in image.entries()
            ]
            for generator, image in self.images.items()
        }
        return RepresentationBundle(
            name=self.name,
            p=self.p,
            space=self.space.to_spec(),
            images=images,
            mask=sorted(self.mask),
            residual=self.check_relations(),
        )

    def __repr__(self) -> str:
        return f"Representation({self.name!r}, atoms={self.dimension}, masked={len(self.mask)})"


def compress(
    image: SpatialMatrix,
    keep: Sequence[int],
    position: Mapping[int, int],
    subspace: FiniteMeasureSpace,
) -> SpatialMatrix:
    """P M P on the kept atoms, keeping the spatial certificate."""
    data = image.data[keep][:, keep]
    certificate = None
    if image.certificate is not None:
        system = image.certificate.system
        mapping = {
            position[x]: position[y]
            for x, y in system.mapping.items()
            if x in position and y in position
        }
        phases = {position[y]: system.phases[y] for y in system.mapping.values() if y in position}
        phases = {y: h for y, h in phases.items() if y in mapping.values()}
        certificate = Certificate(SpatialSystem(mapping, phases), image.certificate.p)
    return SpatialMatrix(data, subspace, subspace, certificate)
