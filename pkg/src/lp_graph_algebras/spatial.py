"""Finite measure spaces, spatial partial isometries and certified p-operator norms."""

import math
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import svds

from lp_graph_algebras.config import NormConfig, get_config
from lp_graph_algebras.errors import PreconditionError, SpatialError
from lp_graph_algebras.models import AtomSpec, MatrixSpec, NormBounds, SpaceSpec
from lp_graph_algebras.scalars import format_rational, parse_rational

logger = structlog.get_logger(__name__)

NormOptions = NormConfig

PHASE_TOLERANCE = 1e-9
DENSE_LIMIT = 1500


class FiniteMeasureSpace:
    """Ordered atoms with positive rational weights."""

    def __init__(self, labels: Sequence[str], weights: Optional[Sequence[Union[int, Fraction, str]]] = None) -> None:
        self.labels: Tuple[str, ...] = tuple(labels)
        if len(set(self.labels)) != len(self.labels):
            raise SpatialError("Atom labels must be unique")
        raw = weights if weights is not None else [1] * len(self.labels)
        if len(raw) != len(self.labels):
            raise SpatialError("One weight per atom is required")
        self.weights: Tuple[Fraction, ...] = tuple(
            parse_rational(w) if isinstance(w, str) else Fraction(w) for w in raw
        )
        if any(w <= 0 for w in self.weights):
            raise SpatialError("Atom weights must be positive")
        self._index = {label: i for i, label in enumerate(self.labels)}

    @classmethod
    def counting(cls, size_or_labels: Union[int, Sequence[str]]) -> "FiniteMeasureSpace":
        if isinstance(size_or_labels, int):
            return cls([str(i) for i in range(size_or_labels)])
        return cls(size_or_labels)

    @classmethod
    def from_spec(cls, spec: SpaceSpec) -> "FiniteMeasureSpace":
        return cls([a.label for a in spec.atoms], [a.weight for a in spec.atoms])

    def to_spec(self) -> SpaceSpec:
        return SpaceSpec(
            atoms=[AtomSpec(label=label, weight=format_rational(w)) for label, w in zip(self.labels, self.weights)]
        )

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def is_counting(self) -> bool:
        return all(w == 1 for w in self.weights)

    def index(self, label: str) -> int:
        if label not in self._index:
            raise SpatialError(f"Unknown atom: {label}")
        return self._index[label]

    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def product(self, other: "FiniteMeasureSpace") -> "FiniteMeasureSpace":
        """Product space, atoms (a, b) in row-major order."""
        labels = [f"{a}|{b}" for a in self.labels for b in other.labels]
        weights = [u * w for u in self.weights for w in other.weights]
        return FiniteMeasureSpace(labels, weights)

    def subspace(self, indices: Sequence[int]) -> "FiniteMeasureSpace":
        return FiniteMeasureSpace([self.labels[i] for i in indices], [self.weights[i] for i in indices])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteMeasureSpace):
            return NotImplemented
        return self.labels == other.labels and self.weights == other.weights

    def __hash__(self) -> int:
        return hash((self.labels, self.weights))

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"FiniteMeasureSpace(atoms={self.size})"


class SpatialSystem:
    """(S, A, B, h): an atom bijection A -> B with unimodular phases on B."""

    def __init__(self, mapping: Mapping[int, int], phases: Optional[Mapping[int, complex]] = None) -> None:
        self.mapping: Dict[int, int] = dict(mapping)
        targets = list(self.mapping.values())
        if len(set(targets)) != len(targets):
            raise SpatialError("Spatial system map is not injective")
        self.phases: Dict[int, complex] = {y: 1.0 + 0j for y in targets}
        for y, h in (phases or {}).items():
            if y not in self.phases:
                raise SpatialError(f"Phase given outside the range set at atom {y}")
            if abs(abs(h) - 1.0) > PHASE_TOLERANCE:
                raise SpatialError(f"Phase at atom {y} is not unimodular")
            self.phases[y] = complex(h)

    @property
    def domain(self) -> List[int]:
        return sorted(self.mapping)

    @property
    def range(self) -> List[int]:
        return sorted(self.mapping.values())

    def inverse(self) -> "SpatialSystem":
        """(S^-1, B, A, conj(h) o S)."""
        inv = {y: x for x, y in self.mapping.items()}
        return SpatialSystem(inv, {x: self.phases[y].conjugate() for x, y in self.mapping.items()})

    def compose(self, first: "SpatialSystem") -> "SpatialSystem":
        """self o first."""
        mapping: Dict[int, int] = {}
        phases: Dict[int, complex] = {}
        for x, y in first.mapping.items():
            if y in self.mapping:
                z = self.mapping[y]
                mapping[x] = z
                phases[z] = self.phases[z] * first.phases[y]
        return SpatialSystem(mapping, phases)

    def __repr__(self) -> str:
        return f"SpatialSystem(size={len(self.mapping)})"


class Certificate:
    """Spatial system and exponent that generate a matrix."""

    __slots__ = ("system", "p")

    def __init__(self, system: SpatialSystem, p: float) -> None:
        self.system = system
        self.p = float(p)


class SpatialMatrix:
    """Sparse complex operator between finite measure spaces."""

    def __init__(
        self,
        data: csr_matrix,
        space: FiniteMeasureSpace,
        domain_space: Optional[FiniteMeasureSpace] = None,
        certificate: Optional[Certificate] = None,
    ) -> None:
        self.space = space
        self.domain_space = domain_space if domain_space is not None else space
        self.data = csr_matrix(data, dtype=complex)
        if self.data.shape != (self.space.size, self.domain_space.size):
            raise SpatialError(
                f"Matrix shape {self.data.shape} does not match spaces "
                f"({self.space.size}, {self.domain_space.size})"
            )
        self.certificate = certificate

    # Constructors

    @classmethod
    def zeros(cls, space: FiniteMeasureSpace, domain_space: Optional[FiniteMeasureSpace] = None) -> "SpatialMatrix":
        dom = domain_space if domain_space is not None else space
        return cls(csr_matrix((space.size, dom.size), dtype=complex), space, dom)

    @classmethod
    def identity(cls, space: FiniteMeasureSpace, p: float = 1.0) -> "SpatialMatrix":
        return projection(space, range(space.size), p)

    @classmethod
    def from_dense(
        cls,
        matrix: Union[np.ndarray, Sequence[Sequence[complex]]],
        space: Optional[FiniteMeasureSpace] = None,
        domain_space: Optional[FiniteMeasureSpace] = None,
    ) -> "SpatialMatrix":
        array = np.asarray(matrix, dtype=complex)
        if array.ndim != 2:
            raise SpatialError("Matrix must be two-dimensional")
        rows = space if space is not None else FiniteMeasureSpace.counting(array.shape[0])
        cols = domain_space if domain_space is not None else (
            rows if array.shape[0] == array.shape[1] else FiniteMeasureSpace.counting(array.shape[1])
        )
        return cls(csr_matrix(array), rows, cols)

    @classmethod
    def from_entries(
        cls,
        entries: Iterable[Tuple[int, int, complex]],
        space: FiniteMeasureSpace,
        domain_space: Optional[FiniteMeasureSpace] = None,
    ) -> "SpatialMatrix":
        dom = domain_space if domain_space is not None else space
        triples = list(entries)
        rows = [t[0] for t in triples]
        cols = [t[1] for t in triples]
        vals = [complex(t[2]) for t in triples]
        data = coo_matrix((vals, (rows, cols)), shape=(space.size, dom.size), dtype=complex)
        return cls(data.tocsr(), space, dom)

    @classmethod
    def from_spec(cls, spec: MatrixSpec) -> "SpatialMatrix":
        array = np.array([[complex(re, im) for re, im in row] for row in spec.rows], dtype=complex)
        space = FiniteMeasureSpace.from_spec(spec.space) if spec.space else None
        if space is not None and space.size != array.shape[0]:
            raise SpatialError("Space descriptor does not match the matrix size")
        return cls.from_dense(array, space)

    # Views

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape  # type: ignore[no-any-return]

    @property
    def nnz(self) -> int:
        return int(self.data.count_nonzero())

    @property
    def is_certified(self) -> bool:
        return self.certificate is not None

    def to_dense(self) -> np.ndarray:
        return self.data.toarray()

    def entries(self) -> Iterator[Tuple[int, int, complex]]:
        coo = self.data.tocoo()
        for i, j, v in sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())):
            if v != 0:
                yield i, j, complex(v)

    # Algebra

    def __matmul__(self, other: "SpatialMatrix") -> "SpatialMatrix":
        if self.domain_space.size != other.space.size:
            raise SpatialError("Incompatible operator shapes")
        cert = None
        if (
            self.certificate is not None
            and other.certificate is not None
            and self.certificate.p == other.certificate.p
        ):
            cert = Certificate(self.certificate.system.compose(other.certificate.system), self.certificate.p)
        return SpatialMatrix(self.data @ other.data, self.space, other.domain_space, cert)

    def __add__(self, other: "SpatialMatrix") -> "SpatialMatrix":
        return SpatialMatrix(self.data + other.data, self.space, self.domain_space)

    def __sub__(self, other: "SpatialMatrix") -> "SpatialMatrix":
        return SpatialMatrix(self.data - other.data, self.space, self.domain_space)

    def scale(self, scalar: complex) -> "SpatialMatrix":
        return SpatialMatrix(self.data * complex(scalar), self.space, self.domain_space)

    def __mul__(self, scalar: complex) -> "SpatialMatrix":
        return self.scale(scalar)

    __rmul__ = __mul__

    def max_abs(self, columns: Optional[Sequence[int]] = None) -> float:
        """Largest entry modulus, optionally on a column subset."""
        data = self.data if columns is None else self.data[:, list(columns)]
        return float(abs(data).max()) if data.nnz else 0.0

    def __repr__(self) -> str:
        tag = ", certified" if self.certificate else ""
        return f"SpatialMatrix(shape={self.shape}, nnz={self.nnz}{tag})"


def _ratio(space: FiniteMeasureSpace, domain: FiniteMeasureSpace, x: int, y: int, p: float) -> float:
    return float(domain.weights[x] / space.weights[y]) ** (1.0 / p)


def _check_exponent(p: float) -> float:
    if not math.isfinite(p) or p < 1:
        raise PreconditionError(f"Exponent p must lie in [1, inf), got {p}")
    return float(p)


def spatial_from_system(
    system: SpatialSystem,
    p: float,
    space: FiniteMeasureSpace,
    domain_space: Optional[FiniteMeasureSpace] = None,
) -> SpatialMatrix:
    """entry[S(x)][x] = h(S(x)) (mu(x)/mu(S(x)))^(1/p)."""
    p = _check_exponent(p)
    dom = domain_space if domain_space is not None else space
    entries = []
    for x, y in system.mapping.items():
        if not (0 <= x < dom.size and 0 <= y < space.size):
            raise SpatialError(f"System maps outside the spaces: {x} -> {y}")
        entries.append((y, x, system.phases[y] * _ratio(space, dom, x, y, p)))
    matrix = SpatialMatrix.from_entries(entries, space, dom)
    matrix.certificate = Certificate(system, p)
    return matrix


def projection(space: FiniteMeasureSpace, atoms: Iterable[int], p: float = 1.0) -> SpatialMatrix:
    """Multiplication by the indicator of a set of atoms."""
    return spatial_from_system(SpatialSystem({i: i for i in atoms}), p, space)


def reverse(matrix: SpatialMatrix) -> SpatialMatrix:
    """The reverse of a certified spatial partial isometry."""
    if matrix.certificate is None:
        raise SpatialError("reverse needs a certified spatial matrix")
    cert = matrix.certificate
    return spatial_from_system(cert.system.inverse(), cert.p, matrix.domain_space, matrix.space)


def is_spatial_partial_isometry(
    matrix: Union[SpatialMatrix, np.ndarray],
    p: float,
    space: Optional[FiniteMeasureSpace] = None,
    tolerance: float = PHASE_TOLERANCE,
) -> Tuple[bool, Optional[SpatialSystem]]:
    """Decide spatiality and recover (S, A, B, h) when it holds."""
    p = _check_exponent(p)
    m = matrix if isinstance(matrix, SpatialMatrix) else SpatialMatrix.from_dense(matrix, space)
    mapping: Dict[int, int] = {}
    phases: Dict[int, complex] = {}
    used_rows = set()
    for y, x, value in m.entries():
        if abs(value) <= tolerance:
            continue
        if x in mapping or y in used_rows:
            return False, None
        expected = _ratio(m.space, m.domain_space, x, y, p)
        if abs(abs(value) - expected) > tolerance * max(1.0, expected):
            return False, None
        mapping[x] = y
        used_rows.add(y)
        phases[y] = value / abs(value)
    return True, SpatialSystem(mapping, phases)


# Norm engine


def _pnorm_columns(x: np.ndarray, p: float) -> np.ndarray:
    if math.isinf(p):
        return np.abs(x).max(axis=0)  # type: ignore[no-any-return]
    return (np.abs(x) ** p).sum(axis=0) ** (1.0 / p)  # type: ignore[no-any-return]


def _psi(z: np.ndarray, q: float) -> np.ndarray:
    """Entrywise |z|^(q-1) sign(z), sign(0) = 0."""
    mag = np.abs(z)
    out = np.zeros_like(z)
    nonzero = mag > 0
    out[nonzero] = (mag[nonzero] ** (q - 1.0)) * (z[nonzero] / mag[nonzero])
    return out


def power_iteration(
    a: Union[np.ndarray, csr_matrix],
    p: float,
    starts: np.ndarray,
    max_iterations: int = 200,
    tolerance: float = 1e-7,
) -> Tuple[float, np.ndarray, List[float]]:
    """Nonlinear power method x <- psi_q(A^H psi_p(Ax)), run on all start columns at once.

    Returns the best value, its vector and the best-so-far history.
    """
    q = p / (p - 1.0)
    ah = a.conj().T
    norms = _pnorm_columns(starts, p)
    keep = norms > 0
    x = starts[:, keep] / norms[keep]
    if x.shape[1] == 0:
        return 0.0, np.zeros(starts.shape[0], dtype=complex), [0.0]
    values = _pnorm_columns(a @ x, p)
    history = [float(values.max())]
    for step in range(max_iterations):
        z = ah @ _psi(a @ x, p)
        scale = np.abs(z).max(axis=0)
        scale[scale == 0] = 1.0
        candidate = _psi(z / scale, q)
        cnorm = _pnorm_columns(candidate, p)
        valid = cnorm > 0
        candidate[:, valid] /= cnorm[valid]
        new_values = np.where(valid, _pnorm_columns(a @ candidate, p), 0.0)
        if np.any(new_values < values - 1e-12 * np.maximum(values, 1.0)):
            logger.debug("Non-monotone power step", step=step)
        improved = new_values > values
        x[:, improved] = candidate[:, improved]
        values = np.maximum(values, new_values)
        best_so_far = max(history[-1], float(values.max()))
        gain = best_so_far - history[-1]
        history.append(best_so_far)
        if not improved.any() or gain <= tolerance * 1e-3 * best_so_far:
            break
    best = int(np.argmax(values))
    return float(values[best]), x[:, best], history


def _two_norm(block: csr_matrix) -> Tuple[float, np.ndarray]:
    if max(block.shape) <= DENSE_LIMIT or min(block.shape) < 3:
        dense = block.toarray()
        _, sigma, vh = np.linalg.svd(dense)
        return float(sigma[0]), vh[0].conj()
    _, sigma, vh = svds(block, k=1, v0=np.ones(block.shape[1], dtype=complex))
    return float(sigma[0]), vh[0].conj()


def spectral_norm(data: csr_matrix) -> float:
    """Largest singular value of a sparse matrix."""
    if data.nnz == 0:
        return 0.0
    return _two_norm(data)[0]


def _riesz_thorin(p: float, anchors: Dict[float, float]) -> Tuple[float, str]:
    best = (math.inf, "")
    for p0, p1 in ((1.0, 2.0), (1.0, math.inf), (2.0, math.inf)):
        if not (p0 <= p <= p1):
            continue
        inv1 = 0.0 if math.isinf(p1) else 1.0 / p1
        theta = (1.0 / p0 - 1.0 / p) / (1.0 / p0 - inv1)
        n0, n1 = anchors[p0], anchors[p1]
        if n0 == 0 or n1 == 0:
            bound = 0.0
        else:
            bound = n0 ** (1.0 - theta) * n1 ** theta
        if bound < best[0]:
            best = (bound, f"riesz-thorin({p0:g},{p1:g})")
    return best


def _block_bounds(block: csr_matrix, p: float, options: NormConfig, rng: np.random.Generator) -> Tuple[float, float, str, str, np.ndarray]:
    absolute = abs(block)
    column_sums = np.asarray(absolute.sum(axis=0)).ravel()
    row_sums = np.asarray(absolute.sum(axis=1)).ravel()
    n1 = float(column_sums.max())
    ninf = float(row_sums.max())
    n_cols = block.shape[1]

    if p == 1.0:
        witness = np.zeros(n_cols, dtype=complex)
        witness[int(np.argmax(column_sums))] = 1.0
        return n1, n1, "exact-p1", "exact-p1", witness

    n2, v2 = _two_norm(block)
    if p == 2.0:
        return n2, n2, "exact-svd", "exact-svd", v2

    upper, upper_method = _riesz_thorin(p, {1.0: n1, 2.0: n2, math.inf: ninf})

    column_norms = np.asarray((absolute.power(p)).sum(axis=0)).ravel() ** (1.0 / p)
    top = np.argsort(-column_norms, kind="stable")[: min(4, n_cols)]
    starts = [np.ones(n_cols, dtype=complex)]
    for j in top:
        e = np.zeros(n_cols, dtype=complex)
        e[j] = 1.0
        starts.append(e)
    starts.append(v2)
    if options.restarts:
        noise = rng.standard_normal((n_cols, options.restarts)) + 1j * rng.standard_normal(
            (n_cols, options.restarts)
        )
        starts.extend(noise.T)
    lower, vector, _ = power_iteration(
        block, p, np.column_stack(starts), options.max_iterations, options.tolerance
    )
    lower_method = "power-iteration"
    if float(column_norms.max()) > lower:
        lower = float(column_norms.max())
        vector = np.zeros(n_cols, dtype=complex)
        vector[int(np.argmax(column_norms))] = 1.0
        lower_method = "basis-vector"
    return lower, max(upper, lower), lower_method, upper_method, vector


def opnorm_p(
    matrix: Union[SpatialMatrix, np.ndarray],
    p: float,
    space: Optional[FiniteMeasureSpace] = None,
    options: Optional[NormConfig] = None,
) -> NormBounds:
    """Certified interval for the operator norm of matrix on L^p of the atom space."""
    p = _check_exponent(p)
    options = options or get_config().norm
    m = matrix if isinstance(matrix, SpatialMatrix) else SpatialMatrix.from_dense(matrix, space)
    log = logger.bind(component="norm", p=p, shape=m.shape)

    if m.nnz == 0:
        return NormBounds(p=p, lower=0.0, upper=0.0, lower_method="zero", upper_method="zero", certified=True, tolerance=options.tolerance)

    if m.certificate is not None and m.certificate.p == p:
        x = m.certificate.system.domain[0]
        w = float(m.domain_space.weights[x]) ** (-1.0 / p)
        return NormBounds(
            p=p, lower=1.0, upper=1.0, lower_method="spatial", upper_method="spatial",
            certified=True, tolerance=options.tolerance, witness=[(x, w, 0.0)],
        )

    # Rescale to counting measure: A = D_mu^(1/p) M D_nu^(-1/p).
    row_scale = m.space.weight_array() ** (1.0 / p)
    col_scale = m.domain_space.weight_array() ** (-1.0 / p)
    a = csr_matrix(m.data.multiply(row_scale[:, None]).multiply(col_scale[None, :]))
    a.eliminate_zeros()

    n_rows, n_cols = a.shape
    support = a.tocoo()
    graph = coo_matrix(
        (np.ones(support.nnz), (support.row, n_rows + support.col)),
        shape=(n_rows + n_cols, n_rows + n_cols),
    )
    n_components, labels = connected_components(graph, directed=False, return_labels=True)

    rng = np.random.default_rng(options.seed)
    lower, upper = 0.0, 0.0
    lower_method, upper_method = "", ""
    witness_cols: np.ndarray = np.array([], dtype=int)
    witness_vec: np.ndarray = np.array([], dtype=complex)
    row_labels, col_labels = labels[:n_rows], labels[n_rows:]
    active = sorted(set(col_labels[support.col].tolist()))
    for component in active:
        rows = np.flatnonzero(row_labels == component)
        cols = np.flatnonzero(col_labels == component)
        block = a[rows][:, cols]
        lo, up, lo_m, up_m, vec = _block_bounds(block, p, options, rng)
        if lo > lower:
            lower, lower_method = lo, lo_m
            witness_cols, witness_vec = cols, vec
        if up > upper:
            upper, upper_method = up, up_m
    upper = max(upper, lower)
    log.debug("Norm bounds", components=len(active), lower=lower, upper=upper)

    witness = [
        (int(j), float((v * col_scale[j]).real), float((v * col_scale[j]).imag))
        for j, v in zip(witness_cols.tolist(), witness_vec.tolist())
        if abs(v) > 1e-15
    ]
    return NormBounds(
        p=p,
        lower=lower,
        upper=upper,
        lower_method=lower_method,
        upper_method=upper_method,
        certified=upper - lower <= options.tolerance,
        tolerance=options.tolerance,
        witness=witness,
    )


def block_sup_norm(
    blocks: Mapping[object, Union[np.ndarray, SpatialMatrix]],
    p: float,
    options: Optional[NormConfig] = None,
) -> NormBounds:
    """Interval supremum of per-block norms."""
    p = _check_exponent(p)
    options = options or get_config().norm
    if not blocks:
        return NormBounds(p=p, lower=0.0, upper=0.0, lower_method="zero", upper_method="zero", certified=True, tolerance=options.tolerance)
    results = [opnorm_p(block, p, options=options) for block in blocks.values()]
    best_lower = max(results, key=lambda b: b.lower)
    best_upper = max(results, key=lambda b: b.upper)
    return NormBounds(
        p=p,
        lower=best_lower.lower,
        upper=best_upper.upper,
        lower_method=best_lower.lower_method,
        upper_method=best_upper.upper_method,
        certified=best_upper.upper - best_lower.lower <= options.tolerance,
        tolerance=options.tolerance,
        witness=best_lower.witness,
    )



def certify(matrix: SpatialMatrix, p: float, tolerance: float = PHASE_TOLERANCE) -> SpatialMatrix:
    """Attach a spatial certificate when the matrix passes the structural test."""
    ok, system = is_spatial_partial_isometry(matrix, p, tolerance=tolerance)
    certificate = Certificate(system, p) if ok and system is not None else None
    return SpatialMatrix(matrix.data, matrix.space, matrix.domain_space, certificate)
