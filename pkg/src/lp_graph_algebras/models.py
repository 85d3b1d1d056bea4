"""Pydantic models for graph input, serialized elements and analysis reports."""

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class PathOrder(str, Enum):
    """Outcome of comparing two paths in the prefix order."""

    LESS = "less"  # alpha = beta.gamma
    GREATER = "greater"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


class MoveKind(str, Enum):
    """Graph moves that embed L_Q into a larger Leavitt path algebra."""

    SOURCE_REMOVAL = "source-removal"
    DESINGULARIZATION = "desingularization"


class GeneratorKind(str, Enum):
    """Kinds of generators of L_Q."""

    VERTEX = "vertex"
    EDGE = "edge"
    GHOST = "ghost"


class EdgeSpec(BaseModel):
    """One edge of the graph JSON schema."""

    name: str = Field(..., description="Edge id")
    src: str = Field(..., description="Source vertex")
    dst: str = Field(..., description="Range vertex")


class GraphSpec(BaseModel):
    """Graph JSON: {"vertices": [...], "edges": [{"name", "src", "dst"}, ...]}."""

    vertices: List[str] = Field(default_factory=list, description="Vertex ids in order")
    edges: List[EdgeSpec] = Field(default_factory=list, description="Edges in order")

    @model_validator(mode="after")
    def validate_graph(self) -> "GraphSpec":
        """Ids must be unique and edges must join declared vertices."""
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("Vertex ids must be unique")
        names = [edge.name for edge in self.edges]
        if len(set(names)) != len(names):
            raise ValueError("Edge ids must be unique")
        clash = set(names) & set(self.vertices)
        if clash:
            raise ValueError(f"Ids used for both a vertex and an edge: {sorted(clash)}")
        declared = set(self.vertices)
        for edge in self.edges:
            if edge.src not in declared or edge.dst not in declared:
                raise ValueError(f"Edge {edge.name} joins undeclared vertices")
        return self


class TermSpec(BaseModel):
    """One serialized monomial alpha beta^* with its Gaussian-rational coefficient."""

    alpha: List[str] = Field(default_factory=list, description="Edge ids of alpha")
    beta: List[str] = Field(default_factory=list, description="Edge ids of beta")
    vertex: str = Field(..., description="Common range vertex r(alpha)=r(beta)")
    re: str = Field(default="0", description="Real part as p/q")
    im: str = Field(default="0", description="Imaginary part as p/q")


class AtomSpec(BaseModel):
    """One atom of a finite measure space."""

    label: str = Field(..., description="Atom label")
    weight: str = Field(default="1", description="Positive rational weight")


class SpaceSpec(BaseModel):
    """Finite measure space descriptor."""

    atoms: List[AtomSpec] = Field(default_factory=list)


class MatrixSpec(BaseModel):
    """Matrix JSON: row-major [re, im] pairs plus the space descriptor."""

    space: Optional[SpaceSpec] = Field(default=None, description="Counting measure when absent")
    rows: List[List[Tuple[float, float]]] = Field(..., description="Row-major complex entries")

    @field_validator("rows")
    @classmethod
    def validate_square(cls, v: List[List[Tuple[float, float]]]) -> List[List[Tuple[float, float]]]:
        """Matrices must be square."""
        if any(len(row) != len(v) for row in v):
            raise ValueError("Matrix must be square")
        return v


class NormBounds(BaseModel):
    """Certified interval for a p-operator norm."""

    p: float = Field(..., description="Exponent")
    lower: float = Field(..., description="Realized lower bound")
    upper: float = Field(..., description="Proven upper bound")
    lower_method: str = Field(default="", description="How the lower bound was obtained")
    upper_method: str = Field(default="", description="How the upper bound was obtained")
    certified: bool = Field(default=False, description="upper - lower <= tolerance")
    tolerance: float = Field(default=1e-7)
    witness: List[Tuple[int, float, float]] = Field(
        default_factory=list, description="Sparse witness vector (index, re, im)"
    )

    @model_validator(mode="after")
    def validate_order(self) -> "NormBounds":
        """Lower bound may not exceed the upper bound."""
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")
        return self

    @property
    def width(self) -> float:
        """Width of the interval."""
        return self.upper - self.lower

    def overlaps(self, other: "NormBounds", tolerance: float = 0.0) -> bool:
        """Whether the two intervals intersect after widening by tolerance."""
        return self.lower <= other.upper + tolerance and other.lower <= self.upper + tolerance

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        """Whether value lies in the interval widened by tolerance."""
        return self.lower - tolerance <= value <= self.upper + tolerance


class RelationReport(BaseModel):
    """Per-relation maximal deviation of a representation, off its mask."""

    residuals: Dict[str, float] = Field(default_factory=dict)
    worst_relation: Optional[str] = Field(default=None)
    worst_generator: Optional[str] = Field(default=None)
    max_residual: float = Field(default=0.0)
    degenerate: bool = Field(default=False, description="Vertex images do not sum to 1")
    masked_atoms: int = Field(default=0)

    @property
    def exact(self) -> bool:
        """All relations hold exactly off the mask."""
        return self.max_residual == 0.0


class TightnessSample(BaseModel):
    """One (p, Z) check of the tight join condition."""

    idempotent: str
    cover: List[str]
    deviation: float


class TightnessReport(BaseModel):
    """Outcome of check_tightness."""

    samples: List[TightnessSample] = Field(default_factory=list)
    max_deviation: float = Field(default=0.0)


class SimplicityReport(BaseModel):
    """Verdict of the simplicity decider with a witness when it fails."""

    simple: bool
    reason: str
    witness_vertices: Optional[List[str]] = Field(default=None, description="Proper H")
    witness_cycle: Optional[List[str]] = Field(default=None, description="Exit-less cycle")


class SpatialityVerdict(BaseModel):
    """Both sides of the spatiality criterion for a representation."""

    p: float
    lhs: bool = Field(..., description="All generator images are spatial partial isometries")
    rhs: bool = Field(..., description="Generators contractive and (L_Q)_{0,1} contractive")
    agree: bool
    details: Dict[str, Any] = Field(default_factory=dict)


class ExperimentItem(BaseModel):
    """One checked claim inside an experiment."""

    name: str
    passed: bool
    control: bool = Field(default=False, description="Engineered to fail")
    tolerance: Optional[float] = Field(default=None)
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def as_expected(self) -> bool:
        """Controls are expected to fail, everything else to pass."""
        return self.passed != self.control


class ExperimentReport(BaseModel):
    """Machine-readable result of an experiment driver."""

    experiment: str
    inputs: Dict[str, Any] = Field(default_factory=dict)
    items: List[ExperimentItem] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Every item behaved as expected and at least one non-control item exists."""
        real = [item for item in self.items if not item.control]
        return bool(real) and all(item.as_expected for item in self.items)

    @property
    def controls_flagged(self) -> bool:
        """Every control item was flagged as failing."""
        return all(not item.passed for item in self.items if item.control)

    def summary(self) -> Dict[str, Any]:
        """Compact verdict for logging."""
        return {
            "experiment": self.experiment,
            "items": len(self.items),
            "failed": [i.name for i in self.items if not i.as_expected],
            "passed": self.passed,
        }


class RepresentationBundle(BaseModel):
    """Serialized representation: space, generator images, mask and residuals."""

    name: str
    p: float
    space: SpaceSpec
    images: Dict[str, List[Tuple[int, int, float, float]]] = Field(
        default_factory=dict, description="generator -> (row, col, re, im) entries"
    )
    mask: List[int] = Field(default_factory=list)
    residual: RelationReport = Field(default_factory=RelationReport)
