"""Named representation builders, resolved from CLI and server references like "germ" or "shift:3"."""

from typing import Callable, Dict, List, Optional

import structlog
from pydantic import BaseModel, ConfigDict, Field

from lp_graph_algebras.config import get_config
from lp_graph_algebras.errors import PreconditionError
from lp_graph_algebras.quiver import Quiver
from lp_graph_algebras.reps.base import Representation
from lp_graph_algebras.reps.boundary import boundary_path_rep
from lp_graph_algebras.reps.germ import germ_groupoid_rep
from lp_graph_algebras.reps.transforms import shift_tensor_rep

logger = structlog.get_logger(__name__)

Builder = Callable[[Quiver, float, Optional[int]], Representation]


class BuilderMetadata(BaseModel):
    """Metadata for a registered representation builder."""

    model_config = ConfigDict(extra="allow")

    name: str = Field(..., description="Builder name")
    display_name: str = Field(..., description="Human-readable name")
    description: str = Field(default="", description="Builder description")
    capabilities: Dict[str, bool] = Field(default_factory=dict, description="Builder capabilities")
    version: str = Field(default="1.0.0", description="Builder version")


class BuilderInfo:
    """A builder together with its metadata."""

    def __init__(self, name: str, builder: Builder, metadata: Optional[BuilderMetadata] = None) -> None:
        self.builder = builder
        self.metadata = metadata or BuilderMetadata(
            name=name,
            display_name=name.replace("_", " ").title(),
            description=(builder.__doc__ or "").strip().split("\n")[0],
        )


class RepresentationRegistry:
    """Registry of representation builders keyed by name."""

    _builders: Dict[str, BuilderInfo] = {}

    @classmethod
    def register(cls, name: str, builder: Builder, metadata: Optional[BuilderMetadata] = None) -> None:
        """Register a builder.

        Raises:
            ValueError: If the name is taken or contains the parameter separator
        """
        if name in cls._builders:
            raise ValueError(f"Builder '{name}' is already registered")
        if ":" in name:
            raise ValueError("Builder names cannot contain ':'")
        cls._builders[name] = BuilderInfo(name, builder, metadata)
        logger.debug("Registered builder", name=name, capabilities=cls._builders[name].metadata.capabilities)

    @classmethod
    def unregister(cls, name: str) -> None:
        if name not in cls._builders:
            raise KeyError(f"Builder '{name}' not registered")
        del cls._builders[name]

    @classmethod
    def get(cls, name: str) -> Builder:
        if name not in cls._builders:
            raise KeyError(f"Builder '{name}' not registered")
        return cls._builders[name].builder

    @classmethod
    def get_info(cls, name: str) -> BuilderInfo:
        if name not in cls._builders:
            raise KeyError(f"Builder '{name}' not registered")
        return cls._builders[name]

    @classmethod
    def list(cls) -> List[str]:
        return list(cls._builders.keys())

    @classmethod
    def list_with_info(cls) -> Dict[str, BuilderMetadata]:
        return {name: info.metadata for name, info in cls._builders.items()}


def _boundary(quiver: Quiver, p: float, depth: Optional[int]) -> Representation:
    """Boundary-path model on counting measure."""
    return boundary_path_rep(quiver, p, depth)


def _germ(quiver: Quiver, p: float, depth: Optional[int]) -> Representation:
    """Left regular germ-groupoid model."""
    return germ_groupoid_rep(quiver, p, depth)


def _shift(quiver: Quiver, p: float, depth: Optional[int], modulus: Optional[int] = None) -> Representation:
    """Boundary-path model tensored with the cyclic shift."""
    n = get_config().representations.shift_modulus if modulus is None else modulus
    return shift_tensor_rep(boundary_path_rep(quiver, p, depth), n)


def register_builtin_builders() -> List[str]:
    """Register the boundary, germ and shift builders once."""
    builtin = {
        "boundary": (_boundary, {"exact_for_acyclic": True, "parametric": False}),
        "germ": (_germ, {"exact_for_acyclic": False, "parametric": False}),
        "shift": (_shift, {"exact_for_acyclic": True, "parametric": True}),
    }
    registered = []
    for name, (builder, capabilities) in builtin.items():
        if name in RepresentationRegistry.list():
            continue
        metadata = BuilderMetadata(
            name=name,
            display_name=name.title(),
            description=(builder.__doc__ or "").strip(),
            capabilities=capabilities,
        )
        RepresentationRegistry.register(name, builder, metadata)
        registered.append(name)
    return registered


def build_representation(reference: str, quiver: Quiver, p: float, depth: Optional[int] = None) -> Representation:
    """Build from a reference "name" or "name:N" (only shift takes a parameter).

    Raises:
        PreconditionError: Unknown builder or malformed parameter
    """
    register_builtin_builders()
    name, _, argument = reference.partition(":")
    if name not in RepresentationRegistry.list():
        known = ", ".join(RepresentationRegistry.list())
        raise PreconditionError(f"Unknown representation '{name}', expected one of: {known}")
    if not argument:
        return RepresentationRegistry.get(name)(quiver, p, depth)
    if name != "shift":
        raise PreconditionError(f"Representation '{name}' takes no parameter")
    try:
        modulus = int(argument)
    except ValueError:
        raise PreconditionError(f"Shift modulus must be an integer, got '{argument}'") from None
    return _shift(quiver, p, depth, modulus)
