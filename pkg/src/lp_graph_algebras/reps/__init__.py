"""Concrete spatial representations of Leavitt path algebras."""

from lp_graph_algebras.reps.base import Generator, Representation, generator_label, generators_of
from lp_graph_algebras.reps.boundary import BoundaryPath, boundary_path_rep, path_length_levels
from lp_graph_algebras.reps.criteria import level_one_samples, spatiality_criterion
from lp_graph_algebras.reps.germ import Germ, PointAction, germ_groupoid_rep
from lp_graph_algebras.reps.registry import (
    BuilderMetadata,
    RepresentationRegistry,
    build_representation,
    register_builtin_builders,
)
from lp_graph_algebras.reps.transforms import (
    Corner,
    amplify,
    conjugate,
    corner_deviation,
    extend_along_move,
    extract_corner,
    gauge_modify,
    is_approximately_free,
    is_free,
    orthogonal_family,
    pad_atoms,
    permute_atoms,
    pullback_along_quotient,
    restrict_nondegenerate,
    shift_partition,
    shift_tensor_rep,
)

__all__ = [
    "BoundaryPath",
    "BuilderMetadata",
    "Corner",
    "Generator",
    "Germ",
    "PointAction",
    "Representation",
    "RepresentationRegistry",
    "amplify",
    "boundary_path_rep",
    "build_representation",
    "conjugate",
    "corner_deviation",
    "extend_along_move",
    "extract_corner",
    "gauge_modify",
    "generator_label",
    "generators_of",
    "germ_groupoid_rep",
    "is_approximately_free",
    "is_free",
    "level_one_samples",
    "orthogonal_family",
    "pad_atoms",
    "path_length_levels",
    "permute_atoms",
    "pullback_along_quotient",
    "register_builtin_builders",
    "restrict_nondegenerate",
    "shift_partition",
    "shift_tensor_rep",
    "spatiality_criterion",
]
