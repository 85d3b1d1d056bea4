"""Spatiality of a representation against contractivity on (L_Q)_{0,1}."""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import structlog

from lp_graph_algebras.config import get_config
from lp_graph_algebras.errors import RepresentationError
from lp_graph_algebras.lpa import COEFFICIENT_GRID, LeavittPathAlgebra, LpaElement
from lp_graph_algebras.models import SpatialityVerdict
from lp_graph_algebras.reps.base import Representation, generator_label
from lp_graph_algebras.spatial import block_sup_norm, is_spatial_partial_isometry, opnorm_p

logger = structlog.get_logger(__name__)

CRITERION_TOLERANCE = 1e-7


def level_one_samples(
    algebra: LeavittPathAlgebra, count: int, seed: int = 0, max_terms: int = 4
) -> List[LpaElement]:
    """Seeded random elements of (L_Q)_{0,1}: combinations of alpha beta^* with |alpha| = |beta| <= 1."""
    pool = [m for m in algebra.monomials(1) if m.alpha.length == m.beta.length]
    if not pool:
        return []
    rng = np.random.default_rng(seed)
    samples: List[LpaElement] = []
    for _ in range(count):
        size = int(rng.integers(1, max_terms + 1))
        raw = []
        for _ in range(size):
            m = pool[int(rng.integers(len(pool)))]
            raw.append((m, COEFFICIENT_GRID[int(rng.integers(len(COEFFICIENT_GRID)))]))
        x = algebra.normal_form(raw)
        if not x.is_zero():
            samples.append(x)
    return samples


def spatiality_criterion(
    rep: Representation,
    p: Optional[float] = None,
    samples: Optional[Sequence[LpaElement]] = None,
    sample_count: int = 12,
    tolerance: float = CRITERION_TOLERANCE,
) -> SpatialityVerdict:
    """Evaluate both sides of "spatial iff contractive on (L_Q)_{0,1} and on edges".

    Args:
        rep: A nondegenerate representation
        p: Exponent; defaults to the representation's
        samples: Elements of (L_Q)_{0,1} to test; seeded random ones otherwise
        sample_count: Number of random samples when none are given
        tolerance: Relative slack on the contractivity comparisons

    Returns:
        SpatialityVerdict. The right side is false only on a certified
        violation, so numerical slack never flips it.

    Raises:
        RepresentationError: If the representation is degenerate
    """
    exponent = rep.p if p is None else float(p)
    if rep.check_relations().degenerate:
        raise RepresentationError("The spatiality criterion needs a nondegenerate representation")
    config = get_config()
    options = config.norm
    log = logger.bind(component="criterion", rep=rep.name, p=exponent)

    non_spatial = [
        generator_label(generator)
        for generator, image in rep.images.items()
        if not is_spatial_partial_isometry(image, exponent)[0]
    ]
    lhs = not non_spatial

    details: Dict[str, Any] = {"non_spatial": non_spatial}
    violations: List[str] = []
    for e in rep.quiver.edge_names:
        for label, image in ((e, rep.edge_image(e)), (f"{e}*", rep.ghost_image(e))):
            bounds = opnorm_p(image, exponent, options=options)
            if bounds.lower > 1.0 + tolerance:
                violations.append(f"{label}: {bounds.lower:.9g}")

    algebra = LeavittPathAlgebra(rep.quiver)
    elements = list(samples) if samples is not None else level_one_samples(
        algebra, sample_count, seed=options.seed
    )
    worst_ratio = 0.0
    for x in elements:
        blocks = {key: block.matrix for key, block in algebra.block_decompose_0n(x, 1).items()}
        reference = block_sup_norm(blocks, exponent, options=options)
        image = opnorm_p(rep.exact_image(x), exponent, options=options)
        if reference.upper > 0:
            worst_ratio = max(worst_ratio, image.lower / reference.upper)
        if image.lower > reference.upper * (1.0 + tolerance) + tolerance:
            violations.append(f"{x}: {image.lower:.9g} > {reference.upper:.9g}")
    rhs = not violations

    details.update({"violations": violations, "samples": len(elements), "worst_ratio": worst_ratio})
    if exponent == 2.0 and lhs != rhs:
        details["note"] = "p = 2 lies outside the criterion; disagreement is expected there"
    verdict = SpatialityVerdict(p=exponent, lhs=lhs, rhs=rhs, agree=lhs == rhs, details=details)
    log.info("Evaluated spatiality criterion", lhs=lhs, rhs=rhs, violations=len(violations))
    return verdict
