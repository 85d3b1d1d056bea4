"""The inverse semigroup S(Q): idempotents, their order, finite covers and tightness."""

import itertools
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import structlog
from scipy.sparse import csr_matrix

from lp_graph_algebras.errors import PreconditionError, RepresentationError
from lp_graph_algebras.lpa import LeavittPathAlgebra, Monomial, format_monomial, mono_mul
from lp_graph_algebras.models import TightnessReport, TightnessSample
from lp_graph_algebras.quiver import (
    Path,
    Quiver,
    comparable,
    concat,
    extends,
    strip_prefix,
    vertex_path,
)

if TYPE_CHECKING:
    from lp_graph_algebras.reps.base import Representation

logger = structlog.get_logger(__name__)

IDEMPOTENT_TOLERANCE = 1e-9


def idempotent(alpha: Path) -> Monomial:
    """alpha alpha^*."""
    return Monomial(alpha, alpha)


def is_idempotent(element: Optional[Monomial]) -> bool:
    return element is None or mono_mul(element, element) == element


def idem_leq(p: Optional[Monomial], q: Optional[Monomial]) -> bool:
    """p <= q iff pq = p; None stands for 0."""
    if p is None:
        return True
    if q is None:
        return False
    return mono_mul(p, q) == p


def _path_of(p: Monomial) -> Path:
    if not p.is_idempotent():
        raise PreconditionError(f"{format_monomial(p)} is not an idempotent")
    return p.alpha


def _check_below(p: Path, cover: Sequence[Path]) -> None:
    for z in cover:
        if not extends(z, p):
            raise PreconditionError(f"{z.label()} is not below {p.label()}")


def _leaves(quiver: Quiver, alpha: Path, depth: int) -> List[Path]:
    """Extensions of alpha to length depth, stopping early at sinks."""
    result: List[Path] = []

    def walk(path: Path) -> None:
        if path.length >= depth or quiver.is_sink(path.dst):
            result.append(path)
            return
        for e in quiver.out_edges(path.dst):
            walk(concat(path, quiver.path([e])))

    walk(alpha)
    return result


def is_cover(quiver: Quiver, p: Monomial, cover: Sequence[Monomial]) -> bool:
    """Every q <= p meets some z in the cover.

    Every q = beta beta^* below p is comparable with an extension of beta of
    length max(|z|), so checking those extensions is enough.
    """
    alpha = _path_of(p)
    paths = [_path_of(z) for z in cover]
    _check_below(alpha, paths)
    if not paths:
        return False
    depth = max([alpha.length] + [z.length for z in paths])
    return all(
        any(comparable(leaf, z) for z in paths) for leaf in _leaves(quiver, alpha, depth)
    )


def cover_sum_identity(algebra: LeavittPathAlgebra, p: Monomial, cover: Sequence[Monomial]) -> bool:
    """Check sum(Z) = p exactly in L_Q for an antichain cover Z of p."""
    alpha = _path_of(p)
    paths = [_path_of(z) for z in cover]
    _check_below(alpha, paths)
    for a, b in itertools.combinations(paths, 2):
        if comparable(a, b):
            raise PreconditionError(f"Cover is not an antichain: {a.label()} vs {b.label()}")
    total = algebra.normal_form([(z, 1) for z in cover])
    return algebra.equals(total, algebra.normal_form({p: 1}))


def enumerate_antichain_covers(quiver: Quiver, v: str, max_length: int) -> List[List[Path]]:
    """All antichain covers of v by paths of length at most max_length."""
    quiver.vertex_position(v)

    def cuts(u: str, budget: int) -> List[List[Path]]:
        options = [[vertex_path(u)]]
        if budget >= 1 and not quiver.is_sink(u):
            per_edge = []
            for e in quiver.out_edges(u):
                step = quiver.path([e])
                per_edge.append(
                    [[concat(step, c) for c in cut] for cut in cuts(quiver.r(e), budget - 1)]
                )
            for combo in itertools.product(*per_edge):
                options.append([path for part in combo for path in part])
        return options

    covers = cuts(v, max_length)
    logger.info("Enumerated antichain covers", vertex=v, max_length=max_length, count=len(covers))
    return covers


def translate_cover(alpha: Path, cover: Sequence[Path]) -> List[Path]:
    """W = alpha^* Z alpha, a cover of r(alpha)."""
    _check_below(alpha, cover)
    return [strip_prefix(z, alpha) for z in cover]


def _join(p: csr_matrix, q: csr_matrix) -> csr_matrix:
    return p + q - p @ q


def check_tightness(
    rep: "Representation", samples: Sequence[Tuple[Path, Sequence[Path]]]
) -> TightnessReport:
    """Compare the join of rep(Z) with rep(p) for each sample (p, Z).

    Deviations are measured on the representation's interior columns.
    """
    interior = rep.interior
    report = TightnessReport()
    for alpha, cover in samples:
        _check_below(alpha, cover)
        target = rep.monomial_matrix(idempotent(alpha))
        images = [rep.monomial_matrix(idempotent(z)) for z in cover]
        for name, image in [(alpha.label(), target)] + [
            (z.label(), img) for z, img in zip(cover, images)
        ]:
            defect = (image @ image - image)[:, interior]
            if defect.nnz and abs(defect).max() > IDEMPOTENT_TOLERANCE:
                raise RepresentationError(f"Image of {name}{name}* is not idempotent")
        joined = images[0] if images else target * 0
        for image in images[1:]:
            joined = _join(joined, image)
        diff = (joined - target)[:, interior]
        deviation = float(abs(diff).max()) if diff.nnz else 0.0
        report.samples.append(
            TightnessSample(
                idempotent=alpha.label(), cover=[z.label() for z in cover], deviation=deviation
            )
        )
        report.max_deviation = max(report.max_deviation, deviation)
    logger.debug("Checked tightness", rep=rep.name, samples=len(samples), max_deviation=report.max_deviation)
    return report


def vertex_cover_samples(quiver: Quiver, max_length: int = 2) -> List[Tuple[Path, List[Path]]]:
    """All (v, Z) with Z an antichain cover of v of depth at most max_length."""
    samples: List[Tuple[Path, List[Path]]] = []
    for v in quiver.vertices:
        for cover in enumerate_antichain_covers(quiver, v, max_length):
            samples.append((vertex_path(v), cover))
    return samples
