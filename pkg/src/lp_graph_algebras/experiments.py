"""Experiment drivers that assemble graphs, algebras, norms and representations into checked reports.

Every driver returns an ExperimentReport whose items carry their tolerance
and details. Each report also holds at least one control item: an input
engineered to fail, so a vacuous pass shows up as a failed report.
"""

import csv
import io
import itertools
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
import structlog

from lp_graph_algebras.config import ExperimentConfig, get_config
from lp_graph_algebras.errors import ExperimentError, PreconditionError, RepresentationError
from lp_graph_algebras.lpa import LeavittPathAlgebra, LpaElement, random_element
from lp_graph_algebras.models import ExperimentItem, ExperimentReport, MoveKind, NormBounds
from lp_graph_algebras.quiver import (
    Path,
    Quiver,
    apply_move,
    cycle_vertices,
    cycles,
    enumerate_graphs,
    is_cofinal,
    is_purely_infinite_simple,
    is_simple,
    line_graph,
    paths_up_to,
    quotient_graph,
    rotate_to,
    shortest_path,
    standard_graph,
    vertex_path,
)
from lp_graph_algebras.reps import (
    Representation,
    amplify,
    boundary_path_rep,
    conjugate,
    extend_along_move,
    gauge_modify,
    germ_groupoid_rep,
    orthogonal_family,
    pullback_along_quotient,
    shift_tensor_rep,
    spatiality_criterion,
)
from lp_graph_algebras.reps.boundary import exact_depth
from lp_graph_algebras.reps.transforms import cyclic_shift, kron_spatial
from lp_graph_algebras.semigroup import (
    check_tightness,
    cover_sum_identity,
    enumerate_antichain_covers,
    idempotent,
    is_cover,
    vertex_cover_samples,
)
from lp_graph_algebras.spatial import SpatialMatrix, opnorm_p

logger = structlog.get_logger(__name__)

SHIFT_SLACK = 1e-9
EXACT = 1e-12


def _settings(seed: Optional[int] = None) -> Tuple[ExperimentConfig, int]:
    config = get_config().experiments
    return config, config.seed if seed is None else seed


def _bounds(b: NormBounds) -> List[float]:
    return [b.lower, b.upper]


def _finish(report: ExperimentReport) -> ExperimentReport:
    logger.info("Experiment finished", **report.summary())
    return report


def sample_elements(
    algebra: LeavittPathAlgebra,
    count: int,
    seed: int,
    max_terms: Optional[int] = None,
    max_length: Optional[int] = None,
) -> List[LpaElement]:
    """count seeded nonzero random elements (fewer only if the algebra keeps producing 0)."""
    config = get_config().experiments
    terms = config.max_terms if max_terms is None else max_terms
    length = config.max_length if max_length is None else max_length
    rng = np.random.default_rng(seed)
    elements: List[LpaElement] = []
    attempts = 0
    while len(elements) < count and attempts < 20 * max(count, 1):
        attempts += 1
        x = random_element(algebra, rng, max_terms=terms, max_length=length)
        if not x.is_zero():
            elements.append(x)
    return elements


def element_norm(rep: Representation, x: LpaElement, p: Optional[float] = None) -> NormBounds:
    """Norm interval of rho(x) on the columns the representation computes exactly."""
    return opnorm_p(rep.exact_image(x), rep.p if p is None else p)


# Closed paths and interleaved words


def closed_path_pair(quiver: Quiver, v: str) -> Tuple[Path, Path]:
    """A cycle alpha at v and an incomparable closed path beta at v.

    beta follows alpha up to an exit, leaves along it, returns to the cycle
    by a shortest path and follows the cycle back to v.
    """
    if v not in cycle_vertices(quiver):
        raise PreconditionError(f"Vertex {v} does not lie on a cycle")
    for cycle in cycles(quiver):
        if v not in {quiver.s(e) for e in cycle.edges}:
            continue
        alpha = rotate_to(quiver, cycle, v)
        on_cycle = {quiver.s(e) for e in alpha.edges}
        for i, edge in enumerate(alpha.edges):
            u = quiver.s(edge)
            for f in quiver.out_edges(u):
                if f == edge:
                    continue
                try:
                    back = shortest_path(quiver, quiver.r(f), on_cycle)
                except PreconditionError:
                    continue
                tail: List[str] = []
                current = back.dst
                for e in rotate_to(quiver, alpha, back.dst).edges:
                    if current == v:
                        break
                    tail.append(e)
                    current = quiver.r(e)
                beta = quiver.path(alpha.edges[:i] + (f,) + back.edges + tuple(tail))
                return alpha, beta
    raise PreconditionError(f"No cycle through {v} has an exit that returns to it")


def interleaved_word(alpha: Path, beta: Path, length: int, periodic: bool = False) -> Tuple[str, ...]:
    """First length edges of alpha beta alpha^2 beta^2 alpha^3 beta^3 ... (alpha alpha ... when periodic)."""
    word: List[str] = []
    k = 1
    while len(word) < length:
        if periodic:
            word.extend(alpha.edges)
        else:
            word.extend(alpha.edges * k)
            word.extend(beta.edges * k)
            k += 1
    return tuple(word[:length])


def square_prefix_free(word: Sequence[str]) -> bool:
    """No theta with theta theta a prefix of word."""
    return all(tuple(word[:k]) != tuple(word[k : 2 * k]) for k in range(1, len(word) // 2 + 1))


def gamma_square_prefix(
    quiver: Quiver, v: str, length: int, periodic: bool = False
) -> Tuple[Path, bool]:
    """Length-L prefix of the interleaved word at v and whether it has no square prefix.

    Raises:
        PreconditionError: If v is not on a cycle or the graph is not cofinal
    """
    if length < 0:
        raise PreconditionError("Prefix length must be non-negative")
    if not is_cofinal(quiver):
        raise PreconditionError("The interleaved word needs a cofinal graph")
    alpha, beta = closed_path_pair(quiver, v)
    word = interleaved_word(alpha, beta, length, periodic=periodic)
    prefix = quiver.path(word, start=v)
    return prefix, square_prefix_free(word)


# Core drivers


def uniqueness_experiment(
    quiver: Quiver,
    p: float,
    elements: Optional[Sequence[LpaElement]] = None,
    depths: Optional[Sequence[int]] = None,
    seed: Optional[int] = None,
) -> ExperimentReport:
    """Compare norms of the same elements across structurally different spatial representations.

    Acyclic graphs have exact finite models and must give overlapping
    intervals. Cyclic graphs only admit truncations; there the report tracks
    the cross-representation gap over increasing depths.
    """
    report_simple = is_simple(quiver)
    if not report_simple.simple:
        raise PreconditionError(f"Uniqueness needs a simple graph: {report_simple.reason}")
    config, seed = _settings(seed)
    algebra = LeavittPathAlgebra(quiver)
    xs = list(elements) if elements is not None else sample_elements(algebra, config.sample_size, seed)
    modulus = get_config().representations.shift_modulus
    tolerance = config.tolerance
    exact = exact_depth(quiver)
    report = ExperimentReport(
        experiment="uniqueness",
        inputs={"graph": quiver.name, "p": p, "seed": seed, "elements": len(xs), "modulus": modulus},
    )

    if exact is not None:
        boundary = boundary_path_rep(quiver, p)
        germ = germ_groupoid_rep(quiver, p, depth=2 * exact)
        reps = {
            "boundary": boundary,
            "germ": germ,
            f"shift:{modulus}": shift_tensor_rep(boundary, modulus),
            f"shift:{modulus}(germ)": shift_tensor_rep(germ, modulus),
        }
        for x in xs:
            bounds = {name: element_norm(rep, x) for name, rep in reps.items()}
            overlap = all(a.overlaps(b, tolerance) for a, b in itertools.combinations(bounds.values(), 2))
            report.items.append(
                ExperimentItem(
                    name=f"intervals overlap for {x}",
                    passed=overlap,
                    tolerance=tolerance,
                    details={"element": str(x), "bounds": {k: _bounds(b) for k, b in bounds.items()}},
                )
            )
        control_rep = reps["boundary"]
    else:
        levels = sorted(depths) if depths is not None else list(config.depths)
        report.inputs["depths"] = levels
        report.notes.append("Cyclic graph: per-depth gaps are a convergence diagnostic, not a proof")
        per_depth: Dict[Tuple[int, int], Dict[str, NormBounds]] = {}
        names: List[str] = []
        control_rep = boundary_path_rep(quiver, p, levels[-1])
        for d in levels:
            boundary = control_rep if d == levels[-1] else boundary_path_rep(quiver, p, d)
            germ = germ_groupoid_rep(quiver, p, depth=d)
            reps = {
                "boundary": boundary,
                "germ": germ,
                f"shift:{modulus}": shift_tensor_rep(boundary, modulus),
                f"shift:{modulus}(germ)": shift_tensor_rep(germ, modulus),
            }
            names = list(reps)
            for i, x in enumerate(xs):
                per_depth[(i, d)] = {name: element_norm(rep, x) for name, rep in reps.items()}
        for i, x in enumerate(xs):
            # Best lower bound seen so far per representation.
            best = [0.0] * len(names)
            gaps = []
            for d in levels:
                best = [max(a, per_depth[(i, d)][name].lower) for a, name in zip(best, names)]
                gaps.append(max(best) - min(best))
            monotone = all(b <= a + tolerance for a, b in zip(gaps, gaps[1:]))
            report.items.append(
                ExperimentItem(
                    name=f"gap non-increasing for {x}",
                    passed=monotone,
                    tolerance=tolerance,
                    details={
                        "element": str(x),
                        "depths": levels,
                        "gaps": gaps,
                        "bounds": {
                            f"{name}@{d}": _bounds(b)
                            for d in levels
                            for name, b in per_depth[(i, d)].items()
                        },
                    },
                )
            )

    if xs:
        x = xs[0]
        doubled = element_norm(control_rep, x * 2)
        single = element_norm(control_rep, x)
        report.items.append(
            ExperimentItem(
                name="doubled element has the same norm",
                passed=doubled.overlaps(single, tolerance),
                control=True,
                tolerance=tolerance,
                details={"element": str(x), "bounds": {"x": _bounds(single), "2x": _bounds(doubled)}},
            )
        )
    return _finish(report)


def simplicity_witness(
    quiver: Quiver,
    p: float = 2.0,
    samples: int = 200,
    depth: Optional[int] = None,
    seed: Optional[int] = None,
) -> ExperimentReport:
    """Injectivity samples for simple graphs, an exact kernel witness otherwise."""
    _, seed = _settings(seed)
    verdict = is_simple(quiver)
    algebra = LeavittPathAlgebra(quiver)
    report = ExperimentReport(
        experiment="simplicity",
        inputs={"graph": quiver.name, "p": p, "seed": seed, "samples": samples},
        notes=[verdict.reason],
    )

    if verdict.simple:
        xs = sample_elements(algebra, samples, seed)
        reps = {"boundary": boundary_path_rep(quiver, p, depth), "germ": germ_groupoid_rep(quiver, p, depth)}
        for name, rep in reps.items():
            nonzero = sum(1 for x in xs if rep.exact_image(x).max_abs() > EXACT)
            report.items.append(
                ExperimentItem(
                    name=f"{name} representation is injective on samples",
                    passed=nonzero == len(xs),
                    tolerance=EXACT,
                    details={"nonzero": nonzero, "samples": len(xs), "atoms": rep.dimension},
                )
            )
        v = quiver.vertices[0]
        boundary = reps["boundary"]
        outside = [i for i in range(boundary.dimension) if i not in set(boundary.vertex_support(v))]
        compressed = boundary.restrict(outside)
        report.items.append(
            ExperimentItem(
                name=f"compression away from X_{v} is injective",
                passed=compressed.evaluate(algebra.vertex(v)).max_abs() > EXACT,
                control=True,
            )
        )
        return _finish(report)

    if verdict.witness_cycle:
        rep = boundary_path_rep(quiver, p, depth)
        c = algebra.path_element(verdict.witness_cycle)
        kernel = c - c * c
        start = quiver.s(verdict.witness_cycle[0])
        report.items.extend(
            [
                ExperimentItem(name="c - c^2 is nonzero in L_Q", passed=not kernel.is_zero(), details={"element": str(kernel)}),
                ExperimentItem(
                    name="representation kills c - c^2",
                    passed=rep.evaluate(kernel).max_abs() == 0.0,
                    details={"atoms": rep.dimension},
                ),
                ExperimentItem(name=f"representation keeps {start}", passed=rep.vertex_image(start).nnz > 0),
                ExperimentItem(name="c - c^2 vanishes in L_Q", passed=kernel.is_zero(), control=True),
            ]
        )
        return _finish(report)

    if verdict.witness_vertices:
        hereditary = verdict.witness_vertices
        quotient = quotient_graph(quiver, hereditary)
        composite = pullback_along_quotient(boundary_path_rep(quotient, p, depth), quiver, hereditary)
        w = hereditary[0]
        alive = [v for v in quiver.vertices if composite.vertex_image(v).nnz > 0]
        kernel = composite.evaluate(algebra.vertex(w))
        report.items.extend(
            [
                ExperimentItem(name=f"{w} is nonzero in L_Q", passed=not algebra.vertex(w).is_zero()),
                ExperimentItem(
                    name=f"quotient composite kills {w}",
                    passed=kernel.max_abs() == 0.0,
                    details={"quotient": quotient.name, "hereditary": list(hereditary)},
                ),
                ExperimentItem(name="quotient composite is nonzero", passed=bool(alive), details={"alive": alive}),
                ExperimentItem(name=f"{w} survives the quotient composite", passed=kernel.max_abs() > 0.0, control=True),
            ]
        )
        return _finish(report)

    report.notes.append("No witness: the algebra of the empty graph is zero")
    return _finish(report)


def linfty_generators(quiver: Quiver, k: int) -> Tuple[List[LpaElement], ExperimentReport]:
    """x_i = beta^i alpha for i <= k, with x_i^* x_j = delta_ij v checked symbolically."""
    if k < 1:
        raise PreconditionError("At least one generator is required")
    if not is_purely_infinite_simple(quiver):
        raise PreconditionError("L_infty generators need a purely infinite simple graph")
    on_cycles = [v for v in quiver.vertices if v in cycle_vertices(quiver)]
    pair: Optional[Tuple[Path, Path]] = None
    for v in on_cycles:
        try:
            pair = closed_path_pair(quiver, v)
            break
        except PreconditionError:
            continue
    if pair is None:
        raise ExperimentError("No incomparable pair of closed paths found")
    alpha, beta = pair
    v = alpha.src
    algebra = LeavittPathAlgebra(quiver)
    a = algebra.path_element(alpha.edges, start=v)
    b = algebra.path_element(beta.edges, start=v)
    unit = algebra.vertex(v)
    xs: List[LpaElement] = []
    power = unit
    for _ in range(k):
        power = power * b
        xs.append(power * a)

    report = ExperimentReport(
        experiment="linfty",
        inputs={"graph": quiver.name, "k": k, "alpha": alpha.label(), "beta": beta.label()},
    )
    report.items.append(
        ExperimentItem(
            name="beta^* alpha = alpha^* beta = 0",
            passed=(b.star() * a).is_zero() and (a.star() * b).is_zero(),
        )
    )
    failures = []
    for (i, xi), (j, xj) in itertools.product(enumerate(xs, 1), repeat=2):
        expected = unit if i == j else algebra.zero()
        if xi.star() * xj != expected:
            failures.append(f"x{i}^* x{j}")
    report.items.append(
        ExperimentItem(name="x_i^* x_j = delta_ij v", passed=not failures, details={"failures": failures})
    )
    aa = a * a
    report.items.append(
        ExperimentItem(
            name="comparable pair (alpha, alpha^2) is orthogonal",
            passed=(aa.star() * a).is_zero(),
            control=True,
        )
    )
    _finish(report)
    return xs, report


def gamma_experiment(quiver: Quiver, length: int = 24) -> ExperimentReport:
    """Square-prefix check of the interleaved word, with the periodic word as control."""
    on_cycles = [v for v in quiver.vertices if v in cycle_vertices(quiver)]
    if not on_cycles:
        raise PreconditionError("The interleaved word needs a vertex on a cycle")
    v = on_cycles[0]
    prefix, free = gamma_square_prefix(quiver, v, length)
    periodic, periodic_free = gamma_square_prefix(quiver, v, length, periodic=True)
    report = ExperimentReport(experiment="gamma", inputs={"graph": quiver.name, "vertex": v, "length": length})
    report.items.append(ExperimentItem(name="interleaved word has no square prefix", passed=free, details={"prefix": prefix.label()}))
    report.items.append(
        ExperimentItem(
            name="periodic word has no square prefix",
            passed=periodic_free,
            control=True,
            details={"prefix": periodic.label()},
        )
    )
    return _finish(report)


def _translates(rep: Representation, target: Set[int], v: str, n: int) -> List[Set[int]]:
    family = []
    for tau in paths_up_to(rep.quiver, n):
        if tau.dst != v:
            continue
        certificate = rep.path_image(tau).certificate
        if certificate is None:
            raise RepresentationError("Translates need a spatial representation")
        mapping = certificate.system.mapping
        family.append({mapping[x] for x in target if x in mapping})
    return family


def _pairwise_disjoint(family: Sequence[Set[int]]) -> bool:
    return sum(len(s) for s in family) == len(set().union(*family)) if family else True


def disjoint_translates(quiver: Quiver, rep: Representation, n: int) -> ExperimentReport:
    """E_v with pairwise disjoint translates S_alpha(E_v), r(alpha) = v, |alpha| <= n."""
    verdict = is_simple(quiver)
    if not verdict.simple:
        raise PreconditionError(f"Disjoint translates need a simple graph: {verdict.reason}")
    if rep.quiver != quiver:
        raise PreconditionError("Representation is over a different graph")
    on_cycles = cycle_vertices(quiver)
    report = ExperimentReport(experiment="disjoint", inputs={"graph": quiver.name, "rep": rep.name, "n": n})
    for v in quiver.vertices:
        support = set(rep.vertex_support(v))
        if not support:
            raise RepresentationError(f"X_{v} is empty")
        if v in on_cycles:
            alpha, beta = closed_path_pair(quiver, v)
            word = interleaved_word(alpha, beta, 2 * n)
            certificate = rep.path_image(quiver.path(word, start=v)).certificate
            if certificate is None:
                raise RepresentationError("Translates need a spatial representation")
            target = set(certificate.system.range)
        else:
            target = support
        family = _translates(rep, target, v, n)
        report.items.append(
            ExperimentItem(
                name=f"translates of E_{v} are disjoint",
                passed=bool(target) and _pairwise_disjoint(family),
                details={"size": len(target), "translates": len(family)},
            )
        )

    cyclic = [v for v in quiver.vertices if v in on_cycles]
    if cyclic:
        v = cyclic[0]
        reach = max(n, min(len(c.edges) for c in cycles(quiver) if v in {quiver.s(e) for e in c.edges}))
        family = _translates(rep, set(rep.vertex_support(v)), v, reach)
        name = f"translates of X_{v} are disjoint"
    else:
        v = quiver.vertices[0]
        family = [set(rep.vertex_support(v))] * 2
        name = f"repeated translate of X_{v} is disjoint"
    report.items.append(ExperimentItem(name=name, passed=_pairwise_disjoint(family), control=True))
    return _finish(report)


def seminorm_move_invariance(
    quiver: Quiver,
    p: float,
    elements: Optional[Sequence[LpaElement]] = None,
    depth: int = 4,
    seed: Optional[int] = None,
) -> ExperimentReport:
    """Norms of rho(a) against rho_#(a) for the source-removal and desingularization extensions."""
    config, seed = _settings(seed)
    algebra = LeavittPathAlgebra(quiver)
    xs = list(elements) if elements is not None else sample_elements(algebra, config.sample_size, seed)
    tolerance = config.tolerance
    rep = boundary_path_rep(quiver, p)
    report = ExperimentReport(
        experiment="moves",
        inputs={"graph": quiver.name, "p": p, "depth": depth, "seed": seed, "elements": len(xs)},
    )
    for move in (MoveKind.SOURCE_REMOVAL, MoveKind.DESINGULARIZATION):
        if apply_move(quiver, move).is_identity:
            report.items.append(ExperimentItem(name=f"{move.value} is the identity", passed=True))
            continue
        extended = extend_along_move(rep, move, depth)
        target = LeavittPathAlgebra(extended.quiver)
        relations = extended.check_relations()
        report.items.append(
            ExperimentItem(
                name=f"{move.value} extension satisfies the relations",
                passed=relations.exact,
                details={"max_residual": relations.max_residual, "atoms": extended.dimension},
            )
        )
        mismatches = []
        for x in xs:
            before = element_norm(rep, x)
            after = element_norm(extended, algebra.transport(x, target))
            if not before.overlaps(after, tolerance):
                mismatches.append({"element": str(x), "before": _bounds(before), "after": _bounds(after)})
        report.items.append(
            ExperimentItem(
                name=f"{move.value} preserves norms",
                passed=not mismatches,
                tolerance=tolerance,
                details={"elements": len(xs), "mismatches": mismatches},
            )
        )
    if xs:
        x = xs[0]
        report.items.append(
            ExperimentItem(
                name="doubled element has the same norm",
                passed=element_norm(rep, x).overlaps(element_norm(rep, x * 2), tolerance),
                control=True,
                tolerance=tolerance,
            )
        )
    return _finish(report)


# Supplementary drivers


def tight_cover_experiment(quiver: Quiver, max_length: int = 3, p: float = 2.0) -> ExperimentReport:
    """Sum of every antichain cover of a vertex equals the vertex; builders are tight."""
    algebra = LeavittPathAlgebra(quiver)
    report = ExperimentReport(experiment="tight-cover", inputs={"graph": quiver.name, "max_length": max_length})
    control_cover: Optional[Tuple[str, List[Path]]] = None
    for v in quiver.vertices:
        top = idempotent(vertex_path(v))
        covers = enumerate_antichain_covers(quiver, v, max_length)
        failures = []
        for cover in covers:
            monomials = [idempotent(z) for z in cover]
            if not is_cover(quiver, top, monomials) or not cover_sum_identity(algebra, top, monomials):
                failures.append([z.label() for z in cover])
            if control_cover is None or len(cover) > len(control_cover[1]):
                control_cover = (v, cover)
        report.items.append(
            ExperimentItem(
                name=f"antichain covers of {v} sum to {v}",
                passed=not failures,
                details={"covers": len(covers), "failures": failures},
            )
        )

    samples = vertex_cover_samples(quiver, 2)
    for name, rep in (("boundary", boundary_path_rep(quiver, p)), ("germ", germ_groupoid_rep(quiver, p))):
        tightness = check_tightness(rep, samples)
        report.items.append(
            ExperimentItem(
                name=f"{name} representation is tight",
                passed=tightness.max_deviation <= EXACT,
                tolerance=EXACT,
                details={"samples": len(tightness.samples), "max_deviation": tightness.max_deviation},
            )
        )

    if control_cover is not None:
        v, cover = control_cover
        partial = [idempotent(z) for z in cover[:-1]]
        report.items.append(
            ExperimentItem(
                name=f"cover of {v} with one path dropped sums to {v}",
                passed=cover_sum_identity(algebra, idempotent(vertex_path(v)), partial),
                control=True,
                details={"cover": [z.label() for z in cover[:-1]]},
            )
        )
    return _finish(report)


def shift_norm_experiment(
    quiver: Quiver,
    p_values: Sequence[float] = (1.0, 1.5, 3.0),
    moduli: Sequence[int] = (2, 3, 5),
    samples: int = 30,
    seed: Optional[int] = None,
) -> ExperimentReport:
    """||rho^u(a)|| >= ||rho(a)|| and the graded image law rho^u(a) = rho(a) (x) u^k."""
    _, seed = _settings(seed)
    algebra = LeavittPathAlgebra(quiver)
    xs = sample_elements(algebra, samples, seed)
    report = ExperimentReport(
        experiment="shift-norm",
        inputs={"graph": quiver.name, "p": list(p_values), "moduli": list(moduli), "seed": seed, "elements": len(xs)},
    )
    for p in p_values:
        rep = boundary_path_rep(quiver, p)
        base = {i: element_norm(rep, x) for i, x in enumerate(xs)}
        for modulus in moduli:
            shifted = shift_tensor_rep(rep, modulus)
            violations = []
            graded_deviation = 0.0
            for i, x in enumerate(xs):
                upper = element_norm(shifted, x).upper
                if upper < base[i].lower - SHIFT_SLACK:
                    violations.append({"element": str(x), "shifted_upper": upper, "lower": base[i].lower})
                for degree, part in x.grade_decompose().items():
                    expected = kron_spatial(
                        rep.evaluate(part), cyclic_shift(modulus, p, degree), shifted.space
                    )
                    graded_deviation = max(graded_deviation, (shifted.evaluate(part) - expected).max_abs())
            report.items.append(
                ExperimentItem(
                    name=f"shift norm inequality p={p:g} N={modulus}",
                    passed=not violations,
                    tolerance=SHIFT_SLACK,
                    details={"violations": violations},
                )
            )
            report.items.append(
                ExperimentItem(
                    name=f"graded image law p={p:g} N={modulus}",
                    passed=graded_deviation <= EXACT,
                    tolerance=EXACT,
                    details={"max_deviation": graded_deviation},
                )
            )
    if xs:
        rep = boundary_path_rep(quiver, 1.0)
        shifted = shift_tensor_rep(rep, moduli[0] if moduli else 1)
        x = xs[0]
        report.items.append(
            ExperimentItem(
                name="shifted norm dominates three times the element",
                passed=element_norm(shifted, x).upper >= element_norm(rep, x * 3).lower - SHIFT_SLACK,
                control=True,
            )
        )
    return _finish(report)


def _pinched(matrix: SpatialMatrix, p: float, value: float, tolerance: float) -> Tuple[bool, NormBounds]:
    bounds = opnorm_p(matrix, p)
    return abs(bounds.lower - value) <= tolerance and abs(bounds.upper - value) <= tolerance, bounds


def orthogonality_experiment(
    quiver: Quiver,
    p_values: Sequence[float] = (1.0, 1.5, 3.0),
    trials: int = 20,
    size: int = 3,
    seed: Optional[int] = None,
) -> ExperimentReport:
    """||sum lambda_i tau_i|| = max |lambda_i| for orthogonal spatial partial isometries."""
    config, seed = _settings(seed)
    tolerance = config.tolerance
    rng = np.random.default_rng(seed)
    report = ExperimentReport(
        experiment="orthogonality",
        inputs={"graph": quiver.name, "p": list(p_values), "trials": trials, "size": size, "seed": seed},
    )
    for p in p_values:
        rep = boundary_path_rep(quiver, p)
        family = orthogonal_family(rep)[:size]
        if len(family) < size:
            raise PreconditionError(f"Only {len(family)} orthogonal partial isometries available, need {size}")
        failures = []
        for _ in range(trials):
            lam = rng.standard_normal(size) + 1j * rng.standard_normal(size)
            total = SpatialMatrix.zeros(rep.space)
            for c, (_, tau) in zip(lam, family):
                total = total + tau.scale(complex(c))
            expected = float(np.abs(lam).max())
            ok, bounds = _pinched(total, p, expected, tolerance)
            if not ok:
                failures.append({"expected": expected, "bounds": _bounds(bounds)})
        report.items.append(
            ExperimentItem(
                name=f"orthogonal sums pinch max |lambda| at p={p:g}",
                passed=not failures,
                tolerance=tolerance,
                details={"family": [f"{m.alpha.label()}|{m.beta.label()}" for m, _ in family], "failures": failures},
            )
        )
    rep = boundary_path_rep(quiver, p_values[0] if p_values else 2.0)
    family = orthogonal_family(rep)
    if family:
        tau = family[0][1]
        ok, _ = _pinched(tau + tau, rep.p, 1.0, tolerance)
        report.items.append(ExperimentItem(name="repeated isometry pinches max |lambda|", passed=ok, control=True))
    return _finish(report)


def _spoil(rep: Representation) -> Representation:
    """Gauge by 2 at the first vertex that emits an edge."""
    for v in rep.quiver.vertices:
        if rep.quiver.out_edges(v):
            return gauge_modify(rep, {v: 2})
    raise PreconditionError("Gauge spoiling needs an edge")


def spatiality_experiment(p_values: Sequence[float] = (1.5, 3.0), depth: int = 3) -> ExperimentReport:
    """Criterion sides agree on spatial builders and gauge-spoiled ones; p = 2 counterexample as control."""
    report = ExperimentReport(experiment="spatiality", inputs={"p": list(p_values), "depth": depth})
    a2 = line_graph(2)
    for p in p_values:
        spatial: Dict[str, Representation] = {}
        for name in ("A2", "A3", "T2", "R2"):
            q = standard_graph(name)
            spatial[f"boundary({name})"] = boundary_path_rep(q, p, depth)
            spatial[f"germ({name})"] = germ_groupoid_rep(q, p, depth)
        spatial["amplify(A2,2)"] = amplify(boundary_path_rep(a2, p), 2)
        spatial["shift(A2,3)"] = shift_tensor_rep(boundary_path_rep(a2, p), 3)
        for name, rep in spatial.items():
            for kind, candidate in (("spatial", rep), ("spoiled", _spoil(rep))):
                verdict = spatiality_criterion(candidate, p)
                report.items.append(
                    ExperimentItem(
                        name=f"criterion sides agree on {kind} {name} at p={p:g}",
                        passed=verdict.agree and verdict.lhs == (kind == "spatial"),
                        details={"lhs": verdict.lhs, "rhs": verdict.rhs},
                    )
                )

    pair = Quiver(["v", "w"], [], name="E2")
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]])
    rotated = conjugate(boundary_path_rep(pair, 2.0), hadamard, name="hadamard(E2)")
    verdict = spatiality_criterion(rotated, 2.0)
    report.notes.append("p = 2 is excluded: a unitary conjugate of a spatial representation is contractive but not spatial")
    report.items.append(
        ExperimentItem(
            name="criterion sides agree at p = 2 on a unitary conjugate",
            passed=verdict.agree,
            control=True,
            details={"lhs": verdict.lhs, "rhs": verdict.rhs},
        )
    )
    return _finish(report)


def _brute_force_simple(quiver: Quiver, check_exits: bool = True) -> bool:
    """Two-condition definition by subset and closed-path enumeration."""
    vertices = list(quiver.vertices)
    if not vertices:
        return False
    graph = quiver.adjacency()
    for size in range(1, len(vertices)):
        for subset in itertools.combinations(vertices, size):
            members = set(subset)
            if any(not nx.descendants(graph, v) <= members for v in members):
                continue
            closed = all(
                v in members
                or not quiver.out_edges(v)
                or any(quiver.r(e) not in members for e in quiver.out_edges(v))
                for v in vertices
            )
            if closed:
                return False
    if check_exits:
        for path in paths_up_to(quiver, len(vertices)):
            if path.length and path.src == path.dst:
                on_path = {quiver.s(e) for e in path.edges}
                if all(len(quiver.out_edges(v)) == 1 for v in on_path):
                    return False
    return True


def decider_crosscheck_experiment(max_vertices: int = 3, max_edges: int = 4, p: float = 2.0) -> ExperimentReport:
    """is_simple against brute force on every small connected graph, with witnesses for the non-simple ones."""
    report = ExperimentReport(
        experiment="deciders", inputs={"max_vertices": max_vertices, "max_edges": max_edges}
    )
    graphs = 0
    mismatches = []
    missing_witness = []
    blind_mismatches = 0
    for quiver in enumerate_graphs(max_vertices, max_edges):
        graphs += 1
        decided = is_simple(quiver).simple
        brute = _brute_force_simple(quiver)
        if decided != brute:
            mismatches.append(quiver.to_spec().model_dump(mode="json"))
        if brute != _brute_force_simple(quiver, check_exits=False):
            blind_mismatches += 1
        if not decided:
            witness = simplicity_witness(quiver, p, depth=len(quiver.vertices))
            if not witness.passed:
                missing_witness.append(quiver.to_spec().model_dump(mode="json"))
    report.inputs["graphs"] = graphs
    report.items.append(
        ExperimentItem(name="decider agrees with brute force", passed=not mismatches, details={"mismatches": mismatches})
    )
    report.items.append(
        ExperimentItem(
            name="every non-simple graph has a verified witness",
            passed=not missing_witness,
            details={"missing": missing_witness},
        )
    )
    report.items.append(
        ExperimentItem(
            name="exit-blind decider agrees with brute force",
            passed=blind_mismatches == 0,
            control=True,
            details={"mismatches": blind_mismatches},
        )
    )
    return _finish(report)


# CLI dispatch

ExperimentRunner = Callable[[Optional[Quiver], float, Optional[int], Optional[int]], ExperimentReport]


def _need_graph(quiver: Optional[Quiver]) -> Quiver:
    if quiver is None:
        raise PreconditionError("This experiment needs --graph")
    return quiver


def _run_linfty(quiver: Optional[Quiver], p: float, depth: Optional[int], seed: Optional[int]) -> ExperimentReport:
    return linfty_generators(_need_graph(quiver), depth or 5)[1]


def _run_disjoint(quiver: Optional[Quiver], p: float, depth: Optional[int], seed: Optional[int]) -> ExperimentReport:
    q = _need_graph(quiver)
    return disjoint_translates(q, germ_groupoid_rep(q, p, depth), 2)


EXPERIMENTS: Dict[str, ExperimentRunner] = {
    "uniqueness": lambda q, p, d, s: uniqueness_experiment(_need_graph(q), p, depths=[d] if d else None, seed=s),
    "simplicity": lambda q, p, d, s: simplicity_witness(_need_graph(q), p, depth=d, seed=s),
    "linfty": _run_linfty,
    "gamma": lambda q, p, d, s: gamma_experiment(_need_graph(q), d or 24),
    "disjoint": _run_disjoint,
    "moves": lambda q, p, d, s: seminorm_move_invariance(_need_graph(q), p, depth=d or 4, seed=s),
    "tight-cover": lambda q, p, d, s: tight_cover_experiment(_need_graph(q), d or 3, p),
    "shift-norm": lambda q, p, d, s: shift_norm_experiment(_need_graph(q), (p,), seed=s),
    "orthogonality": lambda q, p, d, s: orthogonality_experiment(_need_graph(q), (p,), seed=s),
    "spatiality": lambda q, p, d, s: spatiality_experiment((p,), d or 3),
    "deciders": lambda q, p, d, s: decider_crosscheck_experiment(),
}


def run_experiment(
    name: str, quiver: Optional[Quiver], p: float, depth: Optional[int] = None, seed: Optional[int] = None
) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise PreconditionError(f"Unknown experiment '{name}', expected one of: {', '.join(EXPERIMENTS)}")
    return EXPERIMENTS[name](quiver, p, depth, seed)


def report_to_csv(report: ExperimentReport) -> str:
    """Rows (element, rep, lower, upper) for every item that records norm intervals."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["element", "rep", "lower", "upper"])
    for item in report.items:
        bounds = item.details.get("bounds")
        if not isinstance(bounds, dict):
            continue
        element = item.details.get("element", item.name)
        for rep, (lower, upper) in sorted(bounds.items()):
            writer.writerow([element, rep, repr(lower), repr(upper)])
    return buffer.getvalue()
