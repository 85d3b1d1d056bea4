"""Unit tests for representation builders, checks and transforms."""

import numpy as np
import pytest

from lp_graph_algebras.errors import PreconditionError, RepresentationError
from lp_graph_algebras.lpa import LeavittPathAlgebra
from lp_graph_algebras.models import GeneratorKind, MoveKind
from lp_graph_algebras.quiver import quotient_graph, standard_graph
from lp_graph_algebras.reps import (
    BuilderMetadata,
    PointAction,
    RepresentationRegistry,
    amplify,
    boundary_path_rep,
    build_representation,
    conjugate,
    extend_along_move,
    extract_corner,
    gauge_modify,
    germ_groupoid_rep,
    is_approximately_free,
    is_free,
    orthogonal_family,
    pad_atoms,
    path_length_levels,
    permute_atoms,
    pullback_along_quotient,
    register_builtin_builders,
    restrict_nondegenerate,
    shift_partition,
    shift_tensor_rep,
    spatiality_criterion,
)
from lp_graph_algebras.reps.boundary import exact_depth
from lp_graph_algebras.spatial import opnorm_p

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


class TestBoundaryRep:
    """Test the boundary-path model."""

    def test_line_graph_atoms(self, a2):
        """Test that acyclic graphs use their whole finite boundary."""
        rep = boundary_path_rep(a2, 3.0, depth=0)
        assert rep.name == "boundary(A2,1)"
        assert rep.space.labels == ("w", "e")
        assert rep.mask == frozenset()
        assert rep.vertex_support("v") == [1]

    def test_line_graph_relations(self, a3):
        """Test that the relations hold exactly."""
        rep = boundary_path_rep(a3, 1.5)
        report = rep.check_relations()
        assert report.exact
        assert not report.degenerate
        assert rep.is_spatial()

    def test_rose_truncation(self, r2):
        """Test atom counts and the mask for the rose."""
        rep = boundary_path_rep(r2, 2.0, depth=2)
        assert rep.dimension == 8
        assert len(rep.mask) == 4
        labels = set(rep.space.labels)
        assert {"(a)^inf", "(b)^inf", "b(a)^inf", "a(b)^inf"} <= labels

    def test_rose_relations_on_interior(self, r2):
        """Test that relations hold off the mask."""
        report = boundary_path_rep(r2, 3.0, depth=3).check_relations()
        assert report.max_residual == pytest.approx(0.0, abs=1e-12)
        assert report.masked_atoms > 0
        assert not report.degenerate

    def test_cycle_with_exit(self, t2):
        """Test mixed finite and infinite boundary paths."""
        rep = boundary_path_rep(t2, 2.0, depth=2)
        labels = set(rep.space.labels)
        assert {"w", "e", "c.e", "(c)^inf"} <= labels
        assert rep.check_relations().max_residual == pytest.approx(0.0, abs=1e-12)

    def test_exact_depth(self, a3, r2):
        """Test the longest path of acyclic graphs."""
        assert exact_depth(a3) == 2
        assert exact_depth(r2) is None

    def test_path_length_levels(self, a3):
        """Test the partition of a finite model by prefix length."""
        rep = boundary_path_rep(a3, 2.0)
        assert path_length_levels(rep) == [[0], [1], [2]]

    def test_negative_depth(self, r2):
        """Test that depth must be non-negative."""
        with pytest.raises(PreconditionError):
            boundary_path_rep(r2, 2.0, depth=-1)

    def test_atom_limit(self, r2, test_config):
        """Test the configured atom limit."""
        test_config.representations.max_atoms = 5
        with pytest.raises(PreconditionError, match="atoms"):
            boundary_path_rep(r2, 2.0, depth=3)


class TestEvaluation:
    """Test evaluation of elements."""

    def test_evaluate_edge(self, a2, a2_algebra):
        """Test that rho(e) maps the sink atom to e."""
        rep = boundary_path_rep(a2, 2.0)
        image = rep.evaluate(a2_algebra.edge("e")).to_dense()
        assert np.allclose(image, [[0, 0], [1, 0]])

    def test_unit_image(self, a2):
        """Test that the vertex images sum to the identity."""
        rep = boundary_path_rep(a2, 2.0)
        assert np.allclose(rep.unit_image().to_dense(), np.eye(2))

    def test_evaluate_wrong_graph(self, a2, r2_algebra):
        """Test evaluation of an element of another algebra."""
        rep = boundary_path_rep(a2, 2.0)
        with pytest.raises(PreconditionError):
            rep.evaluate(r2_algebra.vertex("v"))

    def test_exact_columns(self, r2, r2_algebra):
        """Test that columns passing through masked atoms are dropped."""
        rep = boundary_path_rep(r2, 2.0, depth=2)
        x = r2_algebra.edge("a")
        columns = rep.exact_columns(x)
        assert not set(columns) & set(rep.mask)
        assert rep.exact_image(x).shape == (rep.dimension, len(columns))

    def test_norm_of_partial_isometry(self, a2, a2_algebra):
        """Test that e + e^* acts as a permutation."""
        rep = boundary_path_rep(a2, 3.0)
        bounds = opnorm_p(rep.exact_image(a2_algebra.edge("e") + a2_algebra.ghost("e")), 3.0)
        assert bounds.lower == pytest.approx(1.0)
        assert bounds.upper == pytest.approx(1.0)

    def test_bundle(self, a2):
        """Test the serialized representation."""
        bundle = boundary_path_rep(a2, 2.0).to_bundle()
        assert set(bundle.images) == {"v", "w", "e", "e*"}
        assert bundle.images["e"] == [(1, 0, 1.0, 0.0)]
        assert bundle.residual.exact


class TestGermRep:
    """Test the germ-groupoid model."""

    def test_point_action(self, r2):
        """Test that the pairing bijections invert the decoding."""
        action = PointAction(r2)
        for x in range(10):
            for e in r2.edge_names:
                assert action.next_edge(action.edge_map(e, x)) == (e, x)

    def test_point_action_sink(self, a2):
        """Test decoding stops at sinks."""
        action = PointAction(a2)
        path, rest = action.decode(0, 5)
        assert path.edges == ("e",)
        assert action.vertex_of(rest) == "w"

    def test_relations(self, r2):
        """Test the relations off the mask."""
        rep = germ_groupoid_rep(r2, 3.0, depth=3)
        report = rep.check_relations()
        assert report.max_residual == pytest.approx(0.0, abs=1e-12)
        assert not report.degenerate
        assert rep.is_spatial()

    def test_line_graph(self, a2):
        """Test the germ model on a line graph."""
        rep = germ_groupoid_rep(a2, 2.0, depth=2)
        assert rep.dimension == 4
        assert rep.check_relations().max_residual == pytest.approx(0.0, abs=1e-12)

    def test_invalid_parameters(self, r2):
        """Test parameter validation."""
        with pytest.raises(PreconditionError):
            germ_groupoid_rep(r2, 2.0, depth=-1)
        with pytest.raises(PreconditionError):
            germ_groupoid_rep(r2, 2.0, points_per_vertex=0)


class TestRegistry:
    """Test named builders."""

    def test_builtin(self):
        """Test the builtin builders are registered."""
        register_builtin_builders()
        assert {"boundary", "germ", "shift"} <= set(RepresentationRegistry.list())
        info = RepresentationRegistry.list_with_info()["shift"]
        assert info.capabilities["parametric"]

    def test_build_references(self, a2):
        """Test references with and without a parameter."""
        assert build_representation("boundary", a2, 2.0).name == "boundary(A2,1)"
        rep = build_representation("shift:2", a2, 2.0)
        assert rep.name == "shift2(boundary(A2,1))"
        assert rep.dimension == 4

    def test_bad_references(self, a2):
        """Test rejected references."""
        with pytest.raises(PreconditionError, match="Unknown representation"):
            build_representation("nope", a2, 2.0)
        with pytest.raises(PreconditionError, match="takes no parameter"):
            build_representation("germ:2", a2, 2.0)
        with pytest.raises(PreconditionError, match="integer"):
            build_representation("shift:x", a2, 2.0)

    def test_register_and_unregister(self):
        """Test custom builders."""
        RepresentationRegistry.register(
            "custom",
            lambda quiver, p, depth: boundary_path_rep(quiver, p, depth),
            BuilderMetadata(name="custom", display_name="Custom"),
        )
        try:
            assert "custom" in RepresentationRegistry.list()
            with pytest.raises(ValueError, match="already registered"):
                RepresentationRegistry.register("custom", lambda q, p, d: None)
        finally:
            RepresentationRegistry.unregister("custom")
        with pytest.raises(KeyError):
            RepresentationRegistry.get("custom")
        with pytest.raises(ValueError):
            RepresentationRegistry.register("a:b", lambda q, p, d: None)


class TestTransforms:
    """Test constructions on representations."""

    def test_shift_tensor(self, a2):
        """Test that the shift tensor is approximately free."""
        rep = shift_tensor_rep(boundary_path_rep(a2, 2.0), 3)
        partition = shift_partition(rep, 3)
        assert rep.dimension == 6
        assert is_approximately_free(rep, partition)
        assert not is_free(rep, partition)
        assert rep.check_relations().exact

    def test_shift_partition_size(self, a2):
        """Test the modulus must divide the atom count."""
        rep = boundary_path_rep(a2, 2.0)
        with pytest.raises(PreconditionError):
            shift_partition(rep, 3)

    def test_free_partition_must_cover(self, a2):
        """Test the partition validation."""
        rep = boundary_path_rep(a2, 2.0)
        with pytest.raises(PreconditionError, match="cover"):
            is_free(rep, [[0]])
        with pytest.raises(PreconditionError, match="two cells"):
            is_free(rep, [[0, 1], [1]])

    def test_amplify_and_corner(self, a2):
        """Test amplification and corner recovery."""
        rep = boundary_path_rep(a2, 2.0)
        big = amplify(rep, 2)
        assert big.quiver.name == "M2A2"
        assert big.dimension == 4
        assert big.check_relations().exact
        corner = extract_corner(big, a2, 2)
        assert corner.deviation == pytest.approx(0.0, abs=1e-12)
        assert corner.sigma.dimension == 2
        assert corner.sigma.is_spatial()

    def test_corner_preconditions(self, a2):
        """Test corner validation."""
        big = amplify(boundary_path_rep(a2, 2.0), 2)
        with pytest.raises(PreconditionError):
            extract_corner(big, a2, 2, corner=3)
        with pytest.raises(PreconditionError):
            extract_corner(big, standard_graph("R2"), 2)

    def test_gauge(self, a2):
        """Test a unimodular gauge keeps the representation spatial."""
        rep = gauge_modify(boundary_path_rep(a2, 3.0), {"v": 1j})
        assert rep.edge_image("e").to_dense()[1, 0] == pytest.approx(1j)
        assert rep.is_spatial()
        assert rep.check_relations().max_residual == pytest.approx(0.0, abs=1e-12)

    def test_gauge_singular(self, a2):
        """Test that gauge blocks must be invertible."""
        with pytest.raises(RepresentationError, match="not invertible"):
            gauge_modify(boundary_path_rep(a2, 3.0), {"v": 0})

    def test_extend_along_desingularization(self, a2):
        """Test extension to the graph with a tail."""
        rep = boundary_path_rep(a2, 2.0)
        extended = extend_along_move(rep, MoveKind.DESINGULARIZATION, 2)
        assert extended.quiver.name == "A2#2"
        assert extended.dimension == 4
        report = extended.check_relations()
        assert report.exact
        assert not report.degenerate

    def test_extend_along_source_removal(self, a3):
        """Test extension to the graph with a head."""
        rep = boundary_path_rep(a3, 3.0)
        extended = extend_along_move(rep, MoveKind.SOURCE_REMOVAL, 1)
        assert extended.quiver.has_edge("fh1_v1")
        assert extended.check_relations().exact

    def test_restrict_and_pad(self, a2):
        """Test padding with zero atoms and dropping them again."""
        rep = boundary_path_rep(a2, 2.0)
        padded = pad_atoms(rep, 2)
        assert padded.dimension == 4
        assert padded.check_relations().degenerate
        restored = restrict_nondegenerate(padded)
        assert restored.dimension == 2
        assert not restored.check_relations().degenerate

    def test_permute(self, a2):
        """Test relabelling atoms."""
        rep = boundary_path_rep(a2, 2.0)
        swapped = permute_atoms(rep, [1, 0])
        assert swapped.space.labels == ("e", "w")
        assert swapped.check_relations().exact
        with pytest.raises(PreconditionError):
            permute_atoms(rep, [0, 0])

    def test_conjugate(self, a2):
        """Test conjugation by an invertible matrix."""
        rep = conjugate(boundary_path_rep(a2, 2.0), HADAMARD)
        assert not rep.is_spatial()
        assert rep.check_relations().max_residual < 1e-12
        with pytest.raises(RepresentationError):
            conjugate(rep, np.zeros((2, 2)))

    def test_pullback(self, t2):
        """Test pulling back along L_Q -> L_{Q/H}."""
        quotient = quotient_graph(t2, {"w"})
        rep = boundary_path_rep(quotient, 2.0, depth=2)
        pulled = pullback_along_quotient(rep, t2, ["w"])
        assert pulled.quiver == t2
        assert pulled.edge_image("e").nnz == 0
        report = pulled.check_relations()
        assert report.max_residual == pytest.approx(0.0, abs=1e-12)
        assert not report.degenerate
        with pytest.raises(PreconditionError):
            pullback_along_quotient(rep, t2, ["v"])

    def test_orthogonal_family(self, r2):
        """Test that harvested images have disjoint domains and ranges."""
        rep = boundary_path_rep(r2, 2.0, depth=3)
        family = orthogonal_family(rep, max_length=2)
        assert family
        rows, cols = set(), set()
        for monomial, image in family:
            assert not monomial.is_idempotent()
            system = image.certificate.system
            assert not rows & set(system.range)
            assert not cols & set(system.domain)
            rows |= set(system.range)
            cols |= set(system.domain)


class TestSpatialityCriterion:
    """Test both sides of the spatiality criterion."""

    def test_spatial_rep(self, a2):
        """Test that a spatial representation satisfies both sides."""
        verdict = spatiality_criterion(boundary_path_rep(a2, 3.0))
        assert verdict.lhs
        assert verdict.rhs
        assert verdict.agree

    def test_hilbert_exponent(self, a2):
        """Test that unitary conjugation at p = 2 is contractive but not spatial."""
        rep = conjugate(boundary_path_rep(a2, 2.0), HADAMARD)
        verdict = spatiality_criterion(rep)
        assert not verdict.lhs
        assert verdict.rhs
        assert not verdict.agree
        assert "note" in verdict.details

    def test_degenerate(self, a2):
        """Test that degenerate representations are rejected."""
        with pytest.raises(RepresentationError, match="nondegenerate"):
            spatiality_criterion(pad_atoms(boundary_path_rep(a2, 3.0), 1))

    def test_explicit_samples(self, a2):
        """Test the criterion with given samples of (L_Q)_{0,1}."""
        algebra = LeavittPathAlgebra(a2)
        samples = [algebra.vertex("v") + algebra.vertex("w")]
        verdict = spatiality_criterion(boundary_path_rep(a2, 1.5), samples=samples)
        assert verdict.details["samples"] == 1
        assert verdict.agree
