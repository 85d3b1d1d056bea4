"""Unit tests for measure spaces, spatial partial isometries and the norm engine."""

import math
from fractions import Fraction

import numpy as np
import pytest

from lp_graph_algebras.config import NormConfig
from lp_graph_algebras.errors import PreconditionError, SpatialError
from lp_graph_algebras.models import AtomSpec, MatrixSpec, SpaceSpec
from lp_graph_algebras.spatial import (
    FiniteMeasureSpace,
    SpatialMatrix,
    SpatialSystem,
    block_sup_norm,
    certify,
    is_spatial_partial_isometry,
    opnorm_p,
    power_iteration,
    projection,
    reverse,
    spatial_from_system,
    spectral_norm,
)

AVERAGING = [[0.5, 0.5], [0.5, 0.5]]


class TestFiniteMeasureSpace:
    """Test finite measure spaces."""

    def test_counting(self):
        """Test counting measure."""
        space = FiniteMeasureSpace.counting(3)
        assert space.size == 3
        assert space.is_counting
        assert space.labels == ("0", "1", "2")

    def test_weights(self):
        """Test rational weights."""
        space = FiniteMeasureSpace(["a", "b"], ["1/2", 3])
        assert not space.is_counting
        assert space.weight_array().tolist() == [0.5, 3.0]
        assert space.index("b") == 1

    def test_invalid(self):
        """Test rejected inputs."""
        with pytest.raises(SpatialError, match="unique"):
            FiniteMeasureSpace(["a", "a"])
        with pytest.raises(SpatialError, match="positive"):
            FiniteMeasureSpace(["a"], [0])
        with pytest.raises(SpatialError):
            FiniteMeasureSpace(["a"], [1, 2])
        with pytest.raises(SpatialError, match="Unknown atom"):
            FiniteMeasureSpace(["a"]).index("b")

    def test_product_and_subspace(self):
        """Test product and subspace constructions."""
        left = FiniteMeasureSpace(["a", "b"], [1, 2])
        right = FiniteMeasureSpace(["x"], ["1/2"])
        product = left.product(right)
        assert product.labels == ("a|x", "b|x")
        assert product.weight_array().tolist() == [0.5, 1.0]
        assert left.subspace([1]) == FiniteMeasureSpace(["b"], [2])

    def test_spec_roundtrip(self):
        """Test the space descriptor."""
        space = FiniteMeasureSpace(["a", "b"], ["1/3", 1])
        assert FiniteMeasureSpace.from_spec(space.to_spec()) == space


class TestSpatialSystem:
    """Test spatial systems."""

    def test_injective(self):
        """Test that the atom map must be injective."""
        with pytest.raises(SpatialError, match="not injective"):
            SpatialSystem({0: 1, 1: 1})

    def test_phases(self):
        """Test phase validation."""
        system = SpatialSystem({0: 1}, {1: 1j})
        assert system.phases[1] == 1j
        with pytest.raises(SpatialError, match="unimodular"):
            SpatialSystem({0: 1}, {1: 2.0})
        with pytest.raises(SpatialError, match="outside the range"):
            SpatialSystem({0: 1}, {0: 1.0})

    def test_inverse_and_compose(self):
        """Test inversion and composition."""
        system = SpatialSystem({0: 1, 1: 2}, {1: 1j, 2: -1})
        inverse = system.inverse()
        assert inverse.mapping == {1: 0, 2: 1}
        assert inverse.phases[0] == -1j
        identity = inverse.compose(system)
        assert identity.mapping == {0: 0, 1: 1}
        assert all(abs(h - 1) < 1e-12 for h in identity.phases.values())
        assert system.domain == [0, 1]
        assert system.range == [1, 2]


class TestSpatialMatrix:
    """Test matrices generated by spatial systems."""

    def test_weighted_entry(self):
        """Test entry = phase (mu(x)/mu(S(x)))^(1/p)."""
        space = FiniteMeasureSpace(["a", "b"], [1, 4])
        matrix = spatial_from_system(SpatialSystem({0: 1}), 2.0, space)
        assert matrix.to_dense()[1, 0] == pytest.approx(0.5)
        assert matrix.is_certified

    def test_shape_mismatch(self):
        """Test that data must match the spaces."""
        with pytest.raises(SpatialError, match="does not match"):
            SpatialMatrix(np.eye(2), FiniteMeasureSpace.counting(3))

    def test_composition_keeps_certificate(self):
        """Test that products of certified matrices stay certified."""
        space = FiniteMeasureSpace.counting(3)
        s = spatial_from_system(SpatialSystem({0: 1}), 3.0, space)
        t = spatial_from_system(SpatialSystem({1: 2}), 3.0, space)
        product = t @ s
        assert product.is_certified
        assert product.certificate.system.mapping == {0: 2}
        assert (s + t).certificate is None

    def test_reverse(self):
        """Test the reverse of a spatial partial isometry."""
        space = FiniteMeasureSpace(["a", "b"], [1, 4])
        matrix = spatial_from_system(SpatialSystem({0: 1}, {1: 1j}), 2.0, space)
        back = reverse(matrix)
        assert back.to_dense()[0, 1] == pytest.approx(-2j)
        assert np.allclose((back @ matrix).to_dense(), np.diag([1, 0]))
        with pytest.raises(SpatialError):
            reverse(SpatialMatrix.from_dense(np.eye(2)))

    def test_projection_and_identity(self):
        """Test multiplication operators."""
        space = FiniteMeasureSpace.counting(3)
        assert np.allclose(projection(space, [0, 2]).to_dense(), np.diag([1, 0, 1]))
        assert SpatialMatrix.identity(space).nnz == 3

    def test_entries_and_max_abs(self):
        """Test sparse views."""
        matrix = SpatialMatrix.from_entries([(1, 0, 2.0), (0, 1, -3j)], FiniteMeasureSpace.counting(2))
        assert list(matrix.entries()) == [(0, 1, -3j), (1, 0, 2 + 0j)]
        assert matrix.max_abs() == 3.0
        assert matrix.max_abs(columns=[0]) == 2.0
        assert (matrix * 2).max_abs() == 6.0

    def test_from_spec(self):
        """Test the matrix JSON form."""
        spec = MatrixSpec(
            space=SpaceSpec(atoms=[AtomSpec(label="x"), AtomSpec(label="y", weight="2")]),
            rows=[[(0, 0), (1, 0)], [(0, 0), (0, 1)]],
        )
        matrix = SpatialMatrix.from_spec(spec)
        assert matrix.space.labels == ("x", "y")
        assert matrix.to_dense()[1, 1] == 1j


class TestSpatialDecision:
    """Test the spatiality decision."""

    def test_phased_permutation(self):
        """Test a permutation with phases."""
        ok, system = is_spatial_partial_isometry(np.array([[0, 1j], [-1, 0]]), 3.0)
        assert ok
        assert system.mapping == {0: 1, 1: 0}
        assert system.phases[0] == pytest.approx(1j)

    def test_averaging_not_spatial(self):
        """Test that a column with two entries is not spatial."""
        ok, system = is_spatial_partial_isometry(np.array(AVERAGING), 1.5)
        assert not ok
        assert system is None

    def test_wrong_modulus(self):
        """Test that entries must match the measure ratio."""
        ok, _ = is_spatial_partial_isometry(np.array([[0.5]]), 2.0)
        assert not ok

    def test_weighted_counting(self):
        """Test the ratio check on a weighted space."""
        space = FiniteMeasureSpace(["a", "b"], [1, 4])
        dense = np.array([[0, 0], [0.5, 0]])
        assert is_spatial_partial_isometry(dense, 2.0, space)[0]
        assert not is_spatial_partial_isometry(dense, 3.0, space)[0]

    def test_certify(self):
        """Test attaching a certificate after the fact."""
        matrix = certify(SpatialMatrix.from_dense(np.array([[0, 1], [1, 0]])), 2.0)
        assert matrix.is_certified
        assert not certify(SpatialMatrix.from_dense(np.array(AVERAGING)), 2.0).is_certified


class TestOperatorNorm:
    """Test certified operator-norm intervals."""

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 4.0])
    def test_averaging_matrix(self, p):
        """Test that the averaging matrix has norm 1 for every p."""
        bounds = opnorm_p(np.array(AVERAGING), p)
        assert bounds.lower >= 1.0 - 1e-9
        assert bounds.upper <= 1.0 + 1e-9
        assert bounds.certified

    def test_exact_p1(self):
        """Test the maximal column sum at p = 1."""
        bounds = opnorm_p(np.array([[1.0, 2.0], [3.0, 4.0]]), 1.0)
        assert bounds.lower == bounds.upper == 6.0
        assert bounds.lower_method == "exact-p1"

    def test_exact_p2(self):
        """Test the largest singular value at p = 2."""
        dense = np.array([[1.0, 2.0], [3.0, 4.0]])
        bounds = opnorm_p(dense, 2.0)
        assert bounds.lower == pytest.approx(np.linalg.norm(dense, 2))
        assert bounds.upper_method == "exact-svd"

    def test_interval_contains_norm(self):
        """Test a general matrix at p = 3 against a direct lower bound."""
        dense = np.array([[1.0, 2.0], [3.0, 4.0]])
        bounds = opnorm_p(dense, 3.0)
        assert bounds.lower <= bounds.upper
        column_norm = max((np.abs(dense[:, j]) ** 3).sum() ** (1 / 3) for j in range(2))
        assert bounds.lower >= column_norm - 1e-12
        # interpolation between the column-sum (6) and row-sum (7) norms
        assert bounds.upper <= 6.0 ** (1 / 3) * 7.0 ** (2 / 3) + 1e-9

    def test_components(self):
        """Test that disconnected blocks are handled separately."""
        bounds = opnorm_p(np.diag([2.0, 0.5]), 3.0)
        assert bounds.lower == pytest.approx(2.0)
        assert bounds.upper == pytest.approx(2.0)

    def test_spatial_shortcut(self):
        """Test that certified spatial matrices have norm exactly 1."""
        space = FiniteMeasureSpace(["a", "b"], [1, 4])
        matrix = spatial_from_system(SpatialSystem({0: 1}), 3.0, space)
        bounds = opnorm_p(matrix, 3.0)
        assert (bounds.lower, bounds.upper) == (1.0, 1.0)
        assert bounds.lower_method == "spatial"

    def test_zero(self):
        """Test the zero operator."""
        bounds = opnorm_p(np.zeros((2, 2)), 1.5)
        assert (bounds.lower, bounds.upper) == (0.0, 0.0)

    def test_weighted_space(self):
        """Test that weights rescale the norm."""
        space = FiniteMeasureSpace(["a", "b"], [1, 4])
        dense = np.array([[0, 0], [1.0, 0]])
        bounds = opnorm_p(dense, 2.0, space)
        assert bounds.lower == pytest.approx(2.0)

    def test_intervals_are_sound(self):
        """Test 500 random matrices: no vector beats the upper bound, exact at p = 1 and 2."""
        rng = np.random.default_rng(2024)
        exponents = [1.0, 1.5, 2.0, 3.0, 4.0]
        for _ in range(500):
            rows, cols = (int(n) for n in rng.integers(1, 5, size=2))
            dense = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            dense[rng.random((rows, cols)) < 0.3] = 0.0
            p = exponents[int(rng.integers(len(exponents)))]
            bounds = opnorm_p(SpatialMatrix.from_dense(dense), p)
            assert bounds.lower <= bounds.upper
            for x in rng.standard_normal((3, cols)):
                ratio = np.linalg.norm(dense @ x, p) / np.linalg.norm(x, p)
                assert ratio <= bounds.upper * (1 + 1e-9) + 1e-12
            if p in (1.0, 2.0):
                assert bounds.upper - bounds.lower <= 1e-12
            if p == 1.0:
                assert bounds.lower == pytest.approx(np.abs(dense).sum(axis=0).max(), abs=1e-12)
            if p == 2.0:
                assert bounds.lower == pytest.approx(np.linalg.norm(dense, 2), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_weighted_rescaling_is_isometric(self, p):
        """Test that conjugating by the weight isometry leaves the interval unchanged."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            dense = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            powers = [int(k) for k in rng.integers(-2, 3, size=n)]
            scale = np.array([2.0 ** k for k in powers])
            # weights are scale^p, so the rescaling is exact in floating point
            space = FiniteMeasureSpace([str(i) for i in range(n)], [Fraction(2) ** int(k * p) for k in powers])
            weighted = opnorm_p(SpatialMatrix.from_dense(dense / scale[:, None] * scale[None, :], space), p)
            plain = opnorm_p(SpatialMatrix.from_dense(dense), p)
            assert weighted.lower == pytest.approx(plain.lower, abs=1e-12)
            assert weighted.upper == pytest.approx(plain.upper, abs=1e-12)

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_weighted_rescaling_general_exponent(self, p):
        """Test the same invariance with rational weights, up to the iteration tolerance."""
        rng = np.random.default_rng(8)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            dense = rng.standard_normal((n, n))
            weights = [Fraction(int(a), int(b)) for a, b in rng.integers(1, 6, size=(n, 2))]
            scale = np.array([float(w) ** (1.0 / p) for w in weights])
            space = FiniteMeasureSpace([str(i) for i in range(n)], weights)
            weighted = opnorm_p(SpatialMatrix.from_dense(dense / scale[:, None] * scale[None, :], space), p)
            plain = opnorm_p(SpatialMatrix.from_dense(dense), p)
            assert weighted.upper == pytest.approx(plain.upper, rel=1e-9)
            assert weighted.lower == pytest.approx(plain.lower, rel=1e-7)

    def test_invalid_exponent(self):
        """Test that p must lie in [1, inf)."""
        with pytest.raises(PreconditionError):
            opnorm_p(np.eye(2), 0.5)
        with pytest.raises(PreconditionError):
            opnorm_p(np.eye(2), math.inf)

    def test_options(self):
        """Test that explicit options are honoured."""
        options = NormConfig(restarts=0, max_iterations=50, seed=1)
        bounds = opnorm_p(np.array([[1.0, 1.0], [0.0, 1.0]]), 3.0, options=options)
        assert bounds.lower <= bounds.upper

    def test_block_sup_norm(self):
        """Test the supremum over blocks."""
        bounds = block_sup_norm({"x": np.eye(2), "y": np.array([[3.0]])}, 1.0)
        assert bounds.lower == bounds.upper == 3.0
        empty = block_sup_norm({}, 2.0)
        assert empty.upper == 0.0

    def test_spectral_norm(self):
        """Test the sparse spectral norm helper."""
        matrix = SpatialMatrix.from_dense(np.diag([1.0, 5.0]))
        assert spectral_norm(matrix.data) == pytest.approx(5.0)

    def test_power_iteration_monotone(self):
        """Test that the best-so-far history never decreases."""
        dense = np.array([[1.0, 2.0], [0.5, -1.0]], dtype=complex)
        value, vector, history = power_iteration(dense, 3.0, np.ones((2, 1), dtype=complex))
        assert all(b >= a for a, b in zip(history, history[1:]))
        assert value == pytest.approx(history[-1])
        assert vector.shape == (2,)
