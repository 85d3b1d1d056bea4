"""Unit tests for the experiment drivers."""

import pytest

from lp_graph_algebras.errors import PreconditionError
from lp_graph_algebras.experiments import (
    EXPERIMENTS,
    closed_path_pair,
    gamma_experiment,
    gamma_square_prefix,
    interleaved_word,
    linfty_generators,
    report_to_csv,
    run_experiment,
    sample_elements,
    simplicity_witness,
    square_prefix_free,
    tight_cover_experiment,
    uniqueness_experiment,
)
from lp_graph_algebras.lpa import LeavittPathAlgebra
from lp_graph_algebras.models import ExperimentItem, ExperimentReport


class TestClosedPaths:
    """Test closed path pairs and interleaved words."""

    def test_rose_pair(self, r2):
        """Test that the rose gives the two loops."""
        alpha, beta = closed_path_pair(r2, "v")
        assert alpha.label() == "a"
        assert beta.label() == "b"

    def test_vertex_off_cycle(self, a2):
        """Test that a vertex off every cycle is rejected."""
        with pytest.raises(PreconditionError, match="does not lie on a cycle"):
            closed_path_pair(a2, "v")

    def test_exit_without_return(self, t2):
        """Test a cycle whose only exit never comes back."""
        with pytest.raises(PreconditionError, match="No cycle through v"):
            closed_path_pair(t2, "v")

    def test_interleaved_word(self, r2):
        """Test alpha beta alpha^2 beta^2 prefixes."""
        alpha, beta = closed_path_pair(r2, "v")
        assert interleaved_word(alpha, beta, 6) == ("a", "b", "a", "a", "b", "b")
        assert interleaved_word(alpha, beta, 3, periodic=True) == ("a", "a", "a")
        assert interleaved_word(alpha, beta, 0) == ()

    def test_square_prefix_free(self):
        """Test detection of theta theta prefixes."""
        assert square_prefix_free(("a", "b", "a", "a", "b", "b"))
        assert not square_prefix_free(("a", "a"))
        assert not square_prefix_free(("a", "b", "a", "b", "b"))
        assert square_prefix_free(())

    def test_gamma_prefix_on_rose(self, r2):
        """Test the length 24 prefix at the rose vertex."""
        prefix, free = gamma_square_prefix(r2, "v", 24)
        assert prefix.length == 24
        assert prefix.src == "v"
        assert free
        _, periodic_free = gamma_square_prefix(r2, "v", 24, periodic=True)
        assert not periodic_free

    def test_gamma_needs_cofinal(self, t2):
        """Test that a non-cofinal graph is rejected."""
        with pytest.raises(PreconditionError, match="cofinal"):
            gamma_square_prefix(t2, "v", 8)

    def test_gamma_negative_length(self, r2):
        """Test that a negative length is rejected."""
        with pytest.raises(PreconditionError, match="non-negative"):
            gamma_square_prefix(r2, "v", -1)


class TestSampling:
    """Test seeded element sampling."""

    def test_sample_elements(self, r2_algebra):
        """Test that samples are nonzero and reproducible."""
        first = sample_elements(r2_algebra, 5, seed=3)
        second = sample_elements(r2_algebra, 5, seed=3)
        assert len(first) == 5
        assert all(not x.is_zero() for x in first)
        assert [str(x) for x in first] == [str(x) for x in second]


class TestDrivers:
    """Test the core and supplementary drivers."""

    def test_gamma_experiment(self, r2):
        """Test that the interleaved word passes and the periodic control fails."""
        report = gamma_experiment(r2, 24)
        assert report.experiment == "gamma"
        assert report.passed
        assert report.controls_flagged

    def test_gamma_experiment_acyclic(self, a2):
        """Test that an acyclic graph is rejected."""
        with pytest.raises(PreconditionError, match="cycle"):
            gamma_experiment(a2)

    def test_linfty_generators(self, r2):
        """Test x_i = b^i a on the rose."""
        xs, report = linfty_generators(r2, 3)
        assert len(xs) == 3
        assert str(xs[0]) == "b.a"
        assert report.passed
        assert report.controls_flagged

    def test_linfty_needs_purely_infinite(self, a2):
        """Test that a finite-dimensional algebra is rejected."""
        with pytest.raises(PreconditionError, match="purely infinite"):
            linfty_generators(a2, 2)

    def test_linfty_needs_generators(self, r2):
        """Test that k must be positive."""
        with pytest.raises(PreconditionError, match="At least one"):
            linfty_generators(r2, 0)

    def test_uniqueness_on_acyclic_graph(self, a3):
        """Test that the four exact models give overlapping intervals."""
        report = uniqueness_experiment(a3, 1.5)
        assert report.inputs["elements"] == 8
        assert report.passed
        assert any(item.control for item in report.items)

    def test_uniqueness_on_cyclic_graph(self, r2, r2_algebra):
        """Test per-depth intervals for all four models of the rose, shifted germs included."""
        x = r2_algebra.edge("a") + r2_algebra.edge("b")
        report = uniqueness_experiment(r2, 4.0, [x], depths=[2, 3])
        item = next(item for item in report.items if not item.control)
        models = ("boundary", "germ", "shift:3", "shift:3(germ)")
        assert item.details["depths"] == [2, 3]
        assert len(item.details["gaps"]) == 2
        assert set(item.details["bounds"]) == {f"{name}@{d}" for d in (2, 3) for name in models}
        for lower, upper in item.details["bounds"].values():
            assert lower == pytest.approx(2 ** 0.25, abs=1e-9)
            assert lower <= upper
        assert report.passed
        assert report.controls_flagged
        assert len(report_to_csv(report).splitlines()) == 1 + 8 + 2

    def test_uniqueness_needs_simple_graph(self, t2):
        """Test that a non-simple graph is rejected."""
        with pytest.raises(PreconditionError, match="simple"):
            uniqueness_experiment(t2, 3.0)

    def test_simplicity_witness_cycle(self, r1):
        """Test the kernel witness for a cycle without exits."""
        report = simplicity_witness(r1, depth=2)
        assert report.passed
        assert any("c - c^2" in item.name for item in report.items)

    def test_simplicity_witness_quotient(self, t2):
        """Test the quotient witness for a proper hereditary saturated subset."""
        report = simplicity_witness(t2, depth=2)
        assert report.passed
        assert any("quotient composite kills w" == item.name for item in report.items)

    def test_tight_cover_experiment(self, a2):
        """Test covers and tightness on the line graph."""
        report = tight_cover_experiment(a2, 3)
        assert report.passed
        assert report.controls_flagged

    def test_tight_cover_experiment_rose(self, r2):
        """Test covers of the rose up to length 2."""
        report = tight_cover_experiment(r2, 2)
        assert report.passed
        cover_item = next(item for item in report.items if item.name == "antichain covers of v sum to v")
        assert cover_item.details["covers"] == 5


class TestDispatch:
    """Test experiment dispatch and CSV export."""

    def test_registered_names(self):
        """Test that every driver is registered."""
        assert set(EXPERIMENTS) >= {
            "uniqueness",
            "simplicity",
            "linfty",
            "gamma",
            "disjoint",
            "moves",
            "tight-cover",
            "shift-norm",
            "orthogonality",
            "spatiality",
            "deciders",
        }

    def test_unknown_experiment(self, r2):
        """Test that an unknown name is rejected."""
        with pytest.raises(PreconditionError, match="Unknown experiment"):
            run_experiment("nope", r2, 2.0)

    def test_missing_graph(self):
        """Test that graph experiments need a graph."""
        with pytest.raises(PreconditionError, match="--graph"):
            run_experiment("gamma", None, 2.0)

    def test_run_gamma(self, r2):
        """Test dispatch with the depth used as prefix length."""
        report = run_experiment("gamma", r2, 2.0, depth=12)
        assert report.inputs["length"] == 12

    def test_report_to_csv(self):
        """Test rows for items that record norm intervals."""
        report = ExperimentReport(
            experiment="uniqueness",
            items=[
                ExperimentItem(
                    name="intervals overlap for v",
                    passed=True,
                    details={"element": "v", "bounds": {"germ": [1.0, 1.0], "boundary": [0.5, 1.0]}},
                ),
                ExperimentItem(name="no bounds", passed=True),
            ],
        )
        lines = report_to_csv(report).splitlines()
        assert lines == ["element,rep,lower,upper", "v,boundary,0.5,1.0", "v,germ,1.0,1.0"]

    def test_report_to_csv_empty(self):
        """Test that a report without intervals only has the header."""
        assert report_to_csv(ExperimentReport(experiment="gamma")) == "element,rep,lower,upper\n"

    def test_report_verdict(self):
        """Test that a passing control fails the report."""
        report = ExperimentReport(
            experiment="x",
            items=[ExperimentItem(name="claim", passed=True), ExperimentItem(name="control", passed=True, control=True)],
        )
        assert not report.passed
        assert not report.controls_flagged
        assert report.summary()["failed"] == ["control"]

    def test_report_needs_real_item(self):
        """Test that a report of controls alone does not pass."""
        report = ExperimentReport(experiment="x", items=[ExperimentItem(name="c", passed=False, control=True)])
        assert not report.passed


def test_linfty_products_are_exact(r2):
    """Test x_i^* x_j in the algebra directly."""
    algebra = LeavittPathAlgebra(r2)
    xs, _ = linfty_generators(r2, 2)
    assert xs[0].star() * xs[0] == algebra.vertex("v")
    assert (xs[0].star() * xs[1]).is_zero()
