"""Command-line front end: lp-graph-algebras <subcommand> [options].

Reports go to stdout as JSON with sorted keys (or CSV for experiments);
logs go to stderr. Exit codes: 0 success, 1 failed experiment or internal
error, 2 precondition violation, 3 parse error.
"""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

import structlog

from lp_graph_algebras import __version__
from lp_graph_algebras.config import load_config, set_config
from lp_graph_algebras.errors import (
    EXIT_FAILURE,
    EXIT_OK,
    LpGraphError,
    ParseError,
    PreconditionError,
    exit_code_for,
)
from lp_graph_algebras.experiments import EXPERIMENTS, report_to_csv, run_experiment
from lp_graph_algebras.lpa import LeavittPathAlgebra
from lp_graph_algebras.models import MatrixSpec
from lp_graph_algebras.parser import parse_element, parse_exponent
from lp_graph_algebras.quiver import (
    Quiver,
    cycles,
    export_dot,
    has_exit,
    hereditary_saturated_subsets,
    is_cofinal,
    is_purely_infinite_simple,
    is_simple,
    load_graph,
)
from lp_graph_algebras.reps import build_representation, spatiality_criterion
from lp_graph_algebras.semigroup import check_tightness, vertex_cover_samples
from lp_graph_algebras.spatial import SpatialMatrix, is_spatial_partial_isometry, opnorm_p

logger = structlog.get_logger(__name__)


def configure_logging(level: str = "INFO") -> None:
    """Route structlog through stdlib logging to stderr."""
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=getattr(logging, level.upper()), force=True)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )


def dump(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def _graph(args: argparse.Namespace) -> Quiver:
    if not args.graph:
        raise PreconditionError("--graph is required")
    quiver = load_graph(args.graph)
    logger.info("Loaded graph", graph=quiver.name, vertices=len(quiver.vertices), edges=len(quiver.edges))
    return quiver


def _elements(args: argparse.Namespace, quiver: Quiver, algebra: LeavittPathAlgebra) -> List[Any]:
    if not args.element:
        raise PreconditionError("--element is required")
    return [parse_element(text, quiver, algebra) for text in args.element]


def _element_payload(x: Any) -> Dict[str, Any]:
    return {"element": str(x), "terms": [t.model_dump(mode="json") for t in x.to_terms()]}


# Subcommands


def cmd_graph_info(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    return {
        "name": quiver.name,
        "vertices": list(quiver.vertices),
        "edges": [{"name": e.name, "src": e.src, "dst": e.dst} for e in quiver.edges],
        "sinks": quiver.sinks(),
        "sources": quiver.sources(),
        "cycles": [{"edges": list(c.edges), "exit": has_exit(quiver, c)} for c in cycles(quiver)],
        "hereditary_saturated": [sorted(h) for h in hereditary_saturated_subsets(quiver)],
        "cofinal": is_cofinal(quiver),
    }


def cmd_simplicity(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    report = is_simple(quiver)
    payload: Dict[str, Any] = {"simple": report.simple, "purely_infinite": is_purely_infinite_simple(quiver)}
    if not report.simple:
        payload["reason"] = report.reason
        if report.witness_vertices:
            payload["witness_vertices"] = report.witness_vertices
        if report.witness_cycle:
            payload["witness_cycle"] = report.witness_cycle
    return payload


def cmd_normalize(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    algebra = LeavittPathAlgebra(quiver)
    return _element_payload(_elements(args, quiver, algebra)[0])


def cmd_multiply(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    algebra = LeavittPathAlgebra(quiver)
    factors = _elements(args, quiver, algebra)
    product = factors[0]
    for x in factors[1:]:
        product = algebra.mul(product, x)
    return {"factors": [str(x) for x in factors], **_element_payload(product)}


def cmd_norm(args: argparse.Namespace) -> Dict[str, Any]:
    p = parse_exponent(args.p)
    if args.matrix:
        with open(args.matrix, encoding="utf-8") as f:
            matrix = SpatialMatrix.from_spec(MatrixSpec.model_validate(json.load(f)))
        spatial, _ = is_spatial_partial_isometry(matrix, p)
        return {"matrix": args.matrix, "spatial": spatial, "bounds": opnorm_p(matrix, p).model_dump(mode="json")}
    quiver = _graph(args)
    algebra = LeavittPathAlgebra(quiver)
    x = _elements(args, quiver, algebra)[0]
    rep = build_representation(args.rep, quiver, p, args.depth)
    bounds = opnorm_p(rep.exact_image(x), p)
    return {
        "element": str(x),
        "rep": rep.name,
        "atoms": rep.dimension,
        "masked": len(rep.mask),
        "bounds": bounds.model_dump(mode="json"),
    }


def cmd_rep_build(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    rep = build_representation(args.rep, quiver, parse_exponent(args.p), args.depth)
    return rep.to_bundle().model_dump(mode="json")


def cmd_rep_check(args: argparse.Namespace) -> Dict[str, Any]:
    quiver = _graph(args)
    p = parse_exponent(args.p)
    rep = build_representation(args.rep, quiver, p, args.depth)
    relations = rep.check_relations()
    payload: Dict[str, Any] = {
        "rep": rep.name,
        "atoms": rep.dimension,
        "relations": relations.model_dump(mode="json"),
        "spatial": rep.is_spatial(),
        "tightness": check_tightness(rep, vertex_cover_samples(quiver, 2)).model_dump(mode="json"),
    }
    if not relations.degenerate:
        payload["criterion"] = spatiality_criterion(rep, p).model_dump(mode="json")
    return payload


def cmd_export_dot(args: argparse.Namespace) -> str:
    return export_dot(_graph(args))


Handler = Callable[[argparse.Namespace], Any]

COMMANDS: Dict[str, Handler] = {
    "graph-info": cmd_graph_info,
    "simplicity": cmd_simplicity,
    "normalize": cmd_normalize,
    "multiply": cmd_multiply,
    "norm": cmd_norm,
    "rep-build": cmd_rep_build,
    "rep-check": cmd_rep_check,
    "export-dot": cmd_export_dot,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lp-graph-algebras",
        description="Leavitt path algebras of finite graphs and their spatial Lp representations",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-c", "--config", default=None, help="Path to configuration file")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="Graph JSON file or catalogue name (E1, T2, A<n>, R<n>)")
    common.add_argument("--p", default="2", help="Exponent p >= 1, decimal or rational such as 3/2")
    common.add_argument("--depth", type=int, default=None, help="Truncation depth for representation builders")
    common.add_argument("--seed", type=int, default=None, help="Seed for random sampling")
    common.add_argument("--format", choices=["json", "csv"], default="json", help="Report format")
    common.add_argument("--element", action="append", default=[], help="Element expression (repeatable)")
    common.add_argument("--rep", default="boundary", help="Representation: boundary, germ or shift:N")

    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "graph-info": "Vertex classes, cycles and hereditary saturated sets",
        "simplicity": "Decide simplicity and pure infiniteness",
        "normalize": "Normal form of an element",
        "multiply": "Product of the given elements in order",
        "norm": "Certified p-operator-norm interval",
        "rep-build": "Build a representation and print its images",
        "rep-check": "Check relations, spatiality and tightness of a representation",
        "export-dot": "Graphviz rendering of the graph",
    }
    for name, text in helps.items():
        sub = subparsers.add_parser(name, parents=[common], help=text)
        if name == "norm":
            sub.add_argument("--matrix", default=None, help="Matrix JSON file instead of an element")
    experiment = subparsers.add_parser("experiment", parents=[common], help="Run a checked experiment")
    experiment.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS), help="Experiment name")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, print the report; returns the exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        set_config(config)
        configure_logging(args.log_level or config.server.log_level)

        if args.command == "experiment":
            quiver = _graph(args) if args.graph else None
            report = run_experiment(args.experiment, quiver, parse_exponent(args.p), args.depth, args.seed)
            if args.format == "csv":
                sys.stdout.write(report_to_csv(report))
            else:
                payload = report.model_dump(mode="json")
                payload.update({"passed": report.passed, "controls_flagged": report.controls_flagged})
                sys.stdout.write(dump(payload) + "\n")
            return EXIT_OK if report.passed else EXIT_FAILURE

        if args.format == "csv":
            raise PreconditionError("CSV output is only available for experiments")
        result = COMMANDS[args.command](args)
        sys.stdout.write(result if isinstance(result, str) else dump(result) + "\n")
        return EXIT_OK
    except ParseError as e:
        logger.error("Parse error", error=e.message, position=e.position)
        sys.stderr.write(e.render() + "\n")
        return exit_code_for(e)
    except (LpGraphError, FileNotFoundError) as e:
        logger.error("Command failed", command=args.command, error=str(e))
        sys.stderr.write(f"error: {e}\n")
        return exit_code_for(e) if isinstance(e, LpGraphError) else EXIT_FAILURE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
