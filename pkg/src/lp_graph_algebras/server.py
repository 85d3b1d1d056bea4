"""FastMCP server exposing graph analyses, element arithmetic, norms and experiments as tools.

Start with: fastmcp run lp_graph_algebras.server:create_mcp
"""

import os
from typing import Any, Dict, List, Optional

import structlog
from fastmcp import FastMCP

from lp_graph_algebras import __version__
from lp_graph_algebras.cache import Cache, init_cache
from lp_graph_algebras.config import Config, get_config, load_config, set_config
from lp_graph_algebras.errors import LpGraphError, ParseError
from lp_graph_algebras.experiments import EXPERIMENTS, run_experiment
from lp_graph_algebras.lpa import LeavittPathAlgebra
from lp_graph_algebras.models import GraphSpec
from lp_graph_algebras.parser import parse_element, parse_exponent
from lp_graph_algebras.quiver import (
    Quiver,
    cycles,
    has_exit,
    is_purely_infinite_simple,
    is_simple,
    load_graph,
)
from lp_graph_algebras.reps import RepresentationRegistry, build_representation, register_builtin_builders
from lp_graph_algebras.spatial import opnorm_p

logger = structlog.get_logger(__name__)

CONFIG_ENV = "LP_GRAPH_CONFIG_FILE"


def _resolve_graph(graph: Any) -> Quiver:
    """A catalogue name, a file path, or an inline Graph JSON object."""
    if isinstance(graph, dict):
        return Quiver.from_spec(GraphSpec.model_validate(graph), name=graph.get("name", "Q"))
    return load_graph(str(graph))


def _error(e: LpGraphError) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"error": str(e), "kind": type(e).__name__}
    if isinstance(e, ParseError):
        payload["span"] = list(e.span)
    return payload


class LpGraphServer:
    """MCP front end over the toolkit."""

    def __init__(self, config: Optional[Config] = None) -> None:
        """Initialize the server.

        Args:
            config: Server configuration
        """
        self.config = config or get_config()
        set_config(self.config)
        self.mcp = FastMCP(name=self.config.server.name, version=self.config.server.version)
        self.cache = init_cache(self.config.cache)
        self.server_info = {
            "name": self.config.server.name,
            "version": self.config.server.version,
            "description": self.config.server.description,
            "package": __version__,
        }
        self.logger = logger.bind(server=self.config.server.name)
        register_builtin_builders()
        self._register_tools()
        self.logger.info("Server initialized", name=self.config.server.name, version=self.config.server.version)

    def _cached(self, prefix: str, params: Dict[str, Any], compute: Any) -> Dict[str, Any]:
        if not self.config.cache.enabled:
            return compute()
        key = Cache._generate_key(prefix, params)
        return self.cache.get_or_compute(key, compute)

    def _register_tools(self) -> None:
        """Register MCP tools."""
        server_info = self.server_info
        cache = self.cache
        cached = self._cached

        @self.mcp.tool()
        async def get_server_info() -> Dict[str, Any]:
            """Server name, version, registered representations, experiments and cache statistics."""
            return {
                "server": server_info,
                "representations": RepresentationRegistry.list(),
                "experiments": sorted(EXPERIMENTS),
                "cache": cache.get_stats(),
            }

        @self.mcp.tool()
        async def list_representations() -> Dict[str, Any]:
            """Registered representation builders with their capabilities."""
            infos = RepresentationRegistry.list_with_info()
            return {
                "total": len(infos),
                "builders": {name: info.model_dump() for name, info in infos.items()},
            }

        @self.mcp.tool()
        async def analyze_graph(graph: Any) -> Dict[str, Any]:
            """Simplicity, pure infiniteness and cycle structure of a graph.

            Args:
                graph: Catalogue name (E1, T2, A<n>, R<n>), Graph JSON path, or inline Graph JSON
            """
            try:
                quiver = _resolve_graph(graph)
            except LpGraphError as e:
                return _error(e)

            def compute() -> Dict[str, Any]:
                report = is_simple(quiver)
                return {
                    "graph": quiver.name,
                    "simplicity": report.model_dump(mode="json"),
                    "purely_infinite": is_purely_infinite_simple(quiver),
                    "cycles": [{"edges": list(c.edges), "exit": has_exit(quiver, c)} for c in cycles(quiver)],
                }

            return cached("analyze", {"graph": quiver.to_spec().model_dump(mode="json")}, compute)

        @self.mcp.tool()
        async def normalize_element(graph: Any, elements: List[str]) -> Dict[str, Any]:
            """Normal form of the product of the given element expressions.

            Args:
                graph: Catalogue name, Graph JSON path, or inline Graph JSON
                elements: Expressions such as "2*e.e* - v"; one expression just normalizes
            """
            try:
                quiver = _resolve_graph(graph)
                algebra = LeavittPathAlgebra(quiver)
                xs = [parse_element(text, quiver, algebra) for text in elements]
            except LpGraphError as e:
                return _error(e)
            if not xs:
                return {"error": "No elements given", "kind": "PreconditionError"}
            product = xs[0]
            for x in xs[1:]:
                product = algebra.mul(product, x)
            return {"element": str(product), "terms": [t.model_dump(mode="json") for t in product.to_terms()]}

        @self.mcp.tool()
        async def element_norm(
            graph: Any, element: str, p: str = "2", rep: str = "boundary", depth: Optional[int] = None
        ) -> Dict[str, Any]:
            """Certified p-operator-norm interval of an element in a spatial representation.

            Args:
                graph: Catalogue name, Graph JSON path, or inline Graph JSON
                element: Element expression
                p: Exponent, decimal or rational such as "3/2"
                rep: boundary, germ or shift:N
                depth: Truncation depth for cyclic graphs
            """
            try:
                quiver = _resolve_graph(graph)
                exponent = parse_exponent(p)
                x = parse_element(element, quiver)
            except LpGraphError as e:
                return _error(e)

            def compute() -> Dict[str, Any]:
                representation = build_representation(rep, quiver, exponent, depth)
                bounds = opnorm_p(representation.exact_image(x), exponent)
                return {"element": str(x), "rep": representation.name, "bounds": bounds.model_dump(mode="json")}

            params = {"graph": quiver.to_spec().model_dump(mode="json"), "element": str(x), "p": p, "rep": rep, "depth": depth}
            try:
                return cached("norm", params, compute)
            except LpGraphError as e:
                return _error(e)

        @self.mcp.tool()
        async def run_named_experiment(
            experiment: str,
            graph: Optional[Any] = None,
            p: str = "2",
            depth: Optional[int] = None,
            seed: Optional[int] = None,
        ) -> Dict[str, Any]:
            """Run a checked experiment and return its report.

            Args:
                experiment: One of the names listed by get_server_info
                graph: Catalogue name, Graph JSON path, or inline Graph JSON (most experiments need one)
                p: Exponent
                depth: Depth or length parameter of the experiment
                seed: Sampling seed
            """
            try:
                quiver = _resolve_graph(graph) if graph is not None else None
                exponent = parse_exponent(p)
            except LpGraphError as e:
                return _error(e)

            def compute() -> Dict[str, Any]:
                report = run_experiment(experiment, quiver, exponent, depth, seed)
                payload = report.model_dump(mode="json")
                payload.update({"passed": report.passed, "controls_flagged": report.controls_flagged})
                return payload

            params = {
                "experiment": experiment,
                "graph": quiver.to_spec().model_dump(mode="json") if quiver else None,
                "p": p,
                "depth": depth,
                "seed": seed,
            }
            try:
                return cached("experiment", params, compute)
            except LpGraphError as e:
                self.logger.error("Experiment failed", experiment=experiment, error=str(e))
                return _error(e)

        self.logger.info(
            "Registered MCP tools",
            tools=[
                "get_server_info",
                "list_representations",
                "analyze_graph",
                "normalize_element",
                "element_norm",
                "run_named_experiment",
            ],
        )


_server_instance: Optional[LpGraphServer] = None


def create_mcp() -> FastMCP:
    """Create and return the MCP instance for the FastMCP CLI."""
    global _server_instance
    config = load_config(os.environ.get(CONFIG_ENV))
    _server_instance = LpGraphServer(config)
    return _server_instance.mcp


def main() -> None:
    create_mcp().run()


if __name__ == "__main__":
    main()
