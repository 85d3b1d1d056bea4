"""Unit tests for the FastMCP server."""

import asyncio
from unittest.mock import patch

import pytest

from lp_graph_algebras.cache import get_cache
from lp_graph_algebras.config import CacheConfig, ServerConfig, get_config
from lp_graph_algebras.server import LpGraphServer, create_mcp


class ToolRecorder:
    """Stands in for FastMCP and keeps the registered tool coroutines by name."""

    def __init__(self, name: str = "", version: str = "") -> None:
        self.name = name
        self.version = version
        self.tools = {}

    def tool(self):
        def decorator(fn):
            self.tools[fn.__name__] = fn
            return fn

        return decorator


class TestLpGraphServer:
    """Test LpGraphServer functionality."""

    @pytest.fixture
    def config(self, test_config):
        """Create test configuration."""
        return test_config.model_copy(
            update={
                "server": ServerConfig(name="test-server", version="1.0.0", description="Test server"),
                "cache": CacheConfig(enabled=True, max_size=100),
            }
        )

    @pytest.fixture
    def server(self, config):
        """Create test server instance."""
        with patch("lp_graph_algebras.server.FastMCP", ToolRecorder):
            return LpGraphServer(config)

    def call(self, server, tool, **kwargs):
        return asyncio.run(server.mcp.tools[tool](**kwargs))

    def test_init(self, server, config):
        """Test server initialization."""
        assert server.config == config
        assert server.server_info["name"] == "test-server"
        assert server.server_info["version"] == "1.0.0"
        assert server.server_info["description"] == "Test server"
        assert get_config() is config
        assert get_cache() is server.cache

    def test_tools_registered(self, server):
        """Test that every tool is registered."""
        assert set(server.mcp.tools) == {
            "get_server_info",
            "list_representations",
            "analyze_graph",
            "normalize_element",
            "element_norm",
            "run_named_experiment",
        }

    def test_server_info(self, server):
        """Test the server info tool."""
        info = self.call(server, "get_server_info")
        assert info["server"]["name"] == "test-server"
        assert {"boundary", "germ", "shift"} <= set(info["representations"])
        assert "gamma" in info["experiments"]
        assert info["cache"]["enabled"] is True

    def test_list_representations(self, server):
        """Test builder metadata."""
        result = self.call(server, "list_representations")
        assert result["builders"]["shift"]["capabilities"]["parametric"] is True
        assert result["total"] >= 3

    def test_analyze_catalogue_graph(self, server):
        """Test analysis of a catalogue graph, served from cache the second time."""
        first = self.call(server, "analyze_graph", graph="R2")
        assert first["simplicity"]["simple"] is True
        assert first["purely_infinite"] is True
        assert first["cycles"] == [{"edges": ["a"], "exit": True}, {"edges": ["b"], "exit": True}]
        hits = server.cache.stats.hits
        assert self.call(server, "analyze_graph", graph="R2") == first
        assert server.cache.stats.hits == hits + 1

    def test_analyze_inline_graph(self, server):
        """Test analysis of inline Graph JSON."""
        graph = {"vertices": ["v", "w"], "edges": [{"name": "e", "src": "v", "dst": "w"}], "name": "line"}
        result = self.call(server, "analyze_graph", graph=graph)
        assert result["graph"] == "line"
        assert result["simplicity"]["simple"] is True
        assert result["purely_infinite"] is False

    def test_analyze_unknown_graph(self, server):
        """Test that errors are returned as payloads."""
        result = self.call(server, "analyze_graph", graph="no-such-graph")
        assert result["kind"] == "GraphError"

    def test_normalize_element(self, server):
        """Test normal forms and products."""
        assert self.call(server, "normalize_element", graph="A2", elements=["2*e.e* - v"])["element"] == "v"
        assert self.call(server, "normalize_element", graph="R2", elements=["a*", "b"])["element"] == "0"

    def test_normalize_parse_error(self, server):
        """Test that parse errors carry the span."""
        result = self.call(server, "normalize_element", graph="A2", elements=["v + x"])
        assert result["kind"] == "ParseError"
        assert result["span"] == [4, 5]

    def test_normalize_nothing(self, server):
        """Test an empty element list."""
        assert "error" in self.call(server, "normalize_element", graph="A2", elements=[])

    def test_element_norm(self, server):
        """Test a certified norm through the tool."""
        result = self.call(server, "element_norm", graph="A2", element="e", p="3")
        assert result["bounds"]["lower"] == pytest.approx(1.0)
        assert result["bounds"]["upper"] == pytest.approx(1.0)

    def test_element_norm_bad_rep(self, server):
        """Test an unknown representation name."""
        result = self.call(server, "element_norm", graph="A2", element="e", rep="nope")
        assert result["kind"] == "PreconditionError"

    def test_element_norm_bad_exponent(self, server):
        """Test p < 1."""
        result = self.call(server, "element_norm", graph="A2", element="e", p="1/2")
        assert result["kind"] == "PreconditionError"

    def test_run_named_experiment(self, server):
        """Test an experiment through the tool."""
        result = self.call(server, "run_named_experiment", experiment="gamma", graph="R2", depth=12)
        assert result["passed"] is True
        assert result["experiment"] == "gamma"

    def test_run_unknown_experiment(self, server):
        """Test an unknown experiment name."""
        result = self.call(server, "run_named_experiment", experiment="nope", graph="R2")
        assert result["kind"] == "PreconditionError"

    def test_cache_disabled(self, config):
        """Test that a disabled cache computes every time."""
        config = config.model_copy(update={"cache": CacheConfig(enabled=False)})
        with patch("lp_graph_algebras.server.FastMCP", ToolRecorder):
            server = LpGraphServer(config)
        self.call(server, "analyze_graph", graph="A2")
        self.call(server, "analyze_graph", graph="A2")
        assert server.cache.stats.hits == 0


def test_create_mcp(tmp_path, monkeypatch):
    """Test create_mcp with a config file from the environment."""
    path = tmp_path / "config.yaml"
    path.write_text("server:\n  name: from-file\n")
    monkeypatch.setenv("LP_GRAPH_CONFIG_FILE", str(path))
    with patch("lp_graph_algebras.server.FastMCP", ToolRecorder):
        mcp = create_mcp()
    assert mcp.name == "from-file"
    assert "analyze_graph" in mcp.tools
