"""Pytest configuration and shared fixtures."""

import json
from pathlib import Path
from typing import Generator

import numpy as np
import pytest

from lp_graph_algebras.cache import Cache
from lp_graph_algebras.config import (
    CacheConfig,
    Config,
    ExperimentConfig,
    RepresentationConfig,
    ServerConfig,
    get_config,
    set_config,
)
from lp_graph_algebras.lpa import LeavittPathAlgebra
from lp_graph_algebras.quiver import Quiver, standard_graph


@pytest.fixture
def test_config() -> Config:
    """Create a test configuration with small sample sizes."""
    return Config(
        server=ServerConfig(
            name="test-server",
            version="1.0.0",
            description="Test server",
            log_level="DEBUG",
        ),
        cache=CacheConfig(enabled=True, max_size=100),
        representations=RepresentationConfig(boundary_depth=4, germ_depth=4),
        experiments=ExperimentConfig(seed=7, sample_size=8, max_terms=3, max_length=2, depths=[3, 4]),
    )


@pytest.fixture(autouse=True)
def use_test_config(test_config: Config) -> Generator[Config, None, None]:
    """Install the test configuration for every test and restore the previous one."""
    previous = get_config()
    set_config(test_config)
    yield test_config
    set_config(previous)


@pytest.fixture
def test_cache(test_config: Config) -> Cache:
    """Create a test cache instance."""
    return Cache(test_config.cache, name="test")


@pytest.fixture
def e1() -> Quiver:
    """Single vertex, no edges."""
    return standard_graph("E1")


@pytest.fixture
def a2() -> Quiver:
    """v -e-> w."""
    return standard_graph("A2")


@pytest.fixture
def a3() -> Quiver:
    """v1 -e1-> v2 -e2-> v3."""
    return standard_graph("A3")


@pytest.fixture
def r1() -> Quiver:
    """One vertex with one loop c."""
    return standard_graph("R1")


@pytest.fixture
def r2() -> Quiver:
    """One vertex with loops a and b."""
    return standard_graph("R2")


@pytest.fixture
def t2() -> Quiver:
    """Loop c at v with an exit e: v -> w."""
    return standard_graph("T2")


@pytest.fixture
def a2_algebra(a2: Quiver) -> LeavittPathAlgebra:
    return LeavittPathAlgebra(a2)


@pytest.fixture
def r2_algebra(r2: Quiver) -> LeavittPathAlgebra:
    return LeavittPathAlgebra(r2)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for reproducible sampling."""
    return np.random.default_rng(12345)


@pytest.fixture
def graph_file(tmp_path: Path) -> Path:
    """A2 written as Graph JSON."""
    path = tmp_path / "a2.json"
    path.write_text(
        json.dumps({"vertices": ["v", "w"], "edges": [{"name": "e", "src": "v", "dst": "w"}]})
    )
    return path
