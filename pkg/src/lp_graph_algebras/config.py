"""Configuration management for lp-graph-algebras."""

from pathlib import Path
from typing import List, Optional, Union

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class NormConfig(BaseModel):
    """Configuration for the p-operator-norm engine."""

    restarts: int = Field(default=32, description="Random restarts of the power iteration")
    tolerance: float = Field(default=1e-7, description="Width under which bounds count as certified")
    max_iterations: int = Field(default=200, description="Power-iteration steps per restart")
    exact_tolerance: float = Field(
        default=1e-12, description="Tolerance for exact comparisons of float matrices"
    )
    seed: int = Field(default=0, description="Seed for the random starting vectors")

    @field_validator("restarts", "max_iterations")
    @classmethod
    def validate_counts(cls, v: int) -> int:
        """Counts must be non-negative."""
        if v < 0:
            raise ValueError("Counts must be non-negative")
        return v

    @field_validator("tolerance", "exact_tolerance")
    @classmethod
    def validate_tolerance(cls, v: float) -> float:
        """Tolerances must be positive."""
        if v <= 0:
            raise ValueError("Tolerance must be positive")
        return v


class AlgebraConfig(BaseModel):
    """Configuration for symbolic arithmetic in L_Q."""

    special_edge: str = Field(
        default="first", description="Which declared edge is special at a regular vertex"
    )
    cohn: bool = Field(default=False, description="Compute in the Cohn algebra (no CK2)")

    @field_validator("special_edge")
    @classmethod
    def validate_special_edge(cls, v: str) -> str:
        """Only first/last declared edge choices are supported."""
        if v not in ("first", "last"):
            raise ValueError("special_edge must be 'first' or 'last'")
        return v


class RepresentationConfig(BaseModel):
    """Configuration for representation builders."""

    boundary_depth: int = Field(default=6, description="Prefix depth of boundary-path atoms")
    germ_depth: int = Field(default=6, description="Bound on |alpha|+|beta| for germ atoms")
    germ_points_per_vertex: int = Field(
        default=1, description="Base points of X=N per vertex in the germ model"
    )
    shift_modulus: int = Field(default=3, description="Default cyclic modulus for shift tensoring")
    max_atoms: int = Field(default=20000, description="Upper bound on atoms per representation")

    @field_validator("boundary_depth", "germ_depth")
    @classmethod
    def validate_depth(cls, v: int) -> int:
        """Depths must be non-negative."""
        if v < 0:
            raise ValueError("Depth must be non-negative")
        return v

    @field_validator("germ_points_per_vertex", "shift_modulus", "max_atoms")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Sizes must be positive."""
        if v < 1:
            raise ValueError("Value must be at least 1")
        return v


class ExperimentConfig(BaseModel):
    """Configuration for experiment drivers."""

    seed: int = Field(default=0, description="Seed for element sampling")
    sample_size: int = Field(default=50, description="Random elements per experiment")
    max_terms: int = Field(default=6, description="Monomial support size of random elements")
    max_length: int = Field(default=3, description="Path length bound of random elements")
    depths: List[int] = Field(
        default_factory=lambda: [4, 5, 6, 7, 8], description="Truncation depths for cyclic graphs"
    )
    tolerance: float = Field(default=1e-7, description="Tolerance for interval comparisons")

    @model_validator(mode="after")
    def validate_depths(self) -> "ExperimentConfig":
        """Depth lists must be nonempty and increasing."""
        if not self.depths:
            raise ValueError("At least one depth must be given")
        if any(b <= a for a, b in zip(self.depths, self.depths[1:])):
            raise ValueError("Depths must be strictly increasing")
        return self


class CacheConfig(BaseModel):
    """Configuration for memoization caches."""

    enabled: bool = Field(default=True, description="Whether caching is enabled")
    max_size: int = Field(default=4096, description="Maximum number of cached items")


class ServerConfig(BaseModel):
    """Configuration for the CLI and MCP server front ends."""

    name: str = Field(default="lp-graph-algebras", description="Server name")
    version: str = Field(default="0.1.0", description="Server version")
    description: str = Field(
        default="Leavitt path algebras and spatial L^p representations",
        description="Server description",
    )
    log_level: str = Field(default="INFO", description="Logging level")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalize and validate the level name."""
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return level


class Config(BaseSettings):
    """Main configuration class."""

    model_config = SettingsConfigDict(
        env_prefix="LP_GRAPH_",
        env_nested_delimiter="__",
        case_sensitive=False,
    )

    server: ServerConfig = Field(default_factory=ServerConfig)
    cache: CacheConfig = Field(default_factory=CacheConfig)
    norm: NormConfig = Field(default_factory=NormConfig)
    algebra: AlgebraConfig = Field(default_factory=AlgebraConfig)
    representations: RepresentationConfig = Field(default_factory=RepresentationConfig)
    experiments: ExperimentConfig = Field(default_factory=ExperimentConfig)

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "Config":
        """Load configuration from YAML file."""
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Configuration file not found: {path}")

        with path.open("r") as f:
            data = yaml.safe_load(f) or {}

        return cls(**data)

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables only."""
        return cls()


def load_config(config_path: Optional[Union[str, Path]] = None) -> Config:
    """Load configuration from file or environment."""
    if config_path:
        return Config.from_yaml(config_path)

    default_paths = [
        Path("config.yaml"),
        Path("config.yml"),
        Path.home() / ".lp-graph-algebras" / "config.yaml",
    ]

    for path in default_paths:
        if path.exists():
            return Config.from_yaml(path)

    return Config.from_env()


# Global configuration instance
_config: Optional[Config] = None


def get_config() -> Config:
    """Get the global configuration instance."""
    global _config
    if _config is None:
        _config = load_config()
    return _config


def set_config(config: Config) -> None:
    """Set the global configuration instance."""
    global _config
    _config = config
