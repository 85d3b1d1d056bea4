"""lp-graph-algebras - Leavitt path algebras and their spatial L^p representations."""

__version__ = "0.1.0"
