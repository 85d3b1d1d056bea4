"""Test suite for lp-graph-algebras."""
