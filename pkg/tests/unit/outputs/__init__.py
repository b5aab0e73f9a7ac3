"""Unit tests for glpp.outputs."""
