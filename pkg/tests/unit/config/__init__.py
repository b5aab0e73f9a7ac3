"""Unit tests for glpp.config."""
