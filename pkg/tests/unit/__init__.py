"""Unit tests for glpp."""
