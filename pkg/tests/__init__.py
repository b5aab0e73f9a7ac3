"""glpp test suite."""
