"""LP solver tests."""
