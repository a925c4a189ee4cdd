"""Document schema tests."""
