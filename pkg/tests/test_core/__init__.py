"""Core and worker tests."""
