"""Tests package for jvcqma."""
