"""
Command-line interface.

``jvcqma fit | predict | simulate | evaluate | bootstrap-weights``; every run writes
one output directory with its primary files plus meta.json.
"""
