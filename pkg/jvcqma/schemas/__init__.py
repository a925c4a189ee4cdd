"""
Pydantic documents written to and read from disk.

Schema files, standardization records, fitted models, reports and run metadata.
"""
