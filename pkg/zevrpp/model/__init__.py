"""ZEVRPP problem assembly, costing and solution extraction."""
