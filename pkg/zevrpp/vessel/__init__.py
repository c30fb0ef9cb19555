"""Parametric vessel models: hull, structure, resistance and battery."""
