"""Explicit total-Lagrangian Fragile Points Method for hyperelastic solids."""
