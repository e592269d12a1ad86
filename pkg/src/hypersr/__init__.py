"""Physics-constrained symbolic regression for hyperelastic energy discovery."""

__version__ = "0.1.0"
