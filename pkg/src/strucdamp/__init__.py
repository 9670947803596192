"""Numerical laboratory for weakly coupled structurally damped wave systems.

The package splits into grid-free analysis (propagator symbols, decay-rate
predictions, parameter-region classification, test-function quadrature) and a
pseudospectral solver for the full nonlinear system, with a CLI that emits
deterministic CSV tables, figures and run manifests.
"""

__version__ = "0.1.0"

from .params import SystemParams

__all__ = ["SystemParams", "__version__"]
