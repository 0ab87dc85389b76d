"""hessianlab: a numerical laboratory for degenerate k-Hessian equations.

Subpackages by role: ``symfunc`` (symmetric-function algebra and cones),
``linearize`` (linearized-operator coefficients and barrier profiles),
``gallery`` (degenerate right-hand sides, exponent calculators, barriers),
``solver`` (doubly-radial Dirichlet solver on the unit ball), ``probe``
(regularity verdicts from solved fields), ``cli`` (experiment runner).
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
