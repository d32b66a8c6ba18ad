"""circedge: edge statistics of unitary matrix models, end to end.

Pipeline: potential -> equilibrium measure -> orthogonal polynomials on the
circle -> CMV operator and resolvents -> Airy-kernel limits, Fredholm gap
probabilities, and Monte Carlo cross-checks.
"""

from .potentials import Potential, eval_potential, from_config, gww
from .equilibrium import (EdgeConstants, EquilibriumData, density,
                          edge_constants, effective_potential,
                          integral_equation_residual, p_function,
                          solve_support)

__all__ = [
    "Potential", "eval_potential", "from_config", "gww",
    "EquilibriumData", "EdgeConstants", "density", "edge_constants",
    "effective_potential", "integral_equation_residual", "p_function",
    "solve_support",
]

__version__ = "0.1.0"
