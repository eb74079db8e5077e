"""Statevector simulation of simulation-based QAOA for resistive cooling networks."""

__version__ = "0.1.0"

from .errors import ConfigError, ConvergenceError, QusoError, ResourceError
from .thermal import (
    Configuration,
    CostTable,
    SolveResult,
    SpectralStats,
    ThermalNetwork,
    assemble_matrix,
    enumerate_costs,
    load_network,
    solve_direct,
    spectral_stats,
    four_node_network,
)

__all__ = [
    "__version__",
    "ConfigError",
    "ConvergenceError",
    "QusoError",
    "ResourceError",
    "Configuration",
    "CostTable",
    "SolveResult",
    "SpectralStats",
    "ThermalNetwork",
    "assemble_matrix",
    "enumerate_costs",
    "load_network",
    "solve_direct",
    "spectral_stats",
    "four_node_network",
]
