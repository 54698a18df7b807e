"""Numerical lab for complex-valued Feynman-Kac representations.

Complex Brownian paths, the complex Ito formula, a characteristics solver for
the linear first-order PDE, two Monte Carlo BSDE solvers and the real 2-d
reformulation, with a CLI that runs the whole acceptance battery.
"""
from .analytic import AnalyticPoly, SpaceTimePoly, TimeVaryingPoly
from .cl_algebra import CL2
from .paths import CoefficientTable, PathBatch, TimeGrid, sample_increments, simulate_forward
from .scenario import ConfigError, McSettings, Scenario, load_scenario, load_scenarios

__all__ = ["AnalyticPoly", "SpaceTimePoly", "TimeVaryingPoly", "CL2", "CoefficientTable",
           "PathBatch", "TimeGrid", "sample_increments", "simulate_forward", "ConfigError",
           "McSettings", "Scenario", "load_scenario", "load_scenarios"]
__version__ = "0.1.0"
