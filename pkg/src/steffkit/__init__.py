"""Derivative-free multi-step Steffensen-type solvers for nonlinear systems.

Quick start::

    from steffkit import sine_chain, solve
    trace = solve(sine_chain(5), "1.3", m=2, tol="1e-50")
    trace.status, trace.iterations, trace.acoc
"""
__version__ = "0.1.0"

from .basins import BasinImage, BasinSpec, render_memory, render_plain, write_csv, write_ppm
from .divdiff import kurchatov_dd, potra_dd, steffensen_dd
from .efficiency import efficiency_index, efficiency_table, optimal_steps
from .errors import (ArityError, CoincidentComponent, ConfigError, DimensionError, InsufficientIterates,
                     NonFinite, ParseError, PrecisionExhausted, PrecisionMismatch, SingularOperator,
                     SteffkitError, UnknownVariable, ZeroIncrement)
from .numkernel import Field, Matrix, PrecisionContext, Vector, lu_factor, lu_solve, norm2
from .problems import (SystemDef, cubic_p1, get_problem, load_system, parse_system, quad_p2,
                       scalar_quadratic, sine_chain)
from .solver import IterTrace, Memory, SolverConfig, Status, acoc, run, solve, sw_iterate
from .weights import WeightSpec, check_conditions, eval_weight, paper_poly, parse_weight, poly, reciprocal

__all__ = [
    "ArityError", "BasinImage", "BasinSpec", "CoincidentComponent", "ConfigError", "DimensionError",
    "Field", "InsufficientIterates", "IterTrace", "Matrix", "Memory", "NonFinite", "ParseError",
    "PrecisionContext", "PrecisionExhausted", "PrecisionMismatch", "SingularOperator", "SolverConfig",
    "Status", "SteffkitError", "SystemDef", "UnknownVariable", "Vector", "WeightSpec", "ZeroIncrement",
    "acoc", "check_conditions", "cubic_p1", "efficiency_index", "efficiency_table", "eval_weight",
    "get_problem", "kurchatov_dd", "load_system", "lu_factor", "lu_solve", "norm2", "optimal_steps",
    "paper_poly", "parse_system", "parse_weight", "poly", "potra_dd", "quad_p2", "reciprocal", "render_memory",
    "render_plain", "run", "scalar_quadratic", "sine_chain", "solve", "steffensen_dd", "sw_iterate",
    "write_csv", "write_ppm",
]
