"""Isogeometric solvers for the Westervelt, Kuznetsov and JMGT equations in 1D."""
from .errors import (ConfigError, ConvergenceError, DegeneracyError, FactorizationError,
                     NumericalFailure)
from .experiment import SimConfig, SweepConfig, load_config, run_simulation, sweep_tau
from .models import WATER, MediumParams, ModelKind, derive_coefficients

__all__ = [
    "ConfigError", "ConvergenceError", "DegeneracyError", "FactorizationError",
    "NumericalFailure", "SimConfig", "SweepConfig", "load_config", "run_simulation",
    "sweep_tau", "WATER", "MediumParams", "ModelKind", "derive_coefficients",
]

__version__ = "0.1.0"
