"""Exclusion-process simulation and moderate-deviation rate-function tools."""

from .errors import (AccuracyError, CapacityError, DataError, ParameterError,
                     SolverError)
from .lattice import (Configuration, SimParams, TrajectoryRecord,
                      init_bernoulli, init_bernoulli_star,
                      init_fixed_count_star, run_ensemble, run_stirring,
                      unwrap_displacement)

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "CapacityError", "DataError", "ParameterError",
    "SolverError", "Configuration", "SimParams", "TrajectoryRecord",
    "init_bernoulli", "init_bernoulli_star", "init_fixed_count_star",
    "run_ensemble", "run_stirring", "unwrap_displacement",
]
