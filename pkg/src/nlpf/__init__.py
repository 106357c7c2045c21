"""Nonlocal two-field conduction: a positivity-preserving solver for a
quasilinear energy balance coupled to a constrained order-parameter flow
with long-range interaction, plus the verification suite for its discrete
structure (conservation, entropy monotonicity, two-sided temperature
envelopes, selection bounds, and stability protocols)."""

from .errors import (ConfigError, ModelContractError, ModeError, NlpfError,
                     NumericalError)
from .geometry import BoundaryData, Grid, build_grid
from .stepper import RunComponents, SolverConfig, State, Trajectory, run

__version__ = "0.1.0"

__all__ = [
    "BoundaryData", "ConfigError", "Grid", "ModeError", "ModelContractError",
    "NlpfError", "NumericalError", "RunComponents", "SolverConfig", "State",
    "Trajectory", "build_grid", "run", "__version__",
]
