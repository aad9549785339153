"""Simulation and optimal control of ultracold-atom systems.

Backends: mean-field condensates on a 1D grid (:mod:`coldcontrol.gpe`),
Bose-Hubbard chains and few-level systems (:mod:`coldcontrol.lattice`) and
two interacting particles (:mod:`coldcontrol.pair`).  Control problems and
optimizers live in :mod:`coldcontrol.qoc`.
"""
from .container import DataContainer, load_container, save_container
from .core import (SpatialGrid, StateVector, TimeGrid, expectation_value, fidelity, make_spatial_grid,
                   make_time_grid, overlap)
from .errors import (CapacityError, ColdControlError, ConfigError, ConvergenceFailure, DomainError, InvalidArgument,
                     LineSearchFailure, NumericalInconsistency)

__version__ = "0.1.0"
