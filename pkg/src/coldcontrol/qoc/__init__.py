"""Optimal control: problems, gradients and optimizers."""
from .basis import (BasisMaker, GroupBasis, GroupProblem, group_gradient, make_basis_maker, make_sigmoid_shape,
                    make_sine_basis)
from .control import ControlField, make_time_control, stack_fields, time_control_for
from .lbfgs import LbfgsMemory, lbfgs_direction
from .linesearch import (InterpolatingStepSizeFinder, interpolating_step_size, line_search,
                         make_interpolating_step_size_finder)
from .monitor import (Criterion, default_restarter, default_stopper, fidelity_above, format_iteration,
                      make_collector, make_stopper, max_iterations, printing_collector, step_below)
from .optimizers import (STATUS_COLLECTOR, STATUS_LINE_SEARCH, STATUS_OK, DressedOptimizer, GrapeTarget,
                         OptimizationResult, Optimizer, dgroup_optimize, grape_optimize, group_optimize,
                         make_dgroup, make_grape, make_group)
from .problem import (SoftBounds, StateTransferProblem, gradient_h1, gradient_l2, make_state_transfer_problem,
                      neg_second_difference, propagate_adjoint, propagate_forward, regularization_cost,
                      regularization_gradient)
