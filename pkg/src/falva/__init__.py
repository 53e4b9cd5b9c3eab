"""Fractional action-like variational calculus with Riemann-Liouville
derivatives of order (alpha, beta)."""

from .action import (
    AugmentedState,
    ControlProblem,
    Lagrangian,
    action_value,
    augmented_action_value,
    control_action_value,
    dynamics_defect,
    free_particle,
    linear_velocity,
    oscillator,
)
from .grid import (
    DomainError,
    Grid,
    OrderSpec,
    PreconditionError,
    SampledFunction,
    gamma_function,
    make_grid,
    sample,
)
from .hamiltonian import (
    HamiltonianResiduals,
    Observable,
    corollary3_check,
    hamiltonian_system_residuals,
    hamiltonian_value,
    poisson_bracket,
)
from .ops import (
    OperatorKind,
    combined_adjoint_side,
    combined_derivative,
    ibp_defect,
    left_rl_derivative,
    left_rl_integral,
    right_rl_derivative,
    right_rl_integral,
)
from .optimality import (
    ELResidual,
    FrictionForce,
    constant_of_motion_defect,
    el_residual,
    fractional_momentum,
    friction_force,
)
from .solver import SolveOptions, SolveReport, discrete_action_gradient, minimize_action

__version__ = "0.1.0"

__all__ = [
    "AugmentedState",
    "ControlProblem",
    "DomainError",
    "ELResidual",
    "FrictionForce",
    "Grid",
    "HamiltonianResiduals",
    "Lagrangian",
    "Observable",
    "OperatorKind",
    "OrderSpec",
    "PreconditionError",
    "SampledFunction",
    "SolveOptions",
    "SolveReport",
    "action_value",
    "augmented_action_value",
    "combined_adjoint_side",
    "combined_derivative",
    "constant_of_motion_defect",
    "control_action_value",
    "corollary3_check",
    "discrete_action_gradient",
    "dynamics_defect",
    "el_residual",
    "fractional_momentum",
    "free_particle",
    "friction_force",
    "gamma_function",
    "hamiltonian_system_residuals",
    "hamiltonian_value",
    "ibp_defect",
    "left_rl_derivative",
    "left_rl_integral",
    "linear_velocity",
    "make_grid",
    "minimize_action",
    "oscillator",
    "poisson_bracket",
    "right_rl_derivative",
    "right_rl_integral",
    "sample",
]
