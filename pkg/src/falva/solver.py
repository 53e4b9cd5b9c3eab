"""Direct minimization of the discretized fractional action.

The discrete action is ``S(q) = sum_j K_j L(v_j, q_j, tau_j)`` with
``v = A q`` for the (real, when ``gamma = -1j`` or ``1j``) combined derivative
matrix ``A`` and product-integration weights ``K``. Since ``A^T`` is minus the
discrete adjoint-side operator, the exact gradient is

    grad S = -D_adj(K dL/dv) + K dL/dq.

Interior nodes are the unknowns; endpoints are eliminated. The descent
direction is the gradient preconditioned with the Hessian of the discrete
action of ``|v|^2 / 2 + |q|^2 / 2``, followed by Armijo backtracking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .action import Lagrangian, action_weights, as_columns, like
from .grid import DomainError, Grid, OrderSpec, SampledFunction
from .ops import combined_adjoint_side, combined_derivative, derivative_matrix
from .optimality import el_residual

logger = logging.getLogger(__name__)

METHOD = "preconditioned gradient descent with Armijo backtracking"


class NumericalFailure(ArithmeticError):
    """Non-finite action or gradient; ``iterate`` holds the offending path."""

    def __init__(self, message: str, iterate: np.ndarray):
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-8
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 60
    seed_path: SampledFunction | None = None

    def __post_init__(self) -> None:
        if self.max_iterations < 0:
            raise DomainError("max_iterations must be >= 0")
        if not self.gradient_tolerance > 0:
            raise DomainError("gradient_tolerance must be positive")
        if not 0 < self.shrink < 1:
            raise DomainError("shrink factor must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise DomainError("sufficient_decrease must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class SolveReport:
    final_path: SampledFunction
    final_action: complex
    gradient_norm: float
    iterations: int
    converged: bool
    el_residual_norm: float
    method: str = METHOD
    action_history: tuple[float, ...] = field(default=(), repr=False)


def _check_real_order(order: OrderSpec) -> None:
    if not (order.is_left or order.is_right):
        raise DomainError(
            f"direct minimization needs gamma = -1j or 1j (real action), got {order.gamma}"
        )


def _action_and_gradient(q: SampledFunction, lag: Lagrangian, order: OrderSpec):
    grid = q.grid
    K = action_weights(grid, order)
    v = combined_derivative(q, order).values
    value, w, dq = lag.evaluate(v, q.values, grid.nodes)
    Kc = K if q.values.ndim == 1 else K[:, None]
    grad = -combined_adjoint_side(q.with_values(Kc * w), order).values + Kc * dq
    grad = np.real(grad)
    grad[0] = 0.0
    grad[-1] = 0.0
    return float(np.real(np.sum(K * value))), grad


def discrete_action(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> float:
    """Real part of the discrete action minimized by :func:`minimize_action`."""
    _check_real_order(order)
    return _action_and_gradient(q, lag, order)[0]


def discrete_action_gradient(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> SampledFunction:
    """Exact gradient of :func:`discrete_action` in the node values.

    The endpoint entries are zero since the endpoints are fixed.
    """
    _check_real_order(order)
    return q.with_values(_action_and_gradient(q, lag, order)[1])


def _preconditioner(grid: Grid, order: OrderSpec):
    A = np.real(derivative_matrix(grid, order))[:, 1:-1]
    K = action_weights(grid, order)
    P = A.T @ (K[:, None] * A) + np.diag(K[1:-1])
    return scipy.linalg.cho_factor(P)


def _boundary_array(value, dim: int | None) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if dim is None:
        if arr.ndim != 0:
            raise DomainError("scalar problem needs scalar boundary values")
        return arr
    return np.broadcast_to(arr, (dim,)).astype(float)


def minimize_action(
    lag: Lagrangian,
    order: OrderSpec,
    grid: Grid,
    q_a,
    q_b,
    opts: SolveOptions | None = None,
) -> SolveReport:
    """Minimize the discrete action over paths with ``q(a) = q_a``, ``q(b) = q_b``.

    Non-convergence is not an error: the best iterate is returned with
    ``converged=False``.
    """
    _check_real_order(order)
    opts = opts or SolveOptions()
    dim = None if lag.dim == 1 and np.ndim(q_a) == 0 else lag.dim
    qa = _boundary_array(q_a, dim)
    qb = _boundary_array(q_b, dim)
    if not (np.all(np.isfinite(qa)) and np.all(np.isfinite(qb))):
        raise DomainError("boundary values must be finite")

    if opts.seed_path is not None:
        if opts.seed_path.grid != grid:
            raise DomainError("seed path lives on a different grid")
        x = np.real(opts.seed_path.values).astype(float).copy()
        x[0], x[-1] = qa, qb
    else:
        s = (grid.nodes - grid.a) / (grid.b - grid.a)
        s = s if dim is None else s[:, None]
        x = (1 - s) * qa + s * qb

    def evaluate(x):
        S, g = _action_and_gradient(SampledFunction(grid, x), lag, order)
        if not (np.isfinite(S) and np.all(np.isfinite(g))):
            raise NumericalFailure("non-finite action or gradient", x.copy())
        return S, g

    chol = _preconditioner(grid, order)
    S, g = evaluate(x)
    history = [S]
    gnorm = float(np.max(np.abs(g)))
    it = 0
    while gnorm > opts.gradient_tolerance and it < opts.max_iterations:
        d = np.zeros_like(x)
        d[1:-1] = -like(scipy.linalg.cho_solve(chol, as_columns(g[1:-1])), g[1:-1])
        slope = float(np.sum(g * d))
        step = 1.0
        for _ in range(opts.max_backtracks):
            x_new = x + step * d
            S_new, g_new = evaluate(x_new)
            if S_new <= S + opts.sufficient_decrease * step * slope:
                break
            step *= opts.shrink
        else:
            logger.info("line search stalled at iteration %d", it)
            break
        x, S, g = x_new, S_new, g_new
        history.append(S)
        gnorm = float(np.max(np.abs(g)))
        it += 1

    path = SampledFunction(grid, x)
    return SolveReport(
        final_path=path,
        final_action=complex(S),
        gradient_norm=gnorm,
        iterations=it,
        converged=gnorm <= opts.gradient_tolerance,
        el_residual_norm=el_residual(path, lag, order).norm,
        action_history=tuple(history),
    )
