r"""Residuals of the fractional Euler-Lagrange equation

.. math::

    \partial_q L - D_{-\gamma}^{\beta,\alpha} \partial_v L
        = \frac{1 - \alpha}{t - \tau} \partial_v L,

with all partials evaluated at :math:`(D_\gamma^{\alpha,\beta} q, q, \tau)`,
together with the friction force, the fractional momentum and the
constant-of-motion test.

Nodes where :math:`\tau = t` (possible only at ``tau = b`` when
``t_obs = b``) are poles of the friction term and of the kernel. They hold
``nan`` and are reported in ``excluded``; all norms are taken over interior
nodes, which never include them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import Lagrangian, as_columns, interior_max, kernel_values
from .grid import Grid, OrderSpec, PreconditionError, SampledFunction
from .ops import combined_adjoint_side, combined_derivative


@dataclass(frozen=True, eq=False)
class ELResidual:
    values: np.ndarray
    norm: float
    grid: Grid


@dataclass(frozen=True, eq=False)
class FrictionForce:
    values: np.ndarray
    T: np.ndarray
    excluded: np.ndarray
    grid: Grid

    @property
    def norm(self) -> float:
        return interior_max(self.values, self.grid)


def _velocity_partials(q: SampledFunction, lag: Lagrangian, order: OrderSpec):
    v = combined_derivative(q, order).values
    _, w, dq = lag.evaluate(v, q.values, q.grid.nodes)
    return v, w, dq


def _broadcast(node_values: np.ndarray, like: np.ndarray) -> np.ndarray:
    return node_values if like.ndim == 1 else node_values[:, None]


def friction_coefficient(grid: Grid, alpha: float) -> np.ndarray:
    r""":math:`(1 - \alpha) / (t - \tau)`, zero for ``alpha = 1`` and ``nan`` at a pole."""
    if alpha == 1.0:
        return np.zeros(grid.n_points)
    dt = grid.t_obs - grid.nodes
    with np.errstate(divide="ignore"):
        return np.where(dt > 0, (1.0 - alpha) / np.where(dt > 0, dt, 1.0), np.nan)


def el_residual(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> ELResidual:
    """Pointwise residual (left side minus right side) of the Euler-Lagrange equation."""
    grid = q.grid
    _, w, dq = _velocity_partials(q, lag, order)
    adj = combined_adjoint_side(q.with_values(w), order).values
    fric = _broadcast(friction_coefficient(grid, order.alpha), w) * w
    r = dq - adj - fric
    return ELResidual(r, interior_max(r, grid), grid)


def el_residual_kernel_form(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> ELResidual:
    r"""Residual of the kernel-weighted form

    .. math::

        \partial_q L \,(t - \tau)^{\alpha - 1}
            - D_{-\gamma}^{\beta,\alpha} \left[ \partial_v L \,(t - \tau)^{\alpha - 1} \right],

    signed so that it matches :func:`el_residual` times the kernel whenever
    the two forms agree.
    """
    grid = q.grid
    _, w, dq = _velocity_partials(q, lag, order)
    k = _broadcast(kernel_values(grid, order.alpha), w)
    wk = w * k
    if not np.all(np.isfinite(wk)):
        raise PreconditionError("kernel pole on the grid; use t_obs > b")
    r = dq * k - combined_adjoint_side(q.with_values(wk), order).values
    return ELResidual(r, interior_max(r, grid), grid)


def friction_force(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> FrictionForce:
    r"""Friction force :math:`((\alpha - 1) / T)\, \partial_v L` with :math:`T = \tau - t`."""
    grid = q.grid
    _, w, _ = _velocity_partials(q, lag, order)
    T = grid.nodes - grid.t_obs
    excluded = T == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(excluded, np.nan, (order.alpha - 1.0) / np.where(excluded, 1.0, T))
    if order.alpha == 1.0:
        coeff = np.where(excluded, np.nan, 0.0)
    return FrictionForce(_broadcast(coeff, w) * w, T, excluded, grid)


def fractional_momentum(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> SampledFunction:
    r"""Fractional momentum :math:`p = -\partial_v L\,(t - \tau)^{\alpha - 1}`.

    The minus sign is part of the definition. A kernel pole gives ``nan``.
    """
    _, w, _ = _velocity_partials(q, lag, order)
    k = kernel_values(q.grid, order.alpha)
    return q.with_values(-w * _broadcast(k, w))


def constant_of_motion_defect(C: SampledFunction, order: OrderSpec) -> float:
    r"""Interior max-norm of :math:`D_{-\gamma}^{\beta,\alpha} C`; zero for a
    fractional constant of motion."""
    if not np.all(np.isfinite(as_columns(C.values))):
        raise PreconditionError("C has non-finite samples (kernel pole?); use t_obs > b")
    return interior_max(combined_adjoint_side(C, order).values, C.grid)
