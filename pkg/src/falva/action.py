r"""Lagrangians, control problems and evaluation of the fractional action

.. math::

    S[q] = \frac{1}{\Gamma(\alpha)} \int_a^b
        L(D_\gamma^{\alpha,\beta} q(\tau), q(\tau), \tau)\,(t - \tau)^{\alpha - 1}
        \,d\tau.

User callables are vectorized over nodes: ``value(v, q, tau)`` receives
``v`` and ``q`` of shape ``(n, d)`` and ``tau`` of shape ``(n,)`` and returns
shape ``(n,)``; the partials return ``(n, d)``. Vector pairings are plain
bilinear dot products, never conjugated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import (
    DomainError,
    Grid,
    OrderSpec,
    PreconditionError,
    SampledFunction,
    check_same_grid,
    gamma_function,
)
from .ops import combined_derivative

ScalarFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def as_columns(values: np.ndarray) -> np.ndarray:
    """View node samples as shape ``(n, d)``."""
    values = np.asarray(values)
    return values[:, None] if values.ndim == 1 else values


def like(values: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Undo :func:`as_columns` for scalar templates."""
    return values[:, 0] if np.ndim(template) == 1 else values


# {{{ kernel and quadrature


def kernel_values(grid: Grid, alpha: float) -> np.ndarray:
    r"""Pointwise :math:`(t - \tau_j)^{\alpha - 1}`; ``nan`` at a pole."""
    tau = grid.nodes
    if alpha == 1.0:
        return np.ones_like(tau)
    dt = grid.t_obs - tau
    with np.errstate(divide="ignore"):
        k = np.where(dt > 0, np.abs(dt) ** (alpha - 1.0), np.nan)
    return k


def quadrature_weights(grid: Grid, order: OrderSpec, kernel_order: float) -> np.ndarray:
    r"""Node weights for :math:`\int_a^b F(\tau) (t - \tau)^{\kappa - 1} d\tau`.

    The kernel is integrated exactly over each cell and the cell integral is
    attached to one of its nodes. For the left derivative
    (``gamma = -1j``) each cell goes to its right node, for the right
    derivative (``gamma = 1j``) to its left node, and otherwise half to each.
    Matching the side of the Grünwald-Letnikov stencil makes the discrete
    minimizer consistent with the differenced Euler-Lagrange equation; with
    ``kappa = 1`` and general ``gamma`` the rule is the trapezoidal rule.

    A kernel singularity at :math:`\tau = b = t` is integrable and handled by
    the exact cell integral.
    """
    tau = grid.nodes
    kappa = float(kernel_order)
    if kappa == 1.0:
        cells = np.full(grid.n_points - 1, grid.h)
    else:
        # (t - tau)^kappa / kappa is an antiderivative of -(t - tau)^(kappa - 1)
        prim = (grid.t_obs - tau) ** kappa / kappa
        cells = prim[:-1] - prim[1:]

    w = np.zeros(grid.n_points)
    if order.is_left:
        w[1:] = cells
    elif order.is_right:
        w[:-1] = cells
    else:
        w[1:] += cells / 2
        w[:-1] += cells / 2
    return w


def action_weights(grid: Grid, order: OrderSpec) -> np.ndarray:
    r"""Weights including the :math:`1 / \Gamma(\alpha)` normalization."""
    return quadrature_weights(grid, order, order.alpha) / gamma_function(order.alpha)


# }}}


# {{{ Lagrangian


@dataclass(frozen=True)
class Lagrangian:
    r"""A Lagrangian :math:`L(v, q, \tau)` with user-supplied partials.

    ``d_v`` is the partial in the first (velocity) slot, the one that receives
    :math:`D_\gamma^{\alpha,\beta} q`. Set ``validate=True`` to compare the
    partials with central finite differences at random probe points.
    """

    value: ScalarFn
    d_v: ScalarFn
    d_q: ScalarFn
    dim: int = 1
    validate: bool = field(default=False, compare=False)
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.validate:
            check_partials(self)

    def __call__(self, v, q, tau):
        return self.value(v, q, tau)

    def __add__(self, other: Lagrangian) -> Lagrangian:
        if other.dim != self.dim:
            raise DomainError("cannot add Lagrangians of different dimension")
        return Lagrangian(
            value=lambda v, q, t: self.value(v, q, t) + other.value(v, q, t),
            d_v=lambda v, q, t: self.d_v(v, q, t) + other.d_v(v, q, t),
            d_q=lambda v, q, t: self.d_q(v, q, t) + other.d_q(v, q, t),
            dim=self.dim,
            name=f"{self.name}+{other.name}",
        )

    def evaluate(self, v: np.ndarray, q: np.ndarray, tau: np.ndarray):
        """Return ``(L, dL/dv, dL/dq)`` on node samples of any supported shape."""
        vc, qc = as_columns(v), as_columns(q)
        value = np.asarray(self.value(vc, qc, tau))
        dv = np.asarray(self.d_v(vc, qc, tau))
        dq = np.asarray(self.d_q(vc, qc, tau))
        return value, like(dv, v), like(dq, q)


def check_partials(
    lag: Lagrangian,
    probes: int = 100,
    rtol: float = 1e-5,
    seed: int = 0,
) -> float:
    """Check ``d_v`` and ``d_q`` against central differences.

    Returns the worst relative error; raises :class:`PreconditionError` above
    ``rtol``.
    """
    rng = np.random.default_rng(seed)
    d = lag.dim
    v = rng.uniform(-2, 2, size=(probes, d))
    q = rng.uniform(-2, 2, size=(probes, d))
    tau = rng.uniform(0, 1, size=probes)
    worst = 0.0
    for slot, partial in (("v", lag.d_v), ("q", lag.d_q)):
        exact = np.asarray(partial(v, q, tau), dtype=complex).reshape(probes, d)
        for i in range(d):
            eps = 1e-6 * np.maximum(1.0, np.abs(v[:, i] if slot == "v" else q[:, i]))
            e = np.zeros((probes, d))
            e[:, i] = eps
            if slot == "v":
                fp, fm = lag.value(v + e, q, tau), lag.value(v - e, q, tau)
            else:
                fp, fm = lag.value(v, q + e, tau), lag.value(v, q - e, tau)
            fd = (np.asarray(fp) - np.asarray(fm)) / (2 * eps)
            scale = np.maximum(np.maximum(np.abs(fd), np.abs(exact[:, i])), 1e-8)
            err = float(np.max(np.abs(fd - exact[:, i]) / scale))
            worst = max(worst, err)
            if err > rtol:
                raise PreconditionError(
                    f"d_{slot}[{i}] disagrees with finite differences "
                    f"(relative error {err:.3e})"
                )
    return worst


def free_particle(mass: float = 1.0, dim: int = 1) -> Lagrangian:
    r""":math:`L = \frac{m}{2} v \cdot v`."""
    return Lagrangian(
        value=lambda v, q, t: 0.5 * mass * np.sum(v * v, axis=-1),
        d_v=lambda v, q, t: mass * v,
        d_q=lambda v, q, t: np.zeros_like(q, dtype=complex),
        dim=dim,
        name="free",
    )


def oscillator(mass: float = 1.0, stiffness: float = 1.0, dim: int = 1) -> Lagrangian:
    r""":math:`L = \frac{m}{2} v \cdot v + \frac{k}{2} q \cdot q`.

    The potential enters with a plus sign so the action is convex and the
    boundary problem is a minimization (solutions are hyperbolic).
    """
    return Lagrangian(
        value=lambda v, q, t: 0.5 * mass * np.sum(v * v, axis=-1)
        + 0.5 * stiffness * np.sum(q * q, axis=-1),
        d_v=lambda v, q, t: mass * v,
        d_q=lambda v, q, t: stiffness * q,
        dim=dim,
        name="oscillator",
    )


def linear_velocity(a: float = 1.0, b: float = 1.0, c: float = 0.0, dim: int = 1) -> Lagrangian:
    r""":math:`L = (a q + c) \cdot v + \frac{b}{2} q \cdot q`, linear in the velocity."""
    return Lagrangian(
        value=lambda v, q, t: np.sum((a * q + c) * v, axis=-1) + 0.5 * b * np.sum(q * q, axis=-1),
        d_v=lambda v, q, t: (a * q + c) * np.ones_like(v),
        d_q=lambda v, q, t: a * v + b * q,
        dim=dim,
        name="linear-velocity",
    )


# }}}


# {{{ control problems


@dataclass(frozen=True)
class ControlProblem:
    r"""Minimize the kernel-weighted action of :math:`L(u, q, \tau)` subject to
    :math:`D_\gamma^{\alpha,\beta} q = \varphi(u, q, \tau)`.

    ``d_u_phi`` and ``d_q_phi`` return Jacobians of shape ``(n, d, d)`` with
    ``J[:, i, k] = d phi_i / d x_k``.
    """

    lagrangian: Lagrangian
    phi: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    d_u_phi: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    d_q_phi: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    order: OrderSpec
    boundary: tuple = (0.0, 1.0)
    phi_is_identity: bool = False

    @classmethod
    def calculus_of_variations(
        cls, lagrangian: Lagrangian, order: OrderSpec, boundary: tuple = (0.0, 1.0)
    ) -> ControlProblem:
        """The problem with ``phi(u, q, tau) = u``."""
        d = lagrangian.dim

        def eye(u, q, t):
            return np.broadcast_to(np.eye(d), (np.shape(u)[0], d, d))

        def null(u, q, t):
            return np.zeros((np.shape(u)[0], d, d))

        return cls(
            lagrangian,
            phi=lambda u, q, t: u,
            d_u_phi=eye,
            d_q_phi=null,
            order=order,
            boundary=boundary,
            phi_is_identity=True,
        )

    def evaluate_phi(self, u: np.ndarray, q: np.ndarray, tau: np.ndarray):
        """Return ``(phi, d_u phi, d_q phi)`` with ``phi`` shaped like ``u``."""
        uc, qc = as_columns(u), as_columns(q)
        phi = np.asarray(self.phi(uc, qc, tau), dtype=complex)
        ju = np.asarray(self.d_u_phi(uc, qc, tau), dtype=complex)
        jq = np.asarray(self.d_q_phi(uc, qc, tau), dtype=complex)
        return like(phi, u), ju, jq


@dataclass(frozen=True)
class AugmentedState:
    """State ``q``, control ``u`` and multiplier ``p`` on one grid.

    ``p`` may be omitted for operations that do not use it.
    """

    q: SampledFunction
    u: SampledFunction
    p: SampledFunction | None = None

    def __post_init__(self) -> None:
        fns = [self.q, self.u] + ([self.p] if self.p is not None else [])
        check_same_grid(*fns)
        shapes = {f.values.shape for f in fns}
        if len(shapes) != 1:
            raise DomainError(f"state components differ in shape: {sorted(shapes)}")

    @property
    def grid(self) -> Grid:
        return self.q.grid


def pair(p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Node-wise bilinear pairing of ``(n,)`` or ``(n, d)`` samples."""
    return np.sum(as_columns(p) * as_columns(x), axis=-1)


def covector_times_jacobian(p: np.ndarray, jac: np.ndarray) -> np.ndarray:
    """Node-wise ``p . J``, returned in the shape of ``p``."""
    return like(np.einsum("ni,nik->nk", as_columns(p), jac), p)


def interior_max(values: np.ndarray, grid: Grid) -> float:
    """Max-norm of node samples over the interior nodes."""
    part = as_columns(values)[grid.interior()]
    return float(np.max(np.abs(part))) if part.size else 0.0


# }}}


# {{{ actions


def action_value(q: SampledFunction, lag: Lagrangian, order: OrderSpec) -> complex:
    """Discrete fractional action of the path ``q``.

    The imaginary part is kept; it is nonzero only when the combined
    derivative is complex.
    """
    grid = q.grid
    v = combined_derivative(q, order).values
    value, _, _ = lag.evaluate(v, q.values, grid.nodes)
    return complex(np.sum(action_weights(grid, order) * value))


def control_action_value(state: AugmentedState, problem: ControlProblem) -> complex:
    """Kernel-weighted action of ``L(u, q, tau)``; the dynamics are not checked."""
    grid = state.grid
    value, _, _ = problem.lagrangian.evaluate(state.u.values, state.q.values, grid.nodes)
    return complex(np.sum(action_weights(grid, problem.order) * value))


def dynamics_defect(state: AugmentedState, problem: ControlProblem) -> float:
    """Interior max-norm of ``D q - phi(u, q, tau)``."""
    grid = state.grid
    dq = combined_derivative(state.q, problem.order).values
    phi, _, _ = problem.evaluate_phi(state.u.values, state.q.values, grid.nodes)
    return interior_max(dq - phi, grid)


def augmented_action_value(state: AugmentedState, problem: ControlProblem) -> complex:
    r"""The augmented action

    .. math::

        \frac{1}{\Gamma(\alpha)} \int_a^b \left[ H(u, q, p, \tau)
            - p \cdot D_\gamma^{\alpha,\beta} q \right] d\tau,
        \qquad H = L\,(t - \tau)^{\alpha - 1} + p \cdot \varphi.

    The kernel-weighted part is integrated with product weights, so a kernel
    pole at ``tau = b = t`` is never sampled.
    """
    if state.p is None:
        raise PreconditionError("augmented action needs the multiplier p")
    grid = state.grid
    order = problem.order
    value, _, _ = problem.lagrangian.evaluate(state.u.values, state.q.values, grid.nodes)
    phi, _, _ = problem.evaluate_phi(state.u.values, state.q.values, grid.nodes)
    dq = combined_derivative(state.q, order).values
    plain = quadrature_weights(grid, order, 1.0) / gamma_function(order.alpha)
    return complex(
        np.sum(action_weights(grid, order) * value)
        + np.sum(plain * pair(state.p.values, phi - dq))
    )


# }}}
