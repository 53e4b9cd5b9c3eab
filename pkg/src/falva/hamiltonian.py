r"""Fractional Hamiltonian :math:`H = L\,(t - \tau)^{\alpha - 1} + p \cdot \varphi`
and residuals of the associated Hamiltonian system.

The Poisson bracket uses the ordering

.. math::

    \{f, g\} = \partial_p f \cdot \partial_q g - \partial_q f \cdot \partial_p g,

under which :math:`D_\gamma^{\alpha,\beta} q = \{H, q\}` and
:math:`D_{-\gamma}^{\beta,\alpha} p = \{H, p\}`. This is the opposite sign of
the more common convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .action import (
    AugmentedState,
    ControlProblem,
    as_columns,
    covector_times_jacobian,
    interior_max,
    kernel_values,
    pair,
)
from .grid import DomainError, Grid, PreconditionError
from .optimality import constant_of_motion_defect
from .ops import combined_adjoint_side, combined_derivative


@dataclass(frozen=True)
class HamiltonianResiduals:
    dyn_defect: float
    costate_defect: float
    stationarity_defect: float


def _point_kernel(tau: float, grid: Grid, alpha: float) -> float:
    if alpha == 1.0:
        return 1.0
    dt = grid.t_obs - tau
    if dt <= 0:
        raise DomainError(f"kernel pole at tau={tau!r} (t_obs={grid.t_obs!r})")
    return dt ** (alpha - 1.0)


def hamiltonian_value(u, q, p, tau: float, problem: ControlProblem, grid: Grid) -> complex:
    """Evaluate the fractional Hamiltonian at one point."""
    k = _point_kernel(float(tau), grid, problem.order.alpha)
    u1 = np.atleast_1d(np.asarray(u, dtype=complex))[None, :]
    q1 = np.atleast_1d(np.asarray(q, dtype=complex))[None, :]
    p1 = np.atleast_1d(np.asarray(p, dtype=complex))[None, :]
    t1 = np.array([float(tau)])
    L = problem.lagrangian.value(u1, q1, t1)
    phi = problem.phi(u1, q1, t1)
    return complex(np.asarray(L)[0] * k + pair(p1, np.asarray(phi))[0])


def _node_partials(state: AugmentedState, problem: ControlProblem):
    grid = state.grid
    tau = grid.nodes
    u, q = state.u.values, state.q.values
    _, dL_du, dL_dq = problem.lagrangian.evaluate(u, q, tau)
    phi, ju, jq = problem.evaluate_phi(u, q, tau)
    k = kernel_values(grid, problem.order.alpha)
    k = k if np.ndim(u) == 1 else k[:, None]
    return phi, ju, jq, dL_du, dL_dq, k


def stationary_costate(state: AugmentedState, problem: ControlProblem) -> np.ndarray:
    r"""Solve :math:`\partial_u H = 0` for ``p`` node by node."""
    _, ju, _, dL_du, _, k = _node_partials(state, problem)
    # a vanishing partial stays zero at a kernel pole
    with np.errstate(invalid="ignore"):
        rhs = -as_columns(np.where(dL_du == 0, 0.0, dL_du * k))
    # p . J = rhs  <=>  J^T p = rhs
    p = np.linalg.solve(np.swapaxes(ju, 1, 2), rhs[:, :, None])[:, :, 0]
    return p[:, 0] if np.ndim(state.u.values) == 1 else p


def hamiltonian_system_residuals(state: AugmentedState, problem: ControlProblem) -> HamiltonianResiduals:
    """Interior max-norms of the three Hamiltonian optimality conditions."""
    if state.p is None:
        raise PreconditionError("Hamiltonian residuals need the multiplier p")
    grid = state.grid
    order = problem.order
    phi, ju, jq, dL_du, dL_dq, k = _node_partials(state, problem)
    p = state.p.values

    dyn = combined_derivative(state.q, order).values - phi
    costate = (
        combined_adjoint_side(state.p, order).values
        + dL_dq * k
        + covector_times_jacobian(p, jq)
    )
    stationarity = dL_du * k + covector_times_jacobian(p, ju)
    return HamiltonianResiduals(
        dyn_defect=interior_max(dyn, grid),
        costate_defect=interior_max(costate, grid),
        stationarity_defect=interior_max(stationarity, grid),
    )


# {{{ Poisson bracket


PointFn = Callable[[np.ndarray, np.ndarray, float], complex | np.ndarray]


@dataclass(frozen=True)
class Observable:
    """A scalar point function ``f(q, p, tau)`` with its gradients in ``q`` and ``p``."""

    value: PointFn
    d_q: PointFn
    d_p: PointFn
    dim: int = 1
    validate: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.validate:
            check_observable(self)


def check_observable(obs: Observable, probes: int = 20, rtol: float = 1e-5, seed: int = 0) -> float:
    """Compare the gradients of ``obs`` with central differences."""
    rng = np.random.default_rng(seed)
    d = obs.dim
    worst = 0.0
    for _ in range(probes):
        q = rng.uniform(-2, 2, d)
        p = rng.uniform(-2, 2, d)
        tau = float(rng.uniform(0, 1))
        for slot, grad in (("q", obs.d_q), ("p", obs.d_p)):
            exact = np.atleast_1d(np.asarray(grad(q, p, tau), dtype=complex))
            for i in range(d):
                e = np.zeros(d)
                e[i] = 1e-6 * max(1.0, abs((q if slot == "q" else p)[i]))
                if slot == "q":
                    fd = (obs.value(q + e, p, tau) - obs.value(q - e, p, tau)) / (2 * e[i])
                else:
                    fd = (obs.value(q, p + e, tau) - obs.value(q, p - e, tau)) / (2 * e[i])
                err = abs(fd - exact[i]) / max(abs(fd), abs(exact[i]), 1e-8)
                worst = max(worst, err)
                if err > rtol:
                    raise PreconditionError(
                        f"d_{slot}[{i}] disagrees with finite differences ({err:.3e})"
                    )
    return worst


def poisson_bracket(f: Observable, g: Observable, at: tuple) -> complex:
    """Evaluate ``{f, g}`` at the point ``at = (q, p, tau)``."""
    q, p, tau = at
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    fp = np.atleast_1d(f.d_p(q, p, tau))
    fq = np.atleast_1d(f.d_q(q, p, tau))
    gp = np.atleast_1d(g.d_p(q, p, tau))
    gq = np.atleast_1d(g.d_q(q, p, tau))
    return complex(np.sum(fp * gq) - np.sum(fq * gp))


def coordinate(i: int = 0, dim: int = 1) -> Observable:
    """The observable ``q_i``."""
    e = np.eye(dim)[i]
    return Observable(
        value=lambda q, p, t: q[i],
        d_q=lambda q, p, t: e,
        d_p=lambda q, p, t: np.zeros(dim),
        dim=dim,
    )


def momentum(i: int = 0, dim: int = 1) -> Observable:
    """The observable ``p_i``."""
    e = np.eye(dim)[i]
    return Observable(
        value=lambda q, p, t: p[i],
        d_q=lambda q, p, t: np.zeros(dim),
        d_p=lambda q, p, t: e,
        dim=dim,
    )


def hamiltonian_observable(problem: ControlProblem, u, grid: Grid) -> Observable:
    """The Hamiltonian at a frozen control ``u`` as a function of ``(q, p, tau)``."""
    d = problem.lagrangian.dim
    u1 = np.atleast_1d(np.asarray(u, dtype=complex))[None, :]

    def parts(q, p, tau):
        q1 = np.asarray(q, dtype=complex)[None, :]
        t1 = np.array([float(tau)])
        k = _point_kernel(float(tau), grid, problem.order.alpha)
        _, _, dL_dq = problem.lagrangian.evaluate(u1, q1, t1)
        phi, _, jq = problem.evaluate_phi(u1, q1, t1)
        return k, dL_dq[0], phi[0], jq[0]

    def d_q(q, p, tau):
        k, dL_dq, _, jq = parts(q, p, tau)
        return dL_dq * k + np.asarray(p) @ jq

    def d_p(q, p, tau):
        return parts(q, p, tau)[2]

    return Observable(
        value=lambda q, p, tau: hamiltonian_value(u1[0], q, p, tau, problem, grid),
        d_q=d_q,
        d_p=d_p,
        dim=d,
    )


# }}}


def _probe_q_independence(problem: ControlProblem, atol: float = 1e-12, probes: int = 32) -> None:
    rng = np.random.default_rng(1)
    d = problem.lagrangian.dim
    u = rng.uniform(-2, 2, (probes, d))
    q = rng.uniform(-2, 2, (probes, d))
    tau = rng.uniform(0, 1, probes)
    dL_dq = np.asarray(problem.lagrangian.d_q(u, q, tau))
    jq = np.asarray(problem.d_q_phi(u, q, tau))
    worst = max(float(np.max(np.abs(dL_dq))), float(np.max(np.abs(jq))))
    if worst > atol:
        raise PreconditionError(f"L or phi depends on q (|d/dq| = {worst:.3e})")


def corollary3_check(problem: ControlProblem, state: AugmentedState) -> float:
    r"""Constant-of-motion defect of the multiplier solving :math:`\partial_u H = 0`.

    Requires ``L`` and ``phi`` to be independent of ``q``; then the multiplier
    is a fractional constant of motion along solutions of the Hamiltonian
    system, and the returned defect tends to zero under refinement.
    """
    _probe_q_independence(problem)
    p = stationary_costate(state, problem)
    return constant_of_motion_defect(state.q.with_values(p), problem.order)
