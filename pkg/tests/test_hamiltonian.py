import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from falva.action import (
    AugmentedState,
    ControlProblem,
    Lagrangian,
    dynamics_defect,
    free_particle,
    kernel_values,
    oscillator,
)
from falva.grid import DomainError, OrderSpec, PreconditionError, make_grid, sample, zeros
from falva.hamiltonian import (
    Observable,
    check_observable,
    coordinate,
    corollary3_check,
    hamiltonian_observable,
    hamiltonian_system_residuals,
    hamiltonian_value,
    momentum,
    poisson_bracket,
)
from falva.ops import combined_derivative
from falva.optimality import el_residual, fractional_momentum
from falva.verify import falva_extremal, random_smooth


def null_lagrangian(dim=1):
    return Lagrangian(
        value=lambda v, q, t: np.zeros(len(t)),
        d_v=lambda v, q, t: np.zeros_like(v),
        d_q=lambda v, q, t: np.zeros_like(q),
        dim=dim,
    )


def cov_state(q, lag, order):
    return AugmentedState(q, combined_derivative(q, order), fractional_momentum(q, lag, order))


# {{{ Hamiltonian value


def test_hamiltonian_without_multiplier_is_weighted_lagrangian():
    g = make_grid(0.0, 1.0, 33, 2.0)
    problem = ControlProblem.calculus_of_variations(free_particle(), OrderSpec(0.5, 0.5, 0.2))
    H = hamiltonian_value(1.5, 0.3, 0.0, 0.4, problem, g)
    assert H == pytest.approx(0.5 * 1.5**2 * (2.0 - 0.4) ** -0.5, rel=1e-14)


def test_classical_control_hamiltonian():
    g = make_grid(0.0, 1.0, 33, 1.0)
    problem = ControlProblem.calculus_of_variations(free_particle(), OrderSpec(1.0, 1.0, -1j))
    assert hamiltonian_value(2.0, 0.1, -0.5, 1.0, problem, g) == pytest.approx(2.0 - 1.0, abs=1e-15)


def test_null_lagrangian_hamiltonian_is_pairing():
    g = make_grid(0.0, 1.0, 33, 3.0)
    problem = ControlProblem.calculus_of_variations(null_lagrangian(2), OrderSpec(0.4, 0.9, 0.1))
    assert hamiltonian_value([1.0, 2j], [0, 0], [3.0, -1.0], 0.5, problem, g) == 3.0 - 2j


def test_hamiltonian_pole_raises():
    g = make_grid(0.0, 1.0, 33, 1.0)
    problem = ControlProblem.calculus_of_variations(free_particle(), OrderSpec(0.5, 1.0, 1j))
    with pytest.raises(DomainError, match="tau=1.0"):
        hamiltonian_value(1.0, 0.0, 0.0, 1.0, problem, g)


# }}}


# {{{ Hamiltonian system


@pytest.mark.parametrize("alpha, beta, gamma", [(0.6, 1.0, 1j), (0.5, 0.7, -1j), (0.8, 0.4, 0.3 + 0.1j)])
def test_cov_state_satisfies_stationarity_and_dynamics(alpha, beta, gamma):
    g = make_grid(0.0, 1.0, 129, 1.5)
    lag = oscillator()
    order = OrderSpec(alpha, beta, gamma)
    problem = ControlProblem.calculus_of_variations(lag, order)
    state = cov_state(random_smooth(np.random.default_rng(0), g), lag, order)
    res = hamiltonian_system_residuals(state, problem)
    assert res.stationarity_defect == 0
    assert res.dyn_defect == 0
    assert res.costate_defect > 0


def test_zero_state_has_zero_residuals():
    g = make_grid(0.0, 1.0, 65, 1.0)
    problem = ControlProblem.calculus_of_variations(null_lagrangian(), OrderSpec(0.5, 0.5, 0.0))
    res = hamiltonian_system_residuals(AugmentedState(zeros(g), zeros(g), zeros(g)), problem)
    assert (res.dyn_defect, res.costate_defect, res.stationarity_defect) == (0, 0, 0)


def test_dyn_defect_matches_action_module():
    g = make_grid(0.0, 1.0, 129, 2.0)
    problem = ControlProblem.calculus_of_variations(oscillator(), OrderSpec(0.7, 0.6, 0.4j))
    rng = np.random.default_rng(1)
    state = AugmentedState(random_smooth(rng, g), random_smooth(rng, g), random_smooth(rng, g))
    res = hamiltonian_system_residuals(state, problem)
    assert abs(res.dyn_defect - dynamics_defect(state, problem)) <= 1e-14


def test_costate_matches_euler_lagrange_in_classical_case():
    g = make_grid(0.0, 1.0, 257, 1.0)
    lag = oscillator()
    order = OrderSpec(1.0, 1.0, -1j)
    problem = ControlProblem.calculus_of_variations(lag, order)
    q = random_smooth(np.random.default_rng(2), g)
    res = hamiltonian_system_residuals(cov_state(q, lag, order), problem)
    assert abs(res.costate_defect - el_residual(q, lag, order).norm) <= 1e-10


def test_costate_residual_of_extremal_with_control_dynamics():
    # q' = u with nonlinear phi: u = asinh(q') still gives a consistent state
    order = OrderSpec(1.0, 1.0, -1j)
    problem = ControlProblem(
        free_particle(),
        phi=lambda u, q, t: np.sinh(u),
        d_u_phi=lambda u, q, t: np.cosh(u)[:, :, None],
        d_q_phi=lambda u, q, t: np.zeros((len(t), 1, 1)),
        order=order,
    )
    g = make_grid(0.0, 1.0, 129, 1.0)
    q = sample(lambda t: t * t, g)
    u = q.with_values(np.arcsinh(combined_derivative(q, order).values))
    state = AugmentedState(q, u, zeros(g))
    assert hamiltonian_system_residuals(state, problem).dyn_defect <= 1e-12


def test_residuals_need_multiplier():
    g = make_grid(0.0, 1.0, 33, 1.0)
    problem = ControlProblem.calculus_of_variations(free_particle(), OrderSpec(1.0, 1.0, -1j))
    with pytest.raises(PreconditionError):
        hamiltonian_system_residuals(AugmentedState(zeros(g), zeros(g)), problem)


# }}}


# {{{ Poisson bracket


def quadratic(A, B, c):
    """``q.A.q/2 + q.B.p + c.p``; gradients follow by hand."""
    A, B, c = map(np.asarray, (A, B, c))
    return Observable(
        value=lambda q, p, t: 0.5 * q @ A @ q + q @ B @ p + c @ p,
        d_q=lambda q, p, t: 0.5 * (A + A.T) @ q + B @ p,
        d_p=lambda q, p, t: B.T @ q + c,
        dim=len(c),
    )


def random_observable(rng, d=2):
    return quadratic(rng.normal(size=(d, d)), rng.normal(size=(d, d)), rng.normal(size=d))


def combo(a, f, b, g):
    return Observable(
        value=lambda q, p, t: a * f.value(q, p, t) + b * g.value(q, p, t),
        d_q=lambda q, p, t: a * np.asarray(f.d_q(q, p, t)) + b * np.asarray(g.d_q(q, p, t)),
        d_p=lambda q, p, t: a * np.asarray(f.d_p(q, p, t)) + b * np.asarray(g.d_p(q, p, t)),
        dim=f.dim,
    )


def test_canonical_pair():
    at = ([0.3], [-0.2], 0.5)
    assert poisson_bracket(momentum(), coordinate(), at) == 1
    assert poisson_bracket(coordinate(), momentum(), at) == -1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_bracket_antisymmetry_and_bilinearity(seed, a, b):
    rng = np.random.default_rng(seed)
    f, g, h = (random_observable(rng) for _ in range(3))
    at = (rng.normal(size=2), rng.normal(size=2), 0.3)
    assert abs(poisson_bracket(f, f, at)) <= 1e-12
    fg = poisson_bracket(f, g, at)
    assert abs(fg + poisson_bracket(g, f, at)) <= 1e-12 * max(1.0, abs(fg))
    lhs = poisson_bracket(combo(a, f, b, g), h, at)
    rhs = a * poisson_bracket(f, h, at) + b * poisson_bracket(g, h, at)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs))


def test_observable_validation():
    assert check_observable(random_observable(np.random.default_rng(0))) <= 1e-5
    with pytest.raises(PreconditionError, match="d_p"):
        Observable(
            value=lambda q, p, t: q[0] * p[0],
            d_q=lambda q, p, t: p,
            d_p=lambda q, p, t: 2 * q,
            validate=True,
        )


def test_bracket_of_hamiltonian_gives_dynamics():
    g = make_grid(0.0, 1.0, 33, 2.0)
    problem = ControlProblem(
        oscillator(dim=2),
        phi=lambda u, q, t: u + np.sin(q),
        d_u_phi=lambda u, q, t: np.broadcast_to(np.eye(2), (len(t), 2, 2)),
        d_q_phi=lambda u, q, t: np.einsum("ni,ij->nij", np.cos(q), np.eye(2)),
        order=OrderSpec(0.6, 0.8, 0.2),
    )
    u, q, p, tau = np.array([0.4, -1.0]), np.array([0.2, 0.7]), np.array([1.1, -0.3]), 0.35
    H = hamiltonian_observable(problem, u, g)
    assert check_observable(H) <= 1e-5
    phi = u + np.sin(q)
    for i in range(2):
        assert poisson_bracket(H, coordinate(i, 2), (q, p, tau)) == pytest.approx(phi[i], abs=1e-14)
    k = (2.0 - tau) ** (0.6 - 1)
    expected = -(q * k + p * np.cos(q))
    for i in range(2):
        assert poisson_bracket(H, momentum(i, 2), (q, p, tau)) == pytest.approx(expected[i], abs=1e-14)


# }}}


# {{{ constant multiplier


def test_corollary_defect_refines():
    order = OrderSpec(0.6, 1.0, 1j)
    problem = ControlProblem.calculus_of_variations(free_particle(), order)
    defects = []
    for n in (129, 257, 513):
        g = make_grid(0.0, 1.0, n, 2.0)
        q = sample(falva_extremal(0.6, 2.0), g)
        defects.append(corollary3_check(problem, AugmentedState(q, combined_derivative(q, order))))
    assert defects[0] > defects[1] > defects[2]


def test_corollary_costate_equals_momentum():
    g = make_grid(0.0, 1.0, 65, 2.0)
    order = OrderSpec(0.6, 1.0, 1j)
    q = sample(lambda t: t * t, g)
    p = fractional_momentum(q, free_particle(), order).values
    w = combined_derivative(q, order).values
    np.testing.assert_allclose(p, -w * kernel_values(g, 0.6), atol=1e-15)


def test_corollary_null_problem():
    g = make_grid(0.0, 1.0, 65, 1.0)
    problem = ControlProblem.calculus_of_variations(null_lagrangian(), OrderSpec(0.5, 0.5, 0.3))
    assert corollary3_check(problem, AugmentedState(zeros(g), zeros(g), zeros(g))) == 0


def test_corollary_rejects_q_dependence():
    g = make_grid(0.0, 1.0, 65, 2.0)
    problem = ControlProblem.calculus_of_variations(oscillator(), OrderSpec(0.5, 1.0, 1j))
    with pytest.raises(PreconditionError, match="depends on q"):
        corollary3_check(problem, AugmentedState(zeros(g), zeros(g)))


# }}}
