import math

import numpy as np
import pytest

from falva.action import Lagrangian, free_particle, kernel_values, oscillator
from falva.grid import OrderSpec, PreconditionError, SampledFunction, make_grid, sample, zeros
from falva.ops import combined_derivative
from falva.optimality import (
    constant_of_motion_defect,
    el_residual,
    el_residual_kernel_form,
    fractional_momentum,
    friction_force,
)
from falva.solver import minimize_action
from falva.verify import classical_friction_residual, falva_extremal, random_smooth

from oracles import power_derivative

CLASSICAL = OrderSpec(1.0, 1.0, -1j)


def constant(c):
    return Lagrangian(
        value=lambda v, q, t: c * np.ones(len(t)),
        d_v=lambda v, q, t: np.zeros_like(v),
        d_q=lambda v, q, t: np.zeros_like(q),
    )


def ladder(ns, fn):
    return [fn(make_grid(0.0, 1.0, n, 1.0)) for n in ns]


def decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


# {{{ Euler-Lagrange residual


def test_straight_line_is_classical_extremal():
    res = ladder((65, 257), lambda g: el_residual(sample(lambda t: 0.3 + 0.4 * t, g), free_particle(), CLASSICAL).norm)
    assert max(res) <= 1e-10


def test_trivial_lagrangian_residual_is_zero():
    g = make_grid(0.0, 1.0, 129, 1.0)
    q = random_smooth(np.random.default_rng(0), g)
    r = el_residual(q, constant(3.0), OrderSpec(0.6, 0.4, 0.2))
    assert np.all(r.values[:-1] == 0)
    assert r.norm == 0


def test_pole_only_at_last_node():
    g = make_grid(0.0, 1.0, 65, 1.0)
    r = el_residual(sample(lambda t: t * t, g), free_particle(), OrderSpec(0.6, 1.0, 1j))
    assert np.isnan(r.values[-1]) and np.all(np.isfinite(r.values[:-1]))
    assert math.isfinite(r.norm)


def test_solver_minimizer_beats_perturbations_and_refines():
    order = OrderSpec(0.9, 1.0, 1j)
    norms = []
    for n in (65, 129, 257):
        g = make_grid(0.0, 1.0, n, 1.0)
        rep = minimize_action(free_particle(), order, g, 0.0, 1.0)
        norms.append(rep.el_residual_norm)
    assert decreasing(norms)

    q = rep.final_path
    s = (g.nodes - g.a) / (g.b - g.a)
    rng = np.random.default_rng(11)
    for _ in range(20):
        k = rng.integers(1, 6)
        bump = 0.05 * rng.choice([-1, 1]) * np.sin(k * np.pi * s)
        assert el_residual(q + q.with_values(bump), free_particle(), order).norm > norms[-1]


def test_falva_reduction_matches_classical_friction_form():
    for alpha in (0.5, 0.9):
        for t_obs in (1.0, 2.0):
            g = make_grid(0.0, 1.0, 257, t_obs)
            q = random_smooth(np.random.default_rng(7), g, complex_valued=False)
            r = el_residual(q, free_particle(), OrderSpec(alpha, 1.0, 1j)).values
            ref = classical_friction_residual(q, alpha)
            ok = np.isfinite(ref)
            assert np.max(np.abs(r[ok] - ref[ok])) <= 1e-10


# }}}


# {{{ kernel-weighted form


def _form_gap(n, alpha, beta, gamma):
    g = make_grid(0.0, 1.0, n, 2.0)
    q = random_smooth(np.random.default_rng(0), g)
    order = OrderSpec(alpha, beta, gamma)
    plain = el_residual(q, oscillator(), order).values * kernel_values(g, alpha)
    kernel = el_residual_kernel_form(q, oscillator(), order).values
    return float(np.max(np.abs(plain - kernel)[g.interior()]))


@pytest.mark.parametrize("beta, gamma", [(1.0, -1j), (0.6, 0.3), (0.4, 1j)])
def test_forms_agree_at_alpha_one(beta, gamma):
    assert _form_gap(257, 1.0, beta, gamma) <= 1e-12


def test_forms_agree_with_classical_adjoint_side():
    gaps = [_form_gap(n, 0.7, 1.0, 1j) for n in (129, 257, 513, 1025)]
    assert decreasing(gaps)
    assert gaps[-1] <= 2e-2


@pytest.mark.parametrize("beta, gamma", [(0.5, -1j), (0.7, 0.3)])
def test_forms_differ_with_fractional_adjoint_side(beta, gamma):
    # the kernel does not commute with a fractional adjoint-side operator,
    # so the gap stays O(1) under refinement
    gaps = [_form_gap(n, 0.7, beta, gamma) for n in (129, 257, 513, 1025)]
    assert min(gaps) > 0.1
    assert gaps[-1] > 0.5 * gaps[0]


def test_kernel_form_rejects_pole():
    g = make_grid(0.0, 1.0, 33, 1.0)
    with pytest.raises(PreconditionError):
        el_residual_kernel_form(sample(lambda t: t, g), free_particle(), OrderSpec(0.5, 1.0, 1j))


# }}}


# {{{ friction


def test_friction_vanishes_at_alpha_one():
    g = make_grid(0.0, 1.0, 65, 2.0)
    F = friction_force(sample(lambda t: t * t, g), free_particle(), OrderSpec(1.0, 1.0, -1j))
    assert np.all(F.values == 0)


def test_friction_excludes_observer_node():
    g = make_grid(0.0, 1.0, 65, 1.0)
    F = friction_force(sample(lambda t: t * t, g), free_particle(), OrderSpec(0.5, 1.0, -1j))
    assert F.excluded.tolist() == [False] * 64 + [True]
    assert np.isnan(F.values[-1])
    np.testing.assert_allclose(F.T, g.nodes - 1.0)


def test_friction_decays_with_observer_time():
    norms = []
    for t_obs in (2.0, 4.0, 8.0, 16.0):
        g = make_grid(0.0, 1.0, 257, t_obs)
        norms.append(friction_force(sample(lambda t: t, g), free_particle(), OrderSpec(0.5, 1.0, -1j)).norm)
    assert decreasing(norms)
    assert norms[-1] <= norms[0] / 8


def test_friction_against_power_rule():
    g = make_grid(0.0, 1.0, 257, 2.0)
    F = friction_force(sample(lambda t: t, g), free_particle(), OrderSpec(0.5, 1.0, -1j))
    v = np.array([power_derivative(t, 1, 0.5) for t in g.nodes])
    expected = -0.5 / (g.nodes - 2.0) * v
    assert np.max(np.abs(F.values - expected)[g.interior()]) <= 2.5e-2


# }}}


# {{{ momentum and constants of motion


def test_classical_momentum_sign():
    g = make_grid(0.0, 1.0, 65, 1.0)
    q = sample(lambda t: t * t, g)
    p = fractional_momentum(q, free_particle(), CLASSICAL)
    np.testing.assert_array_equal(p.values, -combined_derivative(q, CLASSICAL).values)


def test_velocity_free_lagrangian_has_no_momentum():
    g = make_grid(0.0, 1.0, 65, 2.0)
    lag = Lagrangian(
        value=lambda v, q, t: np.sum(q * q, axis=-1),
        d_v=lambda v, q, t: np.zeros_like(v),
        d_q=lambda v, q, t: 2 * q,
    )
    assert np.all(fractional_momentum(sample(math.sin, g), lag, OrderSpec(0.5, 0.5, 0.2)).values == 0)


def test_fractional_momentum_against_power_rule():
    g = make_grid(0.0, 1.0, 257, 2.0)
    p = fractional_momentum(sample(lambda t: t, g), free_particle(), OrderSpec(0.5, 1.0, -1j))
    expected = -((2.0 - g.nodes) ** -0.5) * 2 / math.sqrt(math.pi) * np.sqrt(g.nodes)
    assert np.max(np.abs(p.values - expected)[g.interior()]) <= 5e-2


def test_momentum_pole_is_nan():
    g = make_grid(0.0, 1.0, 33, 1.0)
    p = fractional_momentum(sample(lambda t: t, g), free_particle(), OrderSpec(0.5, 1.0, -1j))
    assert np.isnan(p.values[-1])
    with pytest.raises(PreconditionError):
        constant_of_motion_defect(p, OrderSpec(0.5, 1.0, -1j))


def test_constant_of_motion_examples():
    g = make_grid(0.0, 1.0, 257, 1.0)
    assert constant_of_motion_defect(zeros(g), OrderSpec(0.5, 0.5, 0.3)) == 0
    five = SampledFunction(g, np.full(257, 5.0))
    assert constant_of_motion_defect(five, OrderSpec(1.0, 1.0, 1j)) <= g.h


@pytest.mark.parametrize("alpha", [0.5, 0.8])
def test_momentum_is_conserved_along_extremal(alpha):
    order = OrderSpec(alpha, 1.0, 1j)
    defects = []
    for n in (129, 257, 513):
        g = make_grid(0.0, 1.0, n, 2.0)
        q = sample(falva_extremal(alpha, 2.0), g)
        defects.append(constant_of_motion_defect(fractional_momentum(q, free_particle(), order), order))
    assert decreasing(defects)


def test_extremal_oracle_solves_reduced_equation():
    # v (t - tau)^(alpha - 1) is constant along the closed-form extremal
    q = falva_extremal(0.7, 2.0)
    tau = np.linspace(0.05, 0.95, 19)
    eps = 1e-6
    v = (q(tau + eps) - q(tau - eps)) / (2 * eps)
    m = v * (2.0 - tau) ** (0.7 - 1)
    assert np.ptp(m) <= 1e-8
    assert q(0.0) == pytest.approx(0.0, abs=1e-15) and q(1.0) == pytest.approx(1.0, abs=1e-15)


# }}}
