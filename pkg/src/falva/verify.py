"""Built-in verification suites run by ``falva verify``.

Each suite sweeps a fixed parameter set and returns one :class:`CaseResult`
per case. Random inputs come from a generator seeded by the caller, so equal
seeds give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .action import free_particle, oscillator
from .grid import Grid, OrderSpec, SampledFunction, make_grid, sample
from .ops import combined_derivative, ibp_defect, left_rl_derivative, right_rl_derivative
from .optimality import constant_of_motion_defect, el_residual, fractional_momentum

REDUCTION_TOL = 1e-13
IBP_LADDER = (129, 257, 513, 1025)
IBP_TOL = 5e-2
CONSTANTS_LADDER = (129, 257, 513)
CLASSICAL_LADDER = (65, 129, 257, 513)
FALVA_TOL = 1e-10


@dataclass(frozen=True)
class CaseResult:
    suite: str
    case: str
    passed: bool
    measured: tuple[float, ...]
    threshold: float
    order: float = math.nan
    note: str = ""
    extra: dict = field(default_factory=dict, compare=False)


def random_smooth(rng: np.random.Generator, grid: Grid, modes: int = 5, complex_valued: bool = True) -> SampledFunction:
    """Random trigonometric polynomial sampled on ``grid``."""
    s = (grid.nodes - grid.a) / (grid.b - grid.a)
    k = np.arange(modes)
    a = rng.normal(size=modes) / (1 + k)
    b = rng.normal(size=modes) / (1 + k)
    cos = np.cos(np.pi * np.outer(s, k))
    values = cos @ a + np.sin(np.pi * np.outer(s, k)) @ b
    if complex_valued:
        values = values + 1j * (cos @ (rng.normal(size=modes) / (1 + k)))
    return SampledFunction(grid, values)


def observed_order(ns, errors) -> float:
    """Least-squares slope of ``-log(error)`` against ``log(n - 1)``."""
    h = 1.0 / (np.asarray(ns, dtype=float) - 1)
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0):
        return math.inf
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def suite_reductions(rng: np.random.Generator) -> list[CaseResult]:
    out = []
    grid = make_grid(0.0, 1.0, 257, 1.0)
    orders = [(0.3, 0.6), (0.5, 0.5), (0.8, 1.0), (1.0, 0.4)]
    for i in range(5):
        f = random_smooth(rng, grid)
        for alpha, beta in orders:
            left = left_rl_derivative(f, alpha).values
            right = right_rl_derivative(f, beta).values
            d_left = np.max(np.abs(combined_derivative(f, OrderSpec(alpha, beta, -1j)).values - left))
            d_right = np.max(np.abs(combined_derivative(f, OrderSpec(alpha, beta, 1j)).values + right))
            for tag, d in (("gamma=-i", d_left), ("gamma=+i", d_right)):
                out.append(CaseResult(
                    "reductions", f"f{i} alpha={alpha} beta={beta} {tag}",
                    bool(d <= REDUCTION_TOL), (float(d),), REDUCTION_TOL,
                ))
    return out


def ibp_defects(alpha: float, beta: float, gamma: complex, ladder=IBP_LADDER) -> list[float]:
    order = OrderSpec(alpha, beta, gamma)
    defects = []
    for n in ladder:
        grid = make_grid(0.0, 1.0, n, 1.0)
        f = sample(lambda t: t * (1 - t), grid)
        g = sample(math.cos, grid)
        defects.append(abs(ibp_defect(f, g, order)))
    return defects


def suite_ibp(rng: np.random.Generator) -> list[CaseResult]:
    out = []
    for alpha, beta in ((0.5, 0.5), (0.7, 0.4)):
        for gamma in (0, 0.3, -1j):
            d = ibp_defects(alpha, beta, gamma)
            ok = strictly_decreasing(d) and d[-1] <= IBP_TOL
            out.append(CaseResult(
                "ibp", f"alpha={alpha} beta={beta} gamma={complex(gamma)}",
                ok, tuple(d), IBP_TOL, observed_order(IBP_LADDER, d),
            ))
    return out


def falva_extremal(alpha: float, t_obs: float, q_a: float = 0.0, q_b: float = 1.0, a: float = 0.0, b: float = 1.0):
    r"""Closed-form extremal of ``L = v^2 / 2`` for ``beta = 1``, ``gamma = 1j``.

    The Euler-Lagrange equation reduces to ``d/dtau (v (t - tau)^(alpha-1)) = 0``,
    so ``v = C (t - tau)^(1 - alpha)``.
    """
    e = 2.0 - alpha

    def prim(tau):
        return -((t_obs - tau) ** e) / e

    scale = (q_b - q_a) / (prim(b) - prim(a))
    return lambda tau: q_a + scale * (prim(tau) - prim(a))


def suite_constants(rng: np.random.Generator) -> list[CaseResult]:
    out = []
    lag = free_particle()
    for alpha in (0.5, 0.8):
        order = OrderSpec(alpha, 1.0, 1j)
        defects = []
        for n in CONSTANTS_LADDER:
            grid = make_grid(0.0, 1.0, n, 2.0)
            q = sample(falva_extremal(alpha, 2.0), grid)
            defects.append(constant_of_motion_defect(fractional_momentum(q, lag, order), order))
        out.append(CaseResult(
            "constants", f"momentum alpha={alpha} beta=1 gamma=+i t_obs=2",
            strictly_decreasing(defects), tuple(defects), math.nan,
            observed_order(CONSTANTS_LADDER, defects),
        ))
    grid = make_grid(0.0, 1.0, 257, 2.0)
    d = constant_of_motion_defect(SampledFunction(grid, np.full(257, 5.0)), OrderSpec(1.0, 1.0, 1j))
    out.append(CaseResult("constants", "C=5 alpha=beta=1 gamma=+i", bool(d <= 1e-12), (d,), 1e-12))
    return out


def suite_classical_limit(rng: np.random.Generator) -> list[CaseResult]:
    lag = oscillator()
    order = OrderSpec(1.0, 1.0, -1j)
    res = []
    for n in CLASSICAL_LADDER:
        grid = make_grid(0.0, 1.0, n, 1.0)
        q = sample(lambda t: math.sinh(t) / math.sinh(1.0), grid)
        res.append(el_residual(q, lag, order).norm)
    return [CaseResult(
        "classical-limit", "oscillator sinh extremal alpha=beta=1 gamma=-i",
        strictly_decreasing(res), tuple(res), math.nan, observed_order(CLASSICAL_LADDER, res),
    )]


def classical_friction_residual(q: SampledFunction, alpha: float) -> np.ndarray:
    """``-w' - (1 - alpha) / (t - tau) w`` for ``L = v^2 / 2``, coded with plain
    forward/backward differences. Entries ``0`` and ``n - 1`` are not
    comparable and set to nan."""
    grid = q.grid
    h = grid.h
    x = q.values
    v = np.empty_like(x)
    v[:-1] = np.diff(x) / h
    v[-1] = np.nan
    w = v
    dw = np.empty_like(w)
    dw[1:] = np.diff(w) / h
    dw[0] = np.nan
    dt = grid.t_obs - grid.nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        fric = np.where(dt > 0, (1 - alpha) / dt, np.nan)
    r = -dw - fric * w
    r[[0, -1]] = np.nan
    return r


def suite_falva_limit(rng: np.random.Generator) -> list[CaseResult]:
    out = []
    lag = free_particle()
    for alpha in (0.5, 0.9):
        for t_obs in (1.0, 2.0):
            grid = make_grid(0.0, 1.0, 257, t_obs)
            q = random_smooth(rng, grid, complex_valued=False)
            order = OrderSpec(alpha, 1.0, 1j)
            r = el_residual(q, lag, order).values
            ref = classical_friction_residual(q, alpha)
            s = slice(1, grid.n_points - 1)
            mask = np.isfinite(ref[s])
            d = float(np.max(np.abs(r[s][mask] - ref[s][mask])))
            out.append(CaseResult(
                "falva-limit", f"alpha={alpha} beta=1 gamma=+i t_obs={t_obs}",
                bool(d <= FALVA_TOL), (d,), FALVA_TOL,
            ))
    return out


SUITES: dict[str, Callable[[np.random.Generator], list[CaseResult]]] = {
    "reductions": suite_reductions,
    "ibp": suite_ibp,
    "constants": suite_constants,
    "classical-limit": suite_classical_limit,
    "falva-limit": suite_falva_limit,
}


def run_suite(name: str, seed: int = 0) -> list[CaseResult]:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](np.random.default_rng(seed))


__all__ = [
    "SUITES",
    "CaseResult",
    "classical_friction_residual",
    "falva_extremal",
    "ibp_defects",
    "observed_order",
    "random_smooth",
    "run_suite",
]
