r"""Riemann-Liouville operators on uniform grids.

Integrals use product integration: the smooth factor is replaced by its
piecewise-linear interpolant and integrated exactly against the kernel
:math:`(\tau_j - s)^{\alpha - 1}`. Derivatives of order :math:`0 < \alpha \le 1`
use the Grünwald-Letnikov sum

.. math::

    D_{a+}^\alpha f(\tau_j) \approx h^{-\alpha} \sum_{k=0}^{j} g_k f_{j-k},
    \qquad g_k = (-1)^k \binom{\alpha}{k},

and its mirror image for the right derivative. For :math:`\alpha = 1` these
reduce to backward and (negated) forward differences. The discrete left and
right matrices are transposes of each other, which makes the discrete
integration by parts identity hold up to endpoint quadrature terms.
"""

from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.signal

from .grid import (
    DomainError,
    Grid,
    OrderSpec,
    PreconditionError,
    SampledFunction,
    check_same_grid,
    gamma_function,
)


class OperatorKind(enum.Enum):
    LeftIntegral = enum.auto()
    RightIntegral = enum.auto()
    LeftDerivative = enum.auto()
    RightDerivative = enum.auto()
    Combined = enum.auto()
    CombinedAdjointSide = enum.auto()


def _check_integral_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (np.isfinite(alpha) and alpha > 0):
        raise DomainError(f"integral order must be > 0, got {alpha}")
    return alpha


def _check_derivative_order(alpha: float) -> float:
    alpha = float(alpha)
    if not (np.isfinite(alpha) and 0 < alpha <= 1):
        raise DomainError(f"derivative order must lie in (0, 1], got {alpha}")
    return alpha


# {{{ weights


@lru_cache(maxsize=64)
def grunwald_weights(alpha: float, n: int) -> np.ndarray:
    """First ``n`` Grünwald-Letnikov weights ``(-1)^k binom(alpha, k)``."""
    k = np.arange(1, n, dtype=float)
    w = np.empty(n)
    w[0] = 1.0
    w[1:] = np.cumprod(1.0 - (alpha + 1.0) / k)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def _product_weights(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    # Toeplitz part c_m and the first-column correction for the piecewise
    # linear product rule, both without the h^alpha / Gamma(alpha + 2) factor.
    m = np.arange(n, dtype=float)
    p = alpha + 1.0
    c = np.empty(n)
    c[0] = 1.0
    c[1:] = (m[1:] + 1) ** p - 2 * m[1:] ** p + (m[1:] - 1) ** p
    first = np.zeros(n)
    first[1:] = (m[1:] - 1) ** p - (m[1:] - 1 - alpha) * m[1:] ** alpha
    c.setflags(write=False)
    first.setflags(write=False)
    return c, first


# }}}


# {{{ Toeplitz application


def _lower_apply(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Compute ``out[j] = sum_{k <= j} weights[j - k] * values[k]``."""
    n = values.shape[0]
    kernel = weights if values.ndim == 1 else weights[:, None]
    return scipy.signal.convolve(kernel, values, method="auto")[:n]


def _upper_apply(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Compute ``out[j] = sum_{k >= j} weights[k - j] * values[k]``."""
    return _lower_apply(weights, values[::-1])[::-1]


# }}}


# {{{ one-sided operators


def left_rl_integral(f: SampledFunction, alpha: float) -> SampledFunction:
    r"""Left Riemann-Liouville integral :math:`I_{a+}^\alpha f` at every node."""
    alpha = _check_integral_order(alpha)
    grid = f.grid
    n = grid.n_points
    c, first = _product_weights(alpha, n)
    values = _lower_apply(c, f.values)
    corr = first - c
    corr[0] = 0.0
    values = values + (corr if f.values.ndim == 1 else corr[:, None]) * f.values[0]
    values[0] = 0.0
    return f.with_values(grid.h**alpha / gamma_function(alpha + 2) * values)


def right_rl_integral(f: SampledFunction, alpha: float) -> SampledFunction:
    r"""Right Riemann-Liouville integral :math:`I_{b-}^\alpha f` at every node."""
    alpha = _check_integral_order(alpha)
    grid = f.grid
    n = grid.n_points
    c, first = _product_weights(alpha, n)
    values = _upper_apply(c, f.values)
    corr = (first - c)[::-1].copy()
    corr[-1] = 0.0
    values = values + (corr if f.values.ndim == 1 else corr[:, None]) * f.values[-1]
    values[-1] = 0.0
    return f.with_values(grid.h**alpha / gamma_function(alpha + 2) * values)


def left_rl_derivative(f: SampledFunction, alpha: float) -> SampledFunction:
    r"""Left Riemann-Liouville derivative :math:`D_{a+}^\alpha f`.

    First order accurate when :math:`f(a) = 0`. Otherwise the exact derivative
    behaves like :math:`(\tau - a)^{-\alpha}` near ``a`` and the first few
    nodes carry scheme-dependent values.
    """
    alpha = _check_derivative_order(alpha)
    g = grunwald_weights(alpha, f.grid.n_points)
    return f.with_values(_lower_apply(g, f.values) / f.grid.h**alpha)


def right_rl_derivative(f: SampledFunction, alpha: float) -> SampledFunction:
    r"""Right Riemann-Liouville derivative :math:`D_{b-}^\alpha f`.

    Uses the sign convention :math:`(-d/d\tau)`, so that for ``alpha = 1``
    this is :math:`-f'`.
    """
    alpha = _check_derivative_order(alpha)
    g = grunwald_weights(alpha, f.grid.n_points)
    return f.with_values(_upper_apply(g, f.values) / f.grid.h**alpha)


# }}}


# {{{ combined operators


def combined_derivative(f: SampledFunction, order: OrderSpec) -> SampledFunction:
    r"""Apply :math:`D_\gamma^{\alpha,\beta}` to ``f``.

    The left and right derivatives are mixed with the coefficients
    :math:`(1 + i\gamma)/2` and :math:`-(1 - i\gamma)/2`. A vanishing
    coefficient skips its operator entirely, so the ``gamma = -1j`` and
    ``gamma = 1j`` reductions hold exactly.
    """
    cl, cr = order.left_coefficient, order.right_coefficient
    values = np.zeros(f.values.shape, dtype=complex)
    if cl != 0:
        values = values + cl * left_rl_derivative(f, order.alpha).values
    if cr != 0:
        values = values + cr * right_rl_derivative(f, order.beta).values
    return f.with_values(values)


def combined_adjoint_side(g: SampledFunction, order: OrderSpec) -> SampledFunction:
    r"""Apply :math:`D_{-\gamma}^{\beta,\alpha}`, the operator paired with
    :math:`D_\gamma^{\alpha,\beta}` under integration by parts."""
    return combined_derivative(g, order.adjoint_side())


def apply(kind: OperatorKind, f: SampledFunction, order: OrderSpec | float) -> SampledFunction:
    """Dispatch on :class:`OperatorKind`."""
    if kind in (OperatorKind.Combined, OperatorKind.CombinedAdjointSide):
        if not isinstance(order, OrderSpec):
            raise DomainError(f"{kind.name} requires an OrderSpec")
        if kind is OperatorKind.Combined:
            return combined_derivative(f, order)
        return combined_adjoint_side(f, order)

    if isinstance(order, OrderSpec):
        raise DomainError(f"{kind.name} takes a single order")
    return {
        OperatorKind.LeftIntegral: left_rl_integral,
        OperatorKind.RightIntegral: right_rl_integral,
        OperatorKind.LeftDerivative: left_rl_derivative,
        OperatorKind.RightDerivative: right_rl_derivative,
    }[kind](f, order)


def derivative_matrix(grid: Grid, order: OrderSpec) -> np.ndarray:
    """Dense matrix of the discrete :math:`D_\\gamma^{\\alpha,\\beta}`."""
    n = grid.n_points
    mat = np.zeros((n, n), dtype=complex)
    cl, cr = order.left_coefficient, order.right_coefficient
    if cl != 0:
        g = grunwald_weights(order.alpha, n) / grid.h**order.alpha
        mat += cl * np.tril(scipy.linalg.toeplitz(g))
    if cr != 0:
        g = grunwald_weights(order.beta, n) / grid.h**order.beta
        mat += cr * np.triu(scipy.linalg.toeplitz(g))
    return mat


# }}}


# {{{ integration by parts


def trapezoid(values: np.ndarray, grid: Grid) -> complex:
    """Composite trapezoidal rule along the node axis, summed over components."""
    w = np.full(grid.n_points, grid.h)
    w[0] = w[-1] = grid.h / 2
    return complex(np.sum(w @ np.asarray(values).reshape(grid.n_points, -1)))


def ibp_defect(
    f: SampledFunction,
    g: SampledFunction,
    order: OrderSpec,
    *,
    atol: float = 1e-12,
) -> complex:
    r"""Integration-by-parts defect

    .. math::

        \int_a^b (D_\gamma^{\alpha,\beta} f) g \,d\tau
        + \int_a^b f (D_{-\gamma}^{\beta,\alpha} g) \,d\tau,

    which vanishes in the continuum limit when ``f`` or ``g`` vanishes at both
    endpoints. Products of vector functions are plain (unconjugated) dot
    products.
    """
    grid = check_same_grid(f, g)
    if f.values.shape != g.values.shape:
        raise DomainError(f"shape mismatch: {f.values.shape} != {g.values.shape}")

    def vanishes(h: SampledFunction) -> bool:
        return bool(np.all(np.abs(h.values[[0, -1]]) <= atol))

    if not (vanishes(f) or vanishes(g)):
        raise PreconditionError("f or g must vanish at both endpoints")

    df = combined_derivative(f, order).values
    dg = combined_adjoint_side(g, order).values
    return trapezoid(df * g.values, grid) + trapezoid(f.values * dg, grid)


# }}}
