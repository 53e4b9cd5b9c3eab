"""Uniform time grids, sampled functions and the order triple."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class DomainError(ValueError):
    """Raised when an input violates a documented domain constraint."""


class PreconditionError(ValueError):
    """Raised when an operation's documented precondition is not met."""


@dataclass(frozen=True)
class Grid:
    r"""Uniform grid on the intrinsic-time interval :math:`[a, b]`.

    The observer time :math:`t` is stored here as well so that every kernel
    :math:`(t - \tau)^{\alpha - 1}` in the package uses one value.
    """

    a: float
    b: float
    n_points: int
    t_obs: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("interval endpoints must be finite")
        if not self.a < self.b:
            raise DomainError(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise DomainError(f"n_points must be an integer >= 3, got {self.n_points}")
        if not math.isfinite(self.t_obs) or self.t_obs < self.b:
            raise DomainError(f"need t_obs >= b, got t_obs={self.t_obs}, b={self.b}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.n_points, dtype=float)
        return self.a + j * self.h

    def interior(self, margin: float = 0.05) -> slice:
        """Slice of nodes kept by interior error norms.

        A margin of ``ceil(margin * n)`` nodes is dropped at each end.
        """
        m = math.ceil(margin * self.n_points)
        return slice(m, self.n_points - m)

    def refined(self, n_points: int) -> Grid:
        return Grid(self.a, self.b, n_points, self.t_obs)


def make_grid(a: float, b: float, n_points: int, t_obs: float | None = None) -> Grid:
    """Build a uniform grid; ``t_obs`` defaults to ``b``."""
    return Grid(float(a), float(b), int(n_points), float(b if t_obs is None else t_obs))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex samples of a scalar or vector function on a :class:`Grid`.

    ``values`` has shape ``(n,)`` for scalar functions and ``(n, d)`` for
    vector functions. The array is made read-only on construction.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.ndim not in (1, 2):
            raise DomainError(f"values must be 1d or 2d, got shape {values.shape}")
        if values.shape[0] != self.grid.n_points:
            raise DomainError(
                f"expected {self.grid.n_points} samples, got {values.shape[0]}"
            )
        if values.ndim == 2 and values.shape[1] < 1:
            raise DomainError("vector dimension must be >= 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 2

    def with_values(self, values: np.ndarray) -> SampledFunction:
        return SampledFunction(self.grid, values)

    def __add__(self, other: SampledFunction) -> SampledFunction:
        check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: SampledFunction) -> SampledFunction:
        check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: complex) -> SampledFunction:
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> SampledFunction:
        return self.with_values(-self.values)


def check_same_grid(*fns: SampledFunction) -> Grid:
    grid = fns[0].grid
    for f in fns[1:]:
        if f.grid != grid:
            raise DomainError(f"grid mismatch: {f.grid} != {grid}")
    return grid


def sample(fn: Callable[[float], complex | np.ndarray], grid: Grid) -> SampledFunction:
    """Evaluate ``fn`` at every node of ``grid``; no interpolation is done."""
    out = []
    for j, tau in enumerate(grid.nodes):
        try:
            out.append(np.asarray(fn(float(tau)), dtype=complex))
        except Exception as exc:
            raise RuntimeError(f"evaluation failed at node {j} (tau={tau!r})") from exc
    shapes = {v.shape for v in out}
    if len(shapes) != 1:
        raise DomainError(f"inconsistent sample shapes: {sorted(shapes)}")
    return SampledFunction(grid, np.stack(out))


def zeros(grid: Grid, dim: int | None = None) -> SampledFunction:
    shape = (grid.n_points,) if dim is None else (grid.n_points, dim)
    return SampledFunction(grid, np.zeros(shape, dtype=complex))


@dataclass(frozen=True)
class OrderSpec:
    r"""Orders :math:`(\alpha, \beta)` and mixing parameter :math:`\gamma`.

    ``gamma = -1j`` selects the left derivative of order ``alpha`` and
    ``gamma = 1j`` the negated right derivative of order ``beta``.
    """

    alpha: float
    beta: float
    gamma: complex = -1j

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 < value <= 1.0):
                raise DomainError(f"{name} must lie in (0, 1], got {value}")
        gamma = complex(self.gamma)
        if not (math.isfinite(gamma.real) and math.isfinite(gamma.imag)):
            raise DomainError(f"gamma must be finite, got {gamma}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", gamma)

    @property
    def left_coefficient(self) -> complex:
        return (1 + 1j * self.gamma) / 2

    @property
    def right_coefficient(self) -> complex:
        """Coefficient multiplying the right derivative (sign included)."""
        return -(1 - 1j * self.gamma) / 2

    def adjoint_side(self) -> OrderSpec:
        """Orders swapped and gamma negated."""
        return OrderSpec(self.beta, self.alpha, -self.gamma)

    @property
    def is_left(self) -> bool:
        return self.gamma == -1j

    @property
    def is_right(self) -> bool:
        return self.gamma == 1j


def gamma_function(x: float) -> float:
    """Euler gamma function; raises at the poles ``0, -1, -2, ...``."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma function has a pole at {x}")
    return math.gamma(x)
