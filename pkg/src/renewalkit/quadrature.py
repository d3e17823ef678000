"""Uniform-grid quadrature support: composite Simpson and marching weights.

Composite Simpson needs an even interval count; grids requested with an
odd count are extended by one node on the right, so integrands must be
evaluable (or identically zero) just past the nominal span.  Support
cutoffs in the kernels guarantee that for every use in this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform grid: node k sits at ``start + k*step``, k = 0..n_nodes-1."""

    step: float
    n_nodes: int
    start: float = 0.0

    def __post_init__(self) -> None:
        if self.step <= 0.0:
            raise ConfigError(f"grid step must be positive, got {self.step}")
        if self.n_nodes < 3:
            raise ConfigError(f"grid needs at least 3 nodes, got {self.n_nodes}")

    @classmethod
    def from_span(cls, start: float, stop: float, step: float) -> "QuadratureGrid":
        """Grid covering [start, stop] with the given step.

        The interval count is rounded to cover the span; an odd count is
        extended by one node at the right end so Simpson applies.
        """
        if stop <= start:
            raise ConfigError(f"empty span [{start}, {stop}]")
        n_int = max(int(round((stop - start) / step)), 2)
        if n_int * step < (stop - start) - 1e-12 * max(abs(stop), 1.0):
            n_int += 1
        if n_int % 2 == 1:
            n_int += 1
        return cls(step=step, n_nodes=n_int + 1, start=start)

    @property
    def n_intervals(self) -> int:
        return self.n_nodes - 1

    @property
    def stop(self) -> float:
        return self.start + self.n_intervals * self.step

    @property
    def nodes(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n_nodes)

    def extended_for_simpson(self) -> "QuadratureGrid":
        """Same grid, plus one right-end node when the interval count is odd."""
        if self.n_intervals % 2 == 0:
            return self
        return QuadratureGrid(step=self.step, n_nodes=self.n_nodes + 1, start=self.start)


def simpson_weights(n_intervals: int, step: float) -> np.ndarray:
    """Composite Simpson weights for n_intervals (even) uniform intervals."""
    if n_intervals < 2 or n_intervals % 2 != 0:
        raise ConfigError(f"Simpson needs an even interval count >= 2, got {n_intervals}")
    w = np.full(n_intervals + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (step / 3.0)


def integrate_simpson(values: np.ndarray, step: float) -> float:
    """Composite Simpson on sampled values (odd length required)."""
    values = np.asarray(values, dtype=float)
    return float(simpson_weights(len(values) - 1, step) @ values)


def integrate_function(f, grid: QuadratureGrid) -> float:
    """Composite Simpson of a callable on the grid (extended if needed)."""
    g = grid.extended_for_simpson()
    return integrate_simpson(f(g.nodes), g.step)


def history_weights(n_intervals: int, step: float) -> np.ndarray:
    """Weights for the marching convolution integral over [0, n_intervals*step].

    Composite Simpson wherever the interval count allows it; an odd count
    gets a trapezoid patch on the last interval; a single interval is pure
    trapezoid.  Zero intervals yield a single zero weight.
    """
    if n_intervals < 0:
        raise ConfigError("negative interval count")
    if n_intervals == 0:
        return np.zeros(1)
    if n_intervals == 1:
        return np.array([0.5, 0.5]) * step
    w = np.zeros(n_intervals + 1)
    if n_intervals % 2 == 0:
        w[: n_intervals + 1] = simpson_weights(n_intervals, step)
    else:
        w[:n_intervals] = simpson_weights(n_intervals - 1, step)
        w[n_intervals - 1] += 0.5 * step
        w[n_intervals] += 0.5 * step
    return w


def cumulative_trapezoid(values: np.ndarray, step: float) -> np.ndarray:
    """Running trapezoid integral, zero at the first node."""
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    if len(values) > 1:
        out[1:] = np.cumsum(0.5 * step * (values[1:] + values[:-1]))
    return out


def trapezoid_convolution(u: np.ndarray, v: np.ndarray, step: float) -> np.ndarray:
    """Trapezoid discretization of (u*v)(t) = int_0^t u(a) v(t-a) da.

    Exact for constant integrands; symmetric in u and v.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(u) != len(v):
        raise ConfigError("convolution operands must share the grid")
    n = len(u)
    full = np.convolve(u, v)[:n] * step
    full -= 0.5 * step * (u[0] * v + u * v[0])
    return full
