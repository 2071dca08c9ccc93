"""Uniform cell-centred grids and space-time fields.

A *field* is an array of shape ``(m, N_1, ..., N_d)``; a
:class:`SpaceTimeField` stacks snapshots of such fields at stored times.
The default domain is the periodic unit torus.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from hypercl.errors import GridMismatch

Array = np.ndarray


def cell_centers(N: int, lower: float = 0.0, length: float = 1.0) -> Array:
    return lower + (np.arange(N) + 0.5) * (length / N)


@dataclass(frozen=True)
class SpaceTimeField:
    """Snapshots ``values[n]`` of shape ``(m, N_1, ..., N_d)`` at ``times[n]``.

    ``dU``, when given, holds exact spatial derivatives with shape
    ``(n_t, d, m, N_1, ..., N_d)`` and is preferred over differencing.
    """

    times: Array
    values: Array
    lower: tuple[float, ...] | None = None
    length: tuple[float, ...] | None = None
    periodic: bool = True
    dU: Array | None = None

    def __post_init__(self) -> None:
        times = np.atleast_1d(np.asarray(self.times, dtype=np.float64))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim < 3 or values.shape[0] != times.size:
            raise GridMismatch(
                f"values of shape {values.shape} do not match {times.size} times")
        d = values.ndim - 2
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lower", tuple(self.lower or (0.0,) * d))
        object.__setattr__(self, "length", tuple(self.length or (1.0,) * d))
        if len(self.lower) != d or len(self.length) != d:
            raise GridMismatch("lower/length must have one entry per axis")

    @property
    def d(self) -> int:
        return self.values.ndim - 2

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def N(self) -> tuple[int, ...]:
        return self.values.shape[2:]

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.N))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def coords(self, axis: int = 0) -> Array:
        return cell_centers(self.N[axis], self.lower[axis], self.length[axis])

    def mesh(self) -> list[Array]:
        return np.meshgrid(*[self.coords(i) for i in range(self.d)], indexing="ij")

    def gradient(self, n: int) -> Array:
        """Spatial derivatives of snapshot ``n``, shape ``(d, m, N...)``."""
        if self.dU is not None:
            return np.asarray(self.dU[n])
        return spatial_gradient(self.values[n], self.dx, periodic=self.periodic)

    def subset(self, indices: Sequence[int] | Array) -> SpaceTimeField:
        indices = np.asarray(indices)
        return SpaceTimeField(
            times=self.times[indices], values=self.values[indices],
            lower=self.lower, length=self.length, periodic=self.periodic,
            dU=None if self.dU is None else self.dU[indices])


def spatial_gradient(U: Array, dx: Sequence[float], *, periodic: bool = True) -> Array:
    """Second-order central differences of a field ``(m, N...)``."""
    U = np.asarray(U, dtype=np.float64)
    d = U.ndim - 1
    out = np.empty((d,) + U.shape)
    for k in range(d):
        ax = 1 + k
        if periodic:
            out[k] = (np.roll(U, -1, axis=ax) - np.roll(U, 1, axis=ax)) / (2.0 * dx[k])
        else:
            out[k] = np.gradient(U, dx[k], axis=ax, edge_order=2)
    return out


def sample_field(func: Callable[..., Array], times: Sequence[float],
                 N: int | Sequence[int], *, lower: Sequence[float] | float = 0.0,
                 length: Sequence[float] | float = 1.0, periodic: bool = True,
                 dfunc: Callable[..., Array] | None = None) -> SpaceTimeField:
    """Evaluate ``func(*x, t) -> (m, N...)`` on cell centres at each time.

    ``dfunc(*x, t)``, if given, returns exact spatial derivatives
    ``(d, m, N...)``.
    """
    N = (N,) if np.isscalar(N) else tuple(N)
    d = len(N)
    lower = (lower,) * d if np.isscalar(lower) else tuple(lower)
    length = (length,) * d if np.isscalar(length) else tuple(length)
    axes = [cell_centers(n, lo, L) for n, lo, L in zip(N, lower, length)]
    X = np.meshgrid(*axes, indexing="ij")

    values = np.stack([np.asarray(func(*X, t), dtype=np.float64) for t in times])
    if values.ndim == d + 1:
        values = values[:, None]
    dU = None
    if dfunc is not None:
        dU = np.stack([np.asarray(dfunc(*X, t), dtype=np.float64) for t in times])
        if dU.ndim == d + 2:
            dU = dU[:, :, None]
    return SpaceTimeField(times=np.asarray(times, dtype=np.float64), values=values,
                          lower=lower, length=length, periodic=periodic, dU=dU)
