r"""
One-sided conditions for a candidate strong solution :math:`\bar U`:

.. math::

    \sum_k \partial_k G(\bar U)\cdot F_k(\xi|\bar\xi) + b(t)\,H(\xi|\bar\xi) \ge 0

for all pairs :math:`(\xi, \bar\xi)` in a compact box. The pointwise form
uses (exact or finite-difference) derivatives of :math:`G(\bar U)`; the
distributional form replaces them by derivatives of the mollified field
:math:`G(\bar U) * \zeta_\varepsilon` over a ladder of scales.

.. autoclass:: OscBound
.. autoclass:: OscReport
.. autofunction:: osc_margin_pointwise
.. autofunction:: osc_distributional
.. autofunction:: fit_osc_bound
.. autofunction:: euler_velocity_onesided
.. autofunction:: scalar_onesided
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hypercl.errors import EpsilonBelowGrid, EpsilonExceedsDomain, FieldLeavesSampleBox
from hypercl.fields import SpaceTimeField, spatial_gradient
from hypercl.relent import relative_entropy, relative_flux
from hypercl.report import Report
from hypercl.system import SystemDef, fd_jacobian

Array = np.ndarray

MARGIN_RTOL = 1.0e-8
H_FLOOR = 1.0e-14
_CHUNK = 4096


# {{{ bounds

@dataclass(frozen=True)
class OscBound:
    """Piecewise-constant :math:`b(t)`: ``values[i]`` on
    ``[breakpoints[i], breakpoints[i+1])``, extended as constants beyond."""

    breakpoints: Array
    values: Array
    provenance: str = "user-supplied"

    def __post_init__(self) -> None:
        bp = np.atleast_1d(np.asarray(self.breakpoints, dtype=np.float64))
        vals = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if bp.size != vals.size + 1 or np.any(np.diff(bp) <= 0.0):
            raise ValueError("need increasing breakpoints, one more than values")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, b: float, *, provenance: str = "user-supplied") -> OscBound:
        return cls(np.array([0.0, 1.0]), np.array([float(b)]), provenance)

    @classmethod
    def from_slices(cls, times: Array, values: Array, *,
                    provenance: str = "fitted") -> OscBound:
        """Bound valid between snapshots: each interval takes the larger
        of its two endpoint values."""
        times = np.asarray(times, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if times.size == 1:
            return cls.constant(float(values[0]), provenance=provenance)
        vals = np.maximum(values[:-1], values[1:])
        return cls(times, vals, provenance)

    def __call__(self, t):
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        return self.values[np.clip(idx, 0, self.values.size - 1)]

    def integral(self, t0: float, t1: float) -> float:
        r""":math:`\int_{t_0}^{t_1} b(t)\,dt`."""
        lo = self.breakpoints.copy()
        lo[0] = -np.inf
        hi = np.append(self.breakpoints[1:-1], np.inf)
        overlap = np.clip(np.minimum(t1, hi) - np.maximum(t0, lo[:-1]), 0.0, None)
        return float(np.sum(overlap * self.values))

    def cumulative(self, times: Array) -> Array:
        t0 = float(np.asarray(times)[0])
        return np.array([self.integral(t0, float(t)) for t in np.asarray(times)])


@dataclass
class OscReport:
    worst_margin: float
    worst_location: tuple[tuple[float, ...], float]
    worst_pair: tuple[Array, Array]
    passed: bool
    tolerance: float
    fitted_b: Array = field(default_factory=lambda: np.zeros(0))
    rows: list[dict[str, Any]] = field(default_factory=list)

    def to_report(self, name: str) -> Report:
        x, t = self.worst_location
        return Report(
            name=name, passed=self.passed,
            metrics={"worst_margin": self.worst_margin, "tolerance": self.tolerance,
                     "worst_x": list(x), "worst_t": t,
                     "worst_xi": self.worst_pair[0], "worst_xibar": self.worst_pair[1],
                     "max_fitted_b": float(np.max(self.fitted_b, initial=0.0))},
            rows=self.rows,
            failures=[] if self.passed else [
                f"one-sided margin {self.worst_margin:.3e} below -{self.tolerance:.1e}"])

# }}}


# {{{ margin kernels

def _DG(sys: SystemDef, U: Array) -> Array:
    if sys.DG is not None:
        return np.asarray(sys.DG(U))
    return fd_jacobian(sys.G, U)


def _check_box(sys: SystemDef, U: Array, t: float) -> None:
    inside = sys.in_sample_box(U)
    if not np.all(inside):
        j = int(np.argmin(inside))
        raise FieldLeavesSampleBox(
            f"state {U[:, j]} at t={t:g} leaves the sample box of '{sys.name}'")


@dataclass
class _PairSet:
    xi: Array
    xibar: Array
    H: Array
    Frel: Array  # (d, m, n)


def _random_pairs(sys: SystemDef, n_pairs: int, seed) -> _PairSet:
    rng = np.random.default_rng(seed)
    xi = sys.sample(n_pairs, rng)
    xibar = sys.sample(n_pairs, rng)
    H = relative_entropy(sys, xi, xibar)
    keep = H > H_FLOOR
    xi, xibar, H = xi[:, keep], xibar[:, keep], H[keep]
    Frel = np.stack([relative_flux(sys, k, xi, xibar) for k in range(sys.d)])
    return _PairSet(xi, xibar, H, Frel)


def _structured_steps(sys: SystemDef) -> list[tuple[int, float]]:
    lo, hi = sys.sample_box
    steps = []
    for i in range(sys.m):
        w = float(hi[i] - lo[i])
        for frac in (0.05, 0.25, 0.6):
            steps += [(i, frac * w), (i, -frac * w)]
    return steps


@dataclass
class _SliceResult:
    worst: float
    index: int
    pair: tuple[Array, Array]
    fitted_b: float
    H_scale: float


def _slice_margins(sys: SystemDef, U: Array, dG: Array, bt: float,
                   pairs: _PairSet) -> _SliceResult:
    """Worst margin over grid points of one slice. ``U`` is ``(m, P)``,
    ``dG`` is ``(d, m, P)``."""
    P = U.shape[1]
    worst, index, pair = np.inf, 0, (U[:, 0], U[:, 0])
    fitted = 0.0
    H_scale = float(np.max(pairs.H, initial=0.0))

    # random pairs, in chunks of grid points
    if pairs.H.size:
        for start in range(0, P, _CHUNK):
            sl = slice(start, min(P, start + _CHUNK))
            term = np.einsum("kmp,kmn->pn", dG[:, :, sl], pairs.Frel)
            margin = term + bt * pairs.H[None, :]
            p, n = np.unravel_index(np.argmin(margin), margin.shape)
            if margin[p, n] < worst:
                worst = float(margin[p, n])
                index = start + int(p)
                pair = (pairs.xi[:, n], pairs.xibar[:, n])
            fitted = max(fitted, float(np.max(np.maximum(-term, 0.0) / pairs.H[None, :])))

    # structured pairs xibar = U(x), xi = U(x) + s e_i, clipped to the box
    lo, hi = sys.sample_box
    for i, s in _structured_steps(sys):
        xi = U.copy()
        xi[i] = np.clip(xi[i] + s, lo[i], hi[i])
        H = relative_entropy(sys, xi, U)
        ok = H > H_FLOOR
        if not np.any(ok):
            continue
        Frel = np.stack([relative_flux(sys, k, xi[:, ok], U[:, ok])
                         for k in range(sys.d)])
        term = np.einsum("kmp,kmp->p", dG[:, :, ok], Frel)
        margin = term + bt * H[ok]
        j = int(np.argmin(margin))
        pts = np.flatnonzero(ok)
        if margin[j] < worst:
            worst = float(margin[j])
            index = int(pts[j])
            pair = (xi[:, pts[j]], U[:, pts[j]])
        fitted = max(fitted, float(np.max(np.maximum(-term, 0.0) / H[ok])))
        H_scale = max(H_scale, float(np.max(H)))

    return _SliceResult(worst, index, pair, fitted, H_scale)


def _point_coords(fld: SpaceTimeField, flat_index: int) -> tuple[float, ...]:
    idx = np.unravel_index(flat_index, fld.N)
    return tuple(float(fld.coords(a)[i]) for a, i in enumerate(idx))


def _run_margins(sys: SystemDef, fld: SpaceTimeField, dG_of_slice,
                 b: OscBound | None, n_pairs: int, seed) -> OscReport:
    pairs = _random_pairs(sys, n_pairs, seed)
    worst = np.inf
    loc: tuple[tuple[float, ...], float] = ((), 0.0)
    wpair = (np.zeros(sys.m), np.zeros(sys.m))
    H_scale = 1.0
    fitted = np.zeros(fld.times.size)
    rows = []
    for n, t in enumerate(fld.times):
        U = fld.values[n].reshape(sys.m, -1)
        _check_box(sys, U, t)
        dG = dG_of_slice(n, U)
        bt = 0.0 if b is None else float(b(t))
        res = _slice_margins(sys, U, dG, bt, pairs)
        fitted[n] = res.fitted_b
        H_scale = max(H_scale, res.H_scale)
        x = _point_coords(fld, res.index)
        rows.append({"t": float(t), "worst_margin": res.worst,
                     **{f"x{a}": x[a] for a in range(len(x))},
                     "fitted_b": res.fitted_b})
        if res.worst < worst:
            worst, loc, wpair = res.worst, (x, float(t)), res.pair

    tol = MARGIN_RTOL * H_scale
    return OscReport(worst_margin=float(worst), worst_location=loc, worst_pair=wpair,
                     passed=bool(worst >= -tol), tolerance=tol,
                     fitted_b=fitted, rows=rows)

# }}}


def osc_margin_pointwise(sys: SystemDef, fld: SpaceTimeField, b: OscBound | None,
                         n_pairs: int = 1000, *, seed: int | None = 0) -> OscReport:
    """Pointwise one-sided margin over the grid, snapshot times and pairs.

    Derivatives of ``G(U)`` come from the chain rule ``DG(U) dU`` with the
    field's exact ``dU`` when present, central differences otherwise.
    """

    def dG_of_slice(n, U):
        dU = fld.gradient(n).reshape(fld.d, sys.m, -1)
        return np.einsum("ijp,kjp->kip", _DG(sys, U), dU)

    return _run_margins(sys, fld, dG_of_slice, b, n_pairs, seed)


def fit_osc_bound(sys: SystemDef, fld: SpaceTimeField, n_pairs: int = 1000, *,
                  seed: int | None = 0, safety: float = 1.0) -> OscBound:
    r"""Smallest per-slice :math:`b` making every sampled margin nonnegative,
    i.e. :math:`\max (-\partial_k G\cdot F_k(\xi|\bar\xi))_+ / H(\xi|\bar\xi)`,
    turned into a piecewise-constant bound."""
    rep = osc_margin_pointwise(sys, fld, None, n_pairs, seed=seed)
    return OscBound.from_slices(fld.times, safety * rep.fitted_b, provenance="fitted")


def lipschitz_osc_bound(sys: SystemDef, fld: SpaceTimeField, C: float) -> OscBound:
    r""":math:`b(t) = C \max_x \sum_k |\partial_k G(\bar U)|` with ``C`` a
    relative-flux constant (e.g. from the quadratic-bounds audit)."""
    lip = np.empty(fld.times.size)
    for n in range(fld.times.size):
        U = fld.values[n].reshape(sys.m, -1)
        dU = fld.gradient(n).reshape(fld.d, sys.m, -1)
        dG = np.einsum("ijp,kjp->kip", _DG(sys, U), dU)
        lip[n] = float(np.max(np.sum(np.linalg.norm(dG, axis=1), axis=0)))
    return OscBound.from_slices(fld.times, C * lip, provenance="fitted")


def osc_distributional(sys: SystemDef, fld: SpaceTimeField, eps_ladder: Sequence[float],
                       b: OscBound | None, n_pairs: int = 1000, *,
                       seed: int | None = 0) -> OscReport:
    r"""One-sided margins with :math:`\partial_k (G(\bar U) * \zeta_\varepsilon)`
    for every scale in ``eps_ladder``.

    Mollification acts in space only, slice by slice. The report's rows hold
    one line per ``(eps, t)``.
    """
    from hypercl.besov import mollify

    dx = min(fld.dx)
    for eps in eps_ladder:
        if eps < 2.0 * dx:
            raise EpsilonBelowGrid(f"eps={eps:g} is below 2*dx={2 * dx:g}")
        if eps >= 0.5 * min(fld.length):
            raise EpsilonExceedsDomain(f"eps={eps:g} exceeds half the domain")

    worst_report: OscReport | None = None
    rows = []
    for eps in eps_ladder:
        def dG_of_slice(n, U, eps=eps):
            Gf = np.asarray(sys.G(fld.values[n]))
            for ax in range(fld.d):
                Gf = mollify(Gf, eps, fld.dx[ax], axis=1 + ax,
                             periodic=fld.periodic)
            return spatial_gradient(Gf, fld.dx, periodic=fld.periodic) \
                .reshape(fld.d, sys.m, -1)

        rep = _run_margins(sys, fld, dG_of_slice, b, n_pairs, seed)
        for row in rep.rows:
            rows.append({"eps": float(eps), **row})
        if worst_report is None or rep.worst_margin < worst_report.worst_margin:
            worst_report = rep

    assert worst_report is not None
    worst_report.rows = rows
    worst_report.passed = all(r["worst_margin"] >= -worst_report.tolerance
                              for r in rows)
    return worst_report


# {{{ reductions

@dataclass(frozen=True)
class VelocityOnesided:
    times: Array
    D: Array
    bound: OscBound


def euler_velocity_onesided(v: SpaceTimeField, *, gamma: float = 2.0) -> VelocityOnesided:
    r"""Per-slice :math:`D(t) = \min_x \lambda_{\min}(\mathrm{sym}\,\nabla v)`.

    For isentropic Euler the relative flux gives
    :math:`\partial_k \bar v\cdot F_k \ge D\,(\rho|w|^2 + d\,p(\rho|\bar\rho))`,
    so :math:`b = \max(2, d(\gamma-1))\max(0, -D)` is a valid bound.
    """
    d = v.d
    if v.m != d:
        raise ValueError(f"expected {d} velocity components, got {v.m}")
    D = np.empty(v.times.size)
    for n in range(v.times.size):
        if v.dU is not None:
            grad = v.dU[n]
        else:
            grad = spatial_gradient(v.values[n], v.dx, periodic=v.periodic)
        # grad[k, i] = d v_i / d x_k
        J = np.moveaxis(grad.reshape(d, d, -1), -1, 0)
        S = 0.5 * (J + np.swapaxes(J, 1, 2))
        D[n] = float(np.min(np.linalg.eigvalsh(S)))
    factor = max(2.0, d * (gamma - 1.0))
    bound = OscBound.from_slices(v.times, factor * np.maximum(0.0, -D),
                                 provenance="fitted")
    return VelocityOnesided(times=v.times, D=D, bound=bound)


def scalar_onesided(u: Array, dx: float, *, periodic: bool = True) -> float:
    """Smallest forward difference quotient of a 1-D profile."""
    u = np.asarray(u, dtype=np.float64).ravel()
    if periodic:
        diff = np.roll(u, -1) - u
    else:
        diff = np.diff(u)
    return float(np.min(diff) / dx) if diff.size else 0.0

# }}}
