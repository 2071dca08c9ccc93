r"""
Besov seminorms from grid translation differences, mollification, and
empirical rates for the mollification and commutator estimates

.. math::

    \|g_\varepsilon - g\|_{L^q} \lesssim \varepsilon^\alpha, \qquad
    \|\nabla g_\varepsilon\|_{L^q} \lesssim \varepsilon^{\alpha-1}, \qquad
    \|\nabla(\mathbb{B}(w)_\varepsilon) - \nabla \mathbb{B}(w_\varepsilon)\|_{L^{q/2}}
        \lesssim \varepsilon^{2\alpha-1}.

Fields follow the package convention ``(m, N_1, ..., N_d)``; a bare 1-D
array is read as a single component. Grids default to the unit torus.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d

from hypercl.errors import EpsilonBelowGrid, EpsilonExceedsDomain, LadderTooShort
from hypercl.fields import spatial_gradient
from hypercl.report import Report

Array = np.ndarray

NORM_FLOOR = 1.0e-14
N_DENSE_SHIFTS = 64


@dataclass(frozen=True)
class BesovIndex:
    alpha: float
    q: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.q < 1.0:
            raise ValueError(f"q must be at least 1, got {self.q}")

    @property
    def theorem_grade(self) -> bool:
        return self.alpha > 0.5


def _as_field(g: Array) -> Array:
    g = np.asarray(g, dtype=np.float64)
    return g[None] if g.ndim == 1 else g


def _grid_dx(g: Array, dx: Sequence[float] | float | None) -> tuple[float, ...]:
    N = g.shape[1:]
    if dx is None:
        return tuple(1.0 / n for n in N)
    if np.isscalar(dx):
        return (float(dx),) * len(N)
    return tuple(dx)


def lq_norm(g: Array, q: float, cell_volume: float) -> float:
    """Discrete :math:`L^q` norm of the pointwise Euclidean norm."""
    g = _as_field(g)
    pointwise = np.sqrt(np.sum(g**2, axis=0)) if g.shape[0] > 1 else np.abs(g[0])
    return float((np.sum(pointwise**q) * cell_volume) ** (1.0 / q))


def shift_ladder(N: int) -> Array:
    """Grid shifts used by :func:`besov_seminorm`: every shift up to 64,
    then four per octave up to half the domain."""
    half = N // 2
    dense = np.arange(1, min(N_DENSE_SHIFTS, half) + 1)
    if half <= N_DENSE_SHIFTS:
        return dense
    n_oct = np.log2(half / N_DENSE_SHIFTS)
    sparse = np.round(N_DENSE_SHIFTS * 2.0 ** np.arange(0.25, n_oct + 1e-12, 0.25))
    return np.unique(np.concatenate([dense, sparse.astype(int), [half]]))


def besov_seminorm(g: Array, alpha: float, q: float, *,
                   dx: Sequence[float] | float | None = None) -> float:
    r""":math:`\max_\xi \|g(\cdot+\xi) - g\|_{L^q} / |\xi|^\alpha` over
    axis-aligned periodic grid shifts."""
    g = _as_field(g)
    dx = _grid_dx(g, dx)
    vol = float(np.prod(dx))
    best = 0.0
    for ax in range(g.ndim - 1):
        for k in shift_ladder(g.shape[1 + ax]):
            diff = np.roll(g, -int(k), axis=1 + ax) - g
            best = max(best, lq_norm(diff, q, vol) / (k * dx[ax]) ** alpha)
    return best


# {{{ mollification

def bump_weights(eps: float, dx: float) -> Array:
    r"""Normalized samples of :math:`\exp(-1/(1-(x/\varepsilon)^2))` on
    ``|x| < eps``."""
    r = int(np.ceil(eps / dx))
    x = np.arange(-r, r + 1) * dx / eps
    w = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    w[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return w / np.sum(w)


def mollify(g: Array, eps: float, dx: float, *, axis: int = -1,
            periodic: bool = True) -> Array:
    """Convolve along one axis with the bump of radius ``eps``.

    Periodic axes wrap around; other axes (time, bounded intervals) are
    padded by reflection.
    """
    if eps < 2.0 * dx:
        raise EpsilonBelowGrid(f"eps={eps:g} is below 2*dx={2 * dx:g}")
    g = np.asarray(g, dtype=np.float64)
    if 2 * int(np.ceil(eps / dx)) + 1 > g.shape[axis]:
        raise EpsilonExceedsDomain(f"eps={eps:g} is wider than the grid")
    return convolve1d(g, bump_weights(eps, dx), axis=axis,
                      mode="wrap" if periodic else "reflect")


def mollify_field(g: Array, eps: float, *, dx: Sequence[float] | float | None = None,
                  periodic: bool = True) -> Array:
    """Tensor-product mollification of a field over all spatial axes."""
    g = _as_field(g)
    dx = _grid_dx(g, dx)
    for ax in range(g.ndim - 1):
        g = mollify(g, eps, dx[ax], axis=1 + ax, periodic=periodic)
    return g

# }}}


# {{{ rate audits

def fit_slope(eps: Array, norms: Array, *, trim: bool = True) -> tuple[float, float]:
    """Least-squares slope and prefactor of ``log norm`` against ``log eps``,
    dropping the smallest and largest scale when ``trim``."""
    eps = np.asarray(eps, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    order = np.argsort(eps)
    eps, norms = eps[order], norms[order]
    if trim and eps.size > 3:
        eps, norms = eps[1:-1], norms[1:-1]
    slope, icpt = np.polyfit(np.log(eps), np.log(norms), 1)
    return float(slope), float(np.exp(icpt))


def _check_ladder(eps_ladder: Sequence[float], dx: tuple[float, ...],
                  min_len: int, min_ratio: float) -> Array:
    eps = np.asarray(sorted(eps_ladder), dtype=np.float64)
    if eps.size < min_len:
        raise LadderTooShort(f"need at least {min_len} scales, got {eps.size}")
    if eps[0] < min_ratio * max(dx):
        raise EpsilonBelowGrid(
            f"smallest eps={eps[0]:g} is below {min_ratio:g}*dx={min_ratio * max(dx):g}")
    return eps


def mollification_rate_audit(g: Array, alpha: float, q: float,
                             eps_ladder: Sequence[float], *,
                             dx: Sequence[float] | float | None = None) -> Report:
    r"""Fit the decay of :math:`\|g_\varepsilon - g\|_q` and the growth of
    :math:`\|\nabla g_\varepsilon\|_q` over a ladder of at least five scales."""
    g = _as_field(g)
    dx = _grid_dx(g, dx)
    vol = float(np.prod(dx))
    eps = _check_ladder(eps_ladder, dx, 5, 4.0)

    S = besov_seminorm(g, alpha, q, dx=dx)
    rows = []
    err, grad = [], []
    for e in eps:
        ge = mollify_field(g, e, dx=dx)
        err.append(lq_norm(ge - g, q, vol))
        grad.append(lq_norm(spatial_gradient(ge, dx).reshape((-1,) + g.shape[1:]),
                            q, vol))
        rows.append({"eps": e, "norm_error": err[-1], "norm_gradient": grad[-1],
                     "est1_ratio": err[-1] / (S * e**alpha) if S > 0 else 0.0})
    err, grad = np.array(err), np.array(grad)

    metrics = {"alpha": alpha, "q": q, "seminorm": S, "n_scales": int(eps.size)}
    if np.max(err) < NORM_FLOOR and np.max(grad) < NORM_FLOOR:
        metrics.update(vacuous=True)
        return Report(name="mollification_rate", passed=True, metrics=metrics, rows=rows)

    s1, c1 = fit_slope(eps, err)
    s2, c2 = fit_slope(eps, grad)
    est1 = max(r["est1_ratio"] for r in rows)
    metrics.update(slope_error=s1, prefactor_error=c1, slope_gradient=s2,
                   prefactor_gradient=c2, max_est1_ratio=est1,
                   prefactor_error_over_seminorm=c1 / S if S > 0 else np.inf)
    failures = []
    if s1 < alpha - 0.1:
        failures.append(f"||g_eps - g|| slope {s1:.3f} < alpha - 0.1")
    if s2 < alpha - 1.0 - 0.1:
        failures.append(f"||grad g_eps|| slope {s2:.3f} < alpha - 1.1")
    for r in rows:
        r["slope_error"] = s1
        r["pass"] = not failures
    return Report(name="mollification_rate", passed=not failures, metrics=metrics,
                  rows=rows, failures=failures)


def commutator_norms(Bmap: Callable[[Array], Array], w: Array, q: float,
                     eps_ladder: Sequence[float], *,
                     dx: Sequence[float] | float | None = None) -> Array:
    r""":math:`\|\nabla(\mathbb{B}(w) * \zeta_\varepsilon) -
    \nabla\mathbb{B}(w * \zeta_\varepsilon)\|_{L^{q/2}}` per scale."""
    w = _as_field(w)
    dx = _grid_dx(w, dx)
    vol = float(np.prod(dx))
    Bw = _as_field(Bmap(w))
    out = []
    for e in eps_ladder:
        lhs = spatial_gradient(mollify_field(Bw, e, dx=dx), dx)
        rhs = spatial_gradient(_as_field(Bmap(mollify_field(w, e, dx=dx))), dx)
        diff = (lhs - rhs).reshape((-1,) + w.shape[1:])
        out.append(lq_norm(diff, q / 2.0, vol))
    return np.array(out)


def commutator_rate(Bmap: Callable[[Array], Array], w: Array, alpha: float, q: float,
                    eps_ladder: Sequence[float], *,
                    dx: Sequence[float] | float | None = None) -> Report:
    r"""Fit the decay rate of the commutator; pass iff the slope is at least
    :math:`2\alpha - 1 - 0.1`."""
    if q < 2.0:
        raise ValueError(f"the commutator estimate needs q >= 2, got {q}")
    w = _as_field(w)
    dx = _grid_dx(w, dx)
    eps = _check_ladder(eps_ladder, dx, 3, 2.0)
    norms = commutator_norms(Bmap, w, q, eps, dx=dx)

    rows = [{"eps": e, "norm": n} for e, n in zip(eps, norms)]
    metrics = {"alpha": alpha, "q": q, "target_slope": 2 * alpha - 1 - 0.1,
               "max_norm": float(np.max(norms))}
    if np.max(norms) < NORM_FLOOR:
        metrics.update(vacuous=True)
        for r in rows:
            r["pass"] = True
        return Report(name="commutator_rate", passed=True, metrics=metrics, rows=rows)

    slope, pref = fit_slope(eps, norms)
    passed = slope >= 2 * alpha - 1 - 0.1
    metrics.update(slope=slope, prefactor=pref)
    for r in rows:
        r["fitted_slope"] = slope
        r["pass"] = passed
    return Report(name="commutator_rate", passed=bool(passed), metrics=metrics,
                  rows=rows, failures=[] if passed else [
                      f"commutator slope {slope:.3f} < {2 * alpha - 1.1:.3f}"])

# }}}
