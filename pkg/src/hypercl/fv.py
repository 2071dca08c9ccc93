r"""
First-order finite volumes on the periodic unit torus.

The scheme evolves the conserved variable :math:`V = A(U)` with the local
Lax-Friedrichs (Rusanov) flux, dimension by dimension,

.. math::

    V_j^{n+1} = V_j^n - \frac{\Delta t}{\Delta x}\sum_k
        \bigl(\hat F_{k, j+1/2} - \hat F_{k, j-1/2}\bigr),

and recovers :math:`U = A^{-1}(V)` in closed form when the system provides
it, by damped Newton otherwise. For convex scalar laws the exact Godunov
flux is available as well.

.. autoclass:: GridSpec
.. autofunction:: solve
.. autofunction:: entropy_budget
.. autofunction:: weak_residual
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hypercl.catalog import ConvexFlux
from hypercl.errors import InvalidParams, NonInvertibleA, StateLeftAdmissibleSet
from hypercl.fields import SpaceTimeField, cell_centers
from hypercl.report import Report
from hypercl.system import SystemDef, fd_jacobian

logger = logging.getLogger(__name__)

Array = np.ndarray

NEWTON_TOL = 1.0e-12
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[0, 1)^d`` with ``N`` cells per axis."""

    d: int = 1
    N: int = 256
    CFL: float = 0.45
    T: float = 0.5

    def __post_init__(self) -> None:
        if self.N < 8:
            raise InvalidParams(f"need N >= 8, got {self.N}")
        if not 0.0 < self.CFL <= 0.9:
            raise InvalidParams(f"need 0 < CFL <= 0.9, got {self.CFL}")
        if not self.T > 0.0:
            raise InvalidParams("need T > 0")

    @property
    def dx(self) -> float:
        return 1.0 / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    def centers(self) -> list[Array]:
        x = cell_centers(self.N)
        return np.meshgrid(*([x] * self.d), indexing="ij")


# {{{ conserved-variable inversion

def invert_A(sys: SystemDef, V: Array, U_guess: Array) -> Array:
    """``A^{-1}(V)``: closed form, identity, or Newton with step halving
    warm-started from ``U_guess``."""
    if sys.A_is_identity:
        return V.copy()
    if sys.A_inverse is not None:
        return np.asarray(sys.A_inverse(V), dtype=np.float64)

    U = U_guess.copy()
    for _ in range(NEWTON_MAXITER):
        R = np.asarray(sys.A(U)) - V
        err = np.max(np.abs(R))
        if err <= NEWTON_TOL * max(1.0, float(np.max(np.abs(V)))):
            return U
        J = sys.DA(U) if sys.DA is not None else fd_jacobian(sys.A, U)
        step = np.moveaxis(np.linalg.solve(np.moveaxis(J, (0, 1), (-2, -1)),
                                           np.moveaxis(R, 0, -1)[..., None])[..., 0], -1, 0)
        lam = 1.0
        for _ in range(30):
            trial = U - lam * step
            if np.all(sys.is_admissible(trial)) and \
                    np.max(np.abs(np.asarray(sys.A(trial)) - V)) < err:
                break
            lam *= 0.5
        else:
            raise NonInvertibleA("Newton step halving failed to reduce the residual")
        U = trial
    raise NonInvertibleA(f"A^-1 did not converge in {NEWTON_MAXITER} iterations")

# }}}


# {{{ numerical fluxes

def wave_speeds(sys: SystemDef, U: Array) -> Array:
    r"""Per-cell bound :math:`\|DF_k\,DA^{-1}\|_\infty`, shape ``(d, N...)``."""
    if sys.DF is not None:
        DF = np.stack([np.asarray(sys.DF(k, U)) for k in range(sys.d)])
    else:
        DF = np.stack([fd_jacobian(lambda V, k=k: sys.F(k, V), U) for k in range(sys.d)])
    if not sys.A_is_identity:
        DA = sys.DA(U) if sys.DA is not None else fd_jacobian(sys.A, U)
        DAt = np.moveaxis(DA, (0, 1), (-1, -2))  # (..., m, m), transposed
        out = []
        for k in range(sys.d):
            DFt = np.moveaxis(DF[k], (0, 1), (-1, -2))
            Mt = np.linalg.solve(DAt, DFt)  # (DF DA^-1)^T
            out.append(np.max(np.sum(np.abs(Mt), axis=-2), axis=-1))
        return np.stack(out)
    return np.max(np.sum(np.abs(DF), axis=2), axis=1)


def _rusanov(sys, k, U, V, s, axis):
    """Interface fluxes at ``j + 1/2`` along ``axis``."""
    Fk = np.asarray(sys.F(k, U))
    Fr = np.roll(Fk, -1, axis=axis)
    Vr = np.roll(V, -1, axis=axis)
    a = np.maximum(s, np.roll(s, -1, axis=axis))
    return 0.5 * (Fk + Fr) - 0.5 * a * (Vr - V)


def godunov_flux(flux: ConvexFlux, uL: Array, uR: Array) -> Array:
    """Exact Riemann flux for a convex scalar law."""
    s = flux.sonic_point
    return np.maximum(flux.f(np.maximum(uL, s)), flux.f(np.minimum(uR, s)))

# }}}


def solve(sys: SystemDef, U0: Array, grid: GridSpec, *,
          times: Sequence[float] | None = None, n_snapshots: int = 16,
          flux: str = "rusanov", manifest: dict[str, Any] | None = None) -> SpaceTimeField:
    """Run the scheme from ``U0`` (shape ``(m, N...)``) to ``grid.T``.

    Snapshots are stored at ``times`` (default: ``n_snapshots`` uniform
    times in ``[0, T]``); time steps are shortened to land on them.
    ``manifest``, when given, is filled with the grid, step count and the
    wave-speed history.
    """
    if grid.d != sys.d:
        raise InvalidParams(f"grid is {grid.d}-D but the system is {sys.d}-D")
    U = np.array(U0, dtype=np.float64)
    if U.shape != (sys.m,) + grid.shape:
        raise InvalidParams(f"U0 has shape {U.shape}, expected {(sys.m,) + grid.shape}")
    if not np.all(sys.is_admissible(U)):
        raise StateLeftAdmissibleSet("initial data is not admissible")
    if flux == "godunov":
        if sys.m != 1 or "flux" not in sys.params:
            raise InvalidParams("the Godunov flux is only available for scalar laws")
        cflux = sys.params["flux"]
    elif flux != "rusanov":
        raise InvalidParams(f"unknown numerical flux {flux!r}")

    times = np.asarray(times if times is not None
                       else np.linspace(0.0, grid.T, n_snapshots), dtype=np.float64)
    if times[0] < 0.0 or np.any(np.diff(times) <= 0.0):
        raise InvalidParams("snapshot times must be nonnegative and increasing")

    dx = grid.dx
    V = np.asarray(sys.A(U), dtype=np.float64)
    snaps = []
    speeds = []
    t = 0.0
    n_steps = 0
    for t_next in times:
        while t < t_next - 1e-14 * max(1.0, t_next):
            s = wave_speeds(sys, U)
            smax = float(np.sum(np.max(s.reshape(sys.d, -1), axis=1)))
            speeds.append(smax)
            dt = grid.CFL * dx / smax if smax > 0.0 else t_next - t
            dt = min(dt, t_next - t)

            dV = np.zeros_like(V)
            for k in range(sys.d):
                ax = 1 + k
                if flux == "godunov":
                    Fh = godunov_flux(cflux, U, np.roll(U, -1, axis=ax))
                else:
                    Fh = _rusanov(sys, k, U, V, s[k][None], ax)
                dV -= (Fh - np.roll(Fh, 1, axis=ax)) / dx
            V = V + dt * dV
            U = invert_A(sys, V, U)
            if not np.all(sys.is_admissible(U)):
                raise StateLeftAdmissibleSet(f"state left the admissible set at t={t + dt:g}")
            t += dt
            n_steps += 1
        snaps.append(U.copy())

    if manifest is not None:
        manifest.update(system=sys.name, d=grid.d, N=grid.N, CFL=grid.CFL, T=grid.T,
                        flux=flux, n_steps=n_steps, times=times.tolist(),
                        max_wave_speed=max(speeds, default=0.0),
                        wave_speed_history=speeds)
    logger.debug("solve %s N=%d: %d steps", sys.name, grid.N, n_steps)
    return SpaceTimeField(times=times, values=np.stack(snaps))


# {{{ audits

def conserved_totals(sys: SystemDef, fld: SpaceTimeField) -> Array:
    r""":math:`\sum_j A(U_j)\,\Delta x` per snapshot, shape ``(n_t, m)``."""
    vol = fld.cell_volume
    return np.stack([np.asarray(sys.A(U)).reshape(sys.m, -1).sum(axis=1) * vol
                     for U in fld.values])


def entropy_budget(sys: SystemDef, fld: SpaceTimeField, *,
                   slack_factor: float = 1.0e-3) -> Report:
    r"""Series :math:`\int H(U)\,dx`; passes iff nonincreasing up to
    ``slack_factor * |initial| * dx``."""
    vol = fld.cell_volume
    series = np.array([float(np.sum(sys.H(U))) * vol for U in fld.values])
    slack = slack_factor * max(abs(series[0]), np.finfo(float).tiny) * min(fld.dx)
    incr = np.diff(series)
    worst = float(np.max(incr, initial=-np.inf))
    passed = bool(np.all(incr <= slack))
    rows = [{"t": t, "entropy": e} for t, e in zip(fld.times, series)]
    return Report(name=f"entropy_budget[{sys.name}]", passed=passed,
                  metrics={"initial": series[0], "final": series[-1],
                           "max_increase": worst, "slack": slack},
                  rows=rows, failures=[] if passed else
                  [f"entropy increased by {worst:.3e} > slack {slack:.3e}"])


@dataclass(frozen=True)
class WeakTest:
    r"""Test function :math:`\chi(t)\prod_i \mathrm{trig}(2\pi k_i x_i)`.

    ``phase`` is ``"cos"`` or ``"sin"`` (applied to :math:`2\pi k\cdot x`);
    ``window`` is ``"one"``, ``"ramp"`` (:math:`t/T`) or ``"bump"``
    (:math:`\sin^2(\pi t/T)`).
    """

    k: tuple[int, ...]
    phase: str = "cos"
    window: str = "one"

    def spatial(self, X: list[Array]) -> tuple[Array, list[Array]]:
        arg = 2.0 * np.pi * sum(ki * xi for ki, xi in zip(self.k, X))
        if self.phase == "cos":
            val, der = np.cos(arg), -np.sin(arg)
        else:
            val, der = np.sin(arg), np.cos(arg)
        return val, [2.0 * np.pi * ki * der for ki in self.k]

    def chi(self, t: Array, T: float) -> Array:
        t = np.asarray(t, dtype=np.float64)
        if self.window == "one":
            return np.ones_like(t)
        if self.window == "ramp":
            return t / T
        if self.window == "bump":
            return np.sin(np.pi * t / T) ** 2
        raise InvalidParams(f"unknown time window {self.window!r}")


def default_tests(d: int = 1, kmax: int = 2, *, planar: bool = False) -> list[WeakTest]:
    """Tensor modes with ``0 <= k_1 <= kmax``; in several dimensions either
    the full ``{-kmax..kmax}`` box for ``k_2..k_d`` or, with ``planar``,
    ``k_2 = ... = 0``."""
    import itertools

    transverse = [(0,) * (d - 1)] if planar or d == 1 else \
        list(itertools.product(range(-kmax, kmax + 1), repeat=d - 1))
    tests = []
    for k1 in range(kmax + 1):
        for kt in transverse:
            k = (k1,) + tuple(kt)
            if all(ki == 0 for ki in k):
                phases = ("cos",)
            else:
                phases = ("cos", "sin")
            for ph in phases:
                for win in ("one", "ramp", "bump"):
                    tests.append(WeakTest(k, ph, win))
    return tests


_GL_T, _GL_W = np.polynomial.legendre.leggauss(4)


def weak_residual(sys: SystemDef, fld: SpaceTimeField,
                  tests: Sequence[WeakTest] | None = None) -> float:
    r"""Largest weak-formulation defect

    .. math::

        \Bigl|\int_0^T\!\!\int A(U)\partial_t\Psi + F_k(U)\partial_k\Psi\,dx\,dt
        + \int A(U(0))\Psi(0)\,dx - \int A(U(T))\Psi(T)\,dx\Bigr|

    over the test family and the components. Snapshots are interpolated
    linearly in time and the time integrals are then exact (Gauss), so
    constant states give a residual at rounding level.
    """
    tests = list(tests) if tests is not None else default_tests(fld.d)
    X = fld.mesh()
    vol = fld.cell_volume
    times = fld.times
    T = float(times[-1])

    A_n = np.stack([np.asarray(sys.A(U)).reshape(sys.m, -1) for U in fld.values])
    F_n = [np.stack([np.asarray(sys.F(k, U)).reshape(sys.m, -1) for U in fld.values])
           for k in range(fld.d)]

    # per-interval integrals of chi and theta * chi, theta the local coordinate
    t0, t1 = times[:-1], times[1:]
    h = t1 - t0
    theta = 0.5 * (_GL_T + 1.0)
    tq = t0[:, None] + h[:, None] * theta[None, :]

    worst = 0.0
    for test in tests:
        phi, dphi = test.spatial(X)
        phi = phi.ravel()
        a_hat = A_n @ phi * vol
        f_hat = sum(F_n[k] @ dphi[k].ravel() for k in range(fld.d)) * vol

        chi = test.chi(tq, T)
        I0 = 0.5 * h * np.sum(_GL_W * chi, axis=1)
        I1 = 0.5 * h * np.sum(_GL_W * theta * chi, axis=1)

        res = -np.sum((a_hat[1:] - a_hat[:-1]) / h[:, None] * I0[:, None], axis=0)
        res += np.sum(f_hat[:-1] * (I0 - I1)[:, None] + f_hat[1:] * I1[:, None], axis=0)
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def transverse_divergence(sys: SystemDef, fld: SpaceTimeField) -> float:
    r"""Largest :math:`|\sum_{k\ge 2}\partial_k F_k(U)|` (central differences)
    over snapshots."""
    worst = 0.0
    for U in fld.values:
        div = np.zeros_like(U)
        for k in range(1, fld.d):
            Fk = np.asarray(sys.F(k, U))
            div += (np.roll(Fk, -1, axis=1 + k) - np.roll(Fk, 1, axis=1 + k)) \
                / (2.0 * fld.dx[k])
        worst = max(worst, float(np.max(np.abs(div))))
    return worst


def l1_error(fld: SpaceTimeField, exact: Array, n: int = -1) -> float:
    """Discrete :math:`L^1` distance of snapshot ``n`` to ``exact``."""
    return float(np.sum(np.abs(fld.values[n] - exact)) * fld.cell_volume)

# }}}
