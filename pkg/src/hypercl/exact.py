r"""
Exact and characteristic-based solutions.

* rarefaction fans and their periodic modification for convex scalar laws,
* the transported component of the triangular system,
* backward reconstruction from terminal data with Hölder and one-sided
  certificates,
* self-similar fans for one-dimensional convex elasticity,
* planar extension of one-dimensional solutions to several dimensions.

.. autofunction:: invert_fprime
.. autofunction:: rarefaction
.. autofunction:: periodic_profile
.. autofunction:: triangular_v
.. autofunction:: backward_reconstruct
.. autofunction:: holder_certificate
.. autofunction:: elasticity_self_similar
.. autofunction:: planar_extend
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hypercl.catalog import (
    ConvexFlux,
    ElasticityParams,
    EulerParams,
    SWMHDParams,
    TriangularParams,
    make_isentropic_euler,
    make_multid_triangular,
    make_swmhd,
)
from hypercl.errors import (
    BracketFailure,
    CharacteristicLeavesDomain,
    InvalidParams,
    NonMonotoneCharacteristicMap,
    NonStrictlyConvex,
    PlanarConditionViolated,
    ThetaNonMonotone,
)
from hypercl.fields import SpaceTimeField, cell_centers
from hypercl.osc import scalar_onesided
from hypercl.report import Report
from hypercl.system import SystemDef

Array = np.ndarray

BISECTION_TOL = 1.0e-12
MAX_BISECTION = 200


# {{{ bisection helpers

def _bisect(func: Callable[[Array], Array], target: Array, lo: Array, hi: Array,
            *, increasing: bool = True) -> Array:
    """Vectorized bisection for ``func(u) = target`` on ``[lo, hi]``."""
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        above = (func(mid) > target) if increasing else (func(mid) < target)
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= 2.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def invert_fprime(flux: ConvexFlux, y, *, bracket: tuple[float, float] | None = None):
    r"""Solve :math:`f'(u) = y` by bisection.

    Without a bracket one is grown from ``[-1, 1]`` by doubling; with an
    explicit bracket, values of ``y`` outside ``f'(bracket)`` raise
    :class:`BracketFailure`.
    """
    y = np.asarray(y, dtype=np.float64)
    if bracket is None:
        lo, hi = -1.0, 1.0
        for _ in range(64):
            if np.all(flux.fp(lo) <= y) and np.all(flux.fp(hi) >= y):
                break
            lo, hi = 2.0 * lo, 2.0 * hi
        else:
            raise BracketFailure("could not bracket f'(u) = y")
    else:
        lo, hi = bracket
    ylo, yhi = float(flux.fp(lo)), float(flux.fp(hi))
    tol = BISECTION_TOL * max(1.0, abs(ylo), abs(yhi))
    if np.any(y < ylo - tol) or np.any(y > yhi + tol):
        raise BracketFailure(f"y outside [{ylo:g}, {yhi:g}] = f'([{lo:g}, {hi:g}])")

    u = _bisect(flux.fp, np.clip(y, ylo, yhi), np.full(y.shape, lo), np.full(y.shape, hi))
    return u if u.ndim else float(u)


def sup_fpp(flux: ConvexFlux, a: float, b: float, n: int = 1025) -> float:
    return float(np.max(flux.fpp(np.linspace(a, b, n))))

# }}}


# {{{ rarefaction and periodic profile

@dataclass(frozen=True)
class RarefactionSpec:
    """Riemann data ``u_L < u_R`` at ``x0``; with ``y0 < y1`` the right state
    is brought back to ``u_L`` by a linear compressive ramp on ``[y0, y1]``."""

    flux: ConvexFlux
    u_L: float
    u_R: float
    x0: float = 0.0
    y0: float | None = None
    y1: float | None = None

    def __post_init__(self) -> None:
        for name in ("u_L", "u_R", "x0", "y0", "y1"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, float(getattr(self, name)))
        if not self.u_L < self.u_R:
            raise InvalidParams(f"need u_L < u_R, got {self.u_L} >= {self.u_R}")
        if (self.y0 is None) != (self.y1 is None):
            raise InvalidParams("give both y0 and y1 or neither")
        if self.periodic and not (self.x0 < self.y0 < self.y1):
            raise InvalidParams("need x0 < y0 < y1")

    @property
    def periodic(self) -> bool:
        return self.y0 is not None

    @property
    def ramp_slope(self) -> float:
        return (self.u_L - self.u_R) / (self.y1 - self.y0)

    @property
    def critical_time(self) -> float:
        """Time at which the ramp would steepen into a shock."""
        if not self.periodic:
            return np.inf
        return (self.y1 - self.y0) / ((self.u_R - self.u_L)
                                      * sup_fpp(self.flux, self.u_L, self.u_R))

    @property
    def T_max(self) -> float:
        """Validity horizon with a 10% margin."""
        return 0.9 * self.critical_time

    def ramp(self, z):
        return self.u_R + (np.asarray(z) - self.y0) * self.ramp_slope


def rarefaction(spec: RarefactionSpec, x, t: float):
    """Entropy solution of the Riemann problem (fan for ``u_L < u_R``)."""
    if not t > 0.0:
        raise InvalidParams("rarefaction needs t > 0")
    x = np.asarray(x, dtype=np.float64)
    f = spec.flux
    left = spec.x0 + float(f.fp(spec.u_L)) * t
    right = spec.x0 + float(f.fp(spec.u_R)) * t
    u = np.where(x <= left, spec.u_L, spec.u_R).astype(np.float64)
    fan = (x > left) & (x < right)
    if np.any(fan):
        u[fan] = invert_fprime(f, (x[fan] - spec.x0) / t, bracket=(spec.u_L, spec.u_R))
    return u if u.ndim else float(u)


def _check_theta_monotone(spec: RarefactionSpec, t: float) -> None:
    margin = 1.0 - t * (spec.u_R - spec.u_L) * sup_fpp(spec.flux, spec.u_L, spec.u_R) \
        / (spec.y1 - spec.y0)
    if not margin > 0.0:
        raise ThetaNonMonotone(
            f"t={t:g} is past the ramp's breaking time {spec.critical_time:g}")


def theta(spec: RarefactionSpec, x, t: float):
    r"""Solve :math:`x = z + t f'(\mathrm{ramp}(z))` for ``z`` and return
    :math:`\Theta = \mathrm{ramp}(z)`."""
    _check_theta_monotone(spec, t)
    x = np.asarray(x, dtype=np.float64)
    if spec.flux.name == "burgers":
        # the characteristic map is affine in z
        s = spec.ramp_slope
        z = (x - t * spec.u_R + t * s * spec.y0) / (1.0 + t * s)
    else:
        z = _bisect(lambda z: z + t * spec.flux.fp(spec.ramp(z)), x,
                    np.full(x.shape, spec.y0), np.full(x.shape, spec.y1))
    out = spec.ramp(np.clip(z, spec.y0, spec.y1))
    return out if np.ndim(out) else float(out)


def _branches(spec: RarefactionSpec, x: Array, t: float):
    fp = spec.flux.fp
    aL, aR = float(fp(spec.u_L)), float(fp(spec.u_R))
    e1 = spec.x0 + aL * t
    e2 = spec.x0 + aR * t
    e3 = spec.y0 + aR * t
    e4 = spec.y1 + aL * t
    fan = (x > e1) & (x < e2)
    ramp = (x >= e3) & (x <= e4)
    right = (x >= e2) & (x < e3)
    return fan, right, ramp


def periodic_profile(spec: RarefactionSpec, x, t: float):
    """Five-branch solution from the periodic ramp data."""
    if not spec.periodic:
        raise InvalidParams("periodic_profile needs y0 and y1")
    x = np.asarray(x, dtype=np.float64)
    if t == 0.0:
        u = np.full(x.shape, spec.u_L)
        u[(x > spec.x0) & (x < spec.y0)] = spec.u_R
        mid = (x >= spec.y0) & (x <= spec.y1)
        u[mid] = spec.ramp(x[mid])
        return u if u.ndim else float(u)
    _check_theta_monotone(spec, t)
    fan, right, ramp = _branches(spec, x, t)
    u = np.full(x.shape, spec.u_L)
    u[right] = spec.u_R
    if np.any(fan):
        u[fan] = invert_fprime(spec.flux, (x[fan] - spec.x0) / t,
                               bracket=(spec.u_L, spec.u_R))
    if np.any(ramp):
        u[ramp] = theta(spec, x[ramp], t)
    return u if u.ndim else float(u)


def periodic_profile_dx(spec: RarefactionSpec, x, t: float):
    r"""Exact :math:`\partial_x u` of :func:`periodic_profile` (one-sided
    values on the branch seams)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.shape)
    if t == 0.0:
        out[(x >= spec.y0) & (x <= spec.y1)] = spec.ramp_slope
        return out
    fan, _, ramp = _branches(spec, x, t)
    u = periodic_profile(spec, x, t)
    fpp = spec.flux.fpp
    if np.any(fan):
        out[fan] = 1.0 / (t * fpp(u[fan]))
    if np.any(ramp):
        s = spec.ramp_slope
        out[ramp] = s / (1.0 + t * fpp(u[ramp]) * s)
    return out


def lipschitz_B0(spec: RarefactionSpec, T: float, *, n_x: int = 2049,
                 n_t: int = 65) -> float:
    r"""Largest difference quotient of :math:`\Theta(\cdot, t)` over
    ``n_t`` time slices in ``[0, T]``."""
    fp = spec.flux.fp
    best = 0.0
    for t in np.linspace(0.0, T, n_t):
        a = spec.y0 + float(fp(spec.u_R)) * t
        b = spec.y1 + float(fp(spec.u_L)) * t
        x = np.linspace(a, b, n_x)
        th = theta(spec, x, t) if t > 0.0 else spec.ramp(x)
        best = max(best, float(np.max(np.abs(np.diff(th)) / np.diff(x))))
    return best

# }}}


# {{{ scalar space-time profiles

@dataclass(frozen=True)
class ScalarProfile:
    """Closed-form ``u(x, t)`` with its spatial derivative on a periodic
    interval ``[lower, lower + length)``."""

    u: Callable[[Array, float], Array]
    ux: Callable[[Array, float], Array]
    u_range: tuple[float, float]
    lower: float = 0.0
    length: float = 1.0


def periodic_profile_closure(spec: RarefactionSpec, t0: float = 0.0, *,
                             lower: float = 0.0, length: float = 1.0) -> ScalarProfile:
    """The periodic profile started at time ``t0``: ``u(x, t) = ubar(x, t0 + t)``."""

    def wrap(x):
        return lower + np.mod(np.asarray(x, dtype=np.float64) - lower, length)

    return ScalarProfile(
        u=lambda x, t: periodic_profile(spec, wrap(x), t0 + t),
        ux=lambda x, t: periodic_profile_dx(spec, wrap(x), t0 + t),
        u_range=(spec.u_L, spec.u_R), lower=lower, length=length)


def constant_profile(c: float, *, lower: float = 0.0, length: float = 1.0) -> ScalarProfile:
    return ScalarProfile(
        u=lambda x, t: np.full(np.shape(x), float(c)),
        ux=lambda x, t: np.zeros(np.shape(x)),
        u_range=(c, c), lower=lower, length=length)

# }}}


# {{{ transported component of the triangular system

@dataclass(frozen=True)
class BumpData:
    """Lipschitz data ``v_C + amp * cos^2`` bump of half-width ``width``."""

    v_C: float = 0.5
    amp: float = 0.25
    center: float = 0.5
    width: float = 0.2
    lower: float = 0.0
    length: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        r = np.mod(x - self.center + 0.5 * self.length, self.length) - 0.5 * self.length
        inside = np.abs(r) < self.width
        return self.v_C + np.where(
            inside, self.amp * np.cos(0.5 * np.pi * r / self.width) ** 2, 0.0)


def triangular_v(profile: ScalarProfile, g: Callable, dg: Callable,
                 v0: Callable[[Array], Array], x: Array, t: float, *,
                 dx: float | None = None, dt: float | None = None) -> Array:
    r"""Solve :math:`v_t + (g(u) v)_x = 0` at points ``x`` and time ``t``.

    Backward characteristics :math:`\dot X = g(u(X, s))` are integrated from
    ``t`` to ``0`` with classical RK4 together with
    :math:`\int_0^t \partial_x g(u)(X(s), s)\,ds`, giving
    :math:`v(x, t) = v_0(X(0))\exp(-\int_0^t \partial_x g(u)\,ds)`.
    The step is ``0.5 dx / max|g|`` unless ``dt`` is given.
    """
    x = np.asarray(x, dtype=np.float64)
    if t == 0.0:
        return np.asarray(v0(x), dtype=np.float64)
    if dx is None:
        dx = float(np.min(np.diff(np.sort(x)))) if x.size > 1 else profile.length / 64
    if dt is None:
        us = np.linspace(*profile.u_range, 257)
        gmax = float(np.max(np.abs(g(us))))
        dt = 0.5 * dx / gmax if gmax > 0.0 else t
    n_steps = max(1, int(np.ceil(t / dt)))
    h = -t / n_steps

    def rhs(X, s):
        u = profile.u(X, s)
        return g(u), dg(u) * profile.ux(X, s)

    X = x.copy()
    L = np.zeros_like(x)
    s = t
    for _ in range(n_steps):
        k1x, k1l = rhs(X, s)
        k2x, k2l = rhs(X + 0.5 * h * k1x, s + 0.5 * h)
        k3x, k3l = rhs(X + 0.5 * h * k2x, s + 0.5 * h)
        k4x, k4l = rhs(X + h * k3x, s + h)
        X = X + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        L = L + h / 6.0 * (k1l + 2 * k2l + 2 * k3l + k4l)
        s += h
        X = profile.lower + np.mod(X - profile.lower, profile.length)
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(L)):
        raise CharacteristicLeavesDomain("characteristic integration produced NaN")
    # L(0) = -int_0^t dx g ds
    return np.asarray(v0(X), dtype=np.float64) * np.exp(L)


@dataclass(frozen=True)
class TriangularExact:
    """Exact solution of the one-dimensional triangular system on the torus:
    ``u`` from a closed-form profile, ``v`` by characteristics."""

    params: TriangularParams
    profile: ScalarProfile
    v0: Callable[[Array], Array]

    def state(self, x: Array, t: float, *, dx: float | None = None) -> Array:
        u = self.profile.u(x, t)
        v = triangular_v(self.profile, self.params.g, self.params.dg, self.v0, x, t,
                         dx=dx)
        return np.stack([u, v])

    def sample(self, times: Sequence[float], N: int) -> SpaceTimeField:
        """Cell-centred snapshots; ``dU`` holds the exact ``u_x`` and
        central differences of ``v``."""
        p = self.profile
        x = cell_centers(N, p.lower, p.length)
        dx = p.length / N
        vals, dU = [], []
        for t in times:
            U = self.state(x, t, dx=dx)
            vx = (np.roll(U[1], -1) - np.roll(U[1], 1)) / (2.0 * dx)
            vals.append(U)
            dU.append(np.stack([p.ux(x, t), vx])[None])
        return SpaceTimeField(times=np.asarray(times, dtype=np.float64),
                              values=np.stack(vals), lower=(p.lower,),
                              length=(p.length,), dU=np.stack(dU))

# }}}


# {{{ Euler simple wave and a Burgers shock

@dataclass(frozen=True)
class EulerSimpleWave:
    r"""Periodic 1-simple wave of one-dimensional isentropic Euler with
    :math:`p = \rho^\gamma`.

    The Riemann invariant :math:`w_+ = v + 2c/(\gamma-1)` is constant and
    :math:`\lambda = v - c` is transported at its own speed from
    :math:`\lambda_0(x) = \lambda_c + a\sin(2\pi x)`, so that

    .. math::

        c = \frac{(\gamma-1)(w_+ - \lambda)}{\gamma+1}, \qquad
        v = \frac{(\gamma-1)w_+ + 2\lambda}{\gamma+1}.
    """

    gamma: float = 2.0
    w_plus: float = 3.0
    lam_c: float = -1.5
    amp: float = 0.25

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise InvalidParams(f"need gamma > 1, got {self.gamma}")
        if not self.w_plus - self.lam_c - abs(self.amp) > 0.0:
            raise InvalidParams("sound speed would vanish: need w_plus > lam_c + |amp|")

    @property
    def critical_time(self) -> float:
        return np.inf if self.amp == 0.0 else 1.0 / (2.0 * np.pi * abs(self.amp))

    @property
    def T_max(self) -> float:
        return 0.9 * self.critical_time

    def lam0(self, z):
        return self.lam_c + self.amp * np.sin(2.0 * np.pi * z)

    def dlam0(self, z):
        return 2.0 * np.pi * self.amp * np.cos(2.0 * np.pi * z)

    def _foot(self, x: Array, t: float) -> Array:
        if t >= self.critical_time:
            raise NonMonotoneCharacteristicMap(
                f"t={t:g} is past the breaking time {self.critical_time:g}")
        a = abs(self.amp)
        return _bisect(lambda z: z + t * self.lam0(z), x,
                       x - (self.lam_c + a) * t - 1e-12, x - (self.lam_c - a) * t + 1e-12)

    def state(self, x, t: float) -> tuple[Array, Array]:
        """``(U, dU)`` with ``U = (rho, v)`` and exact ``x``-derivatives."""
        x = np.asarray(x, dtype=np.float64)
        gam = self.gamma
        z = self._foot(x, t) if t > 0.0 else x
        lam = self.lam0(z)
        lam_x = self.dlam0(z) / (1.0 + t * self.dlam0(z))
        c = (gam - 1.0) * (self.w_plus - lam) / (gam + 1.0)
        v = ((gam - 1.0) * self.w_plus + 2.0 * lam) / (gam + 1.0)
        rho = (c**2 / gam) ** (1.0 / (gam - 1.0))
        c_x = -(gam - 1.0) * lam_x / (gam + 1.0)
        rho_x = rho * 2.0 / (gam - 1.0) * c_x / c
        v_x = 2.0 * lam_x / (gam + 1.0)
        return np.stack([rho, v]), np.stack([rho_x, v_x])

    def sample(self, times: Sequence[float], N: int) -> SpaceTimeField:
        x = cell_centers(N)
        pairs = [self.state(x, float(t)) for t in times]
        return SpaceTimeField(times=np.asarray(times, dtype=np.float64),
                              values=np.stack([p[0] for p in pairs]),
                              dU=np.stack([p[1][None] for p in pairs]))


@dataclass(frozen=True)
class BurgersFanShock:
    r"""Burgers solution from :math:`u_0 = 1` on ``[a, b)`` and ``0``
    elsewhere on the unit torus: a fan from ``a`` and a shock from ``b``
    moving at speed 1/2, valid until the fan head reaches the shock."""

    a: float = 0.2
    b: float = 0.5

    @property
    def T_max(self) -> float:
        return 2.0 * (self.b - self.a)

    def u(self, x, t: float) -> Array:
        x = np.mod(np.asarray(x, dtype=np.float64), 1.0)
        if t == 0.0:
            return ((x >= self.a) & (x < self.b)).astype(np.float64)
        if t >= self.T_max:
            raise InvalidParams(f"t={t:g} is past the interaction time {self.T_max:g}")
        out = np.zeros_like(x)
        fan = (x > self.a) & (x < self.a + t)
        out[fan] = (x[fan] - self.a) / t
        out[(x >= self.a + t) & (x < self.b + 0.5 * t)] = 1.0
        return out

    def sample(self, times: Sequence[float], N: int) -> SpaceTimeField:
        x = cell_centers(N)
        vals = np.stack([self.u(x, float(t))[None] for t in times])
        return SpaceTimeField(times=np.asarray(times, dtype=np.float64), values=vals)

# }}}


# {{{ backward reconstruction and certificates

@dataclass(frozen=True)
class TerminalData:
    """Terminal profile ``u_T`` sampled on an increasing grid ``x``."""

    x: Array
    u_T: Array
    T: float
    beta: float = 1.0
    M: float = 1.0

    def characteristic_feet(self, flux: ConvexFlux, t: float) -> Array:
        return np.asarray(self.x) - (self.T - t) * flux.fp(np.asarray(self.u_T))

    def is_reachable(self, flux: ConvexFlux) -> bool:
        feet = self.characteristic_feet(flux, 0.0)
        return bool(np.all(np.diff(feet) >= -1.0e-12 * max(1.0, np.max(np.abs(feet)))))


def backward_reconstruct(td: TerminalData, flux: ConvexFlux, t: float,
                         *, n_out: int | None = None) -> tuple[Array, Array]:
    r"""Entropy solution at time ``t`` from terminal data, via
    :math:`u(x - (T-t)f'(u_T(x)), t) = u_T(x)`.

    Returns ``(y, u)`` on a uniform grid spanning the image of the
    characteristic map.
    """
    if not 0.0 < t <= td.T:
        raise InvalidParams(f"need 0 < t <= T, got t={t}")
    if not td.is_reachable(flux):
        raise NonMonotoneCharacteristicMap(
            "x -> x - T f'(u_T(x)) is not nondecreasing; u_T is not reachable")
    x = np.asarray(td.x, dtype=np.float64)
    u_T = np.asarray(td.u_T, dtype=np.float64)
    if t == td.T:
        return x.copy(), u_T.copy()
    y = td.characteristic_feet(flux, t)
    if np.any(np.diff(y) <= 0.0):
        raise NonMonotoneCharacteristicMap("characteristic map is not strictly increasing")
    grid = np.linspace(y[0], y[-1], n_out or x.size)
    return grid, np.interp(grid, y, u_T)


def holder_seminorm(x: Array, w: Array, beta: float, *, max_pairs: int = 10**6,
                    seed: int = 0) -> float:
    r""":math:`\max_{i\ne j} |w_i - w_j| / |x_i - x_j|^\beta` over grid pairs,
    randomly subsampled (beyond all lags up to 64) past ``max_pairs``."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = x.size
    best = 0.0
    all_pairs = n * (n - 1) // 2 <= max_pairs
    lags = range(1, n) if all_pairs else range(1, min(n, 65))
    for k in lags:
        q = np.abs(w[k:] - w[:-k]) / np.abs(x[k:] - x[:-k]) ** beta
        best = max(best, float(np.max(q)))
    if not all_pairs:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, max_pairs)
        j = rng.integers(0, n, max_pairs)
        ok = i != j
        q = np.abs(w[i[ok]] - w[j[ok]]) / np.abs(x[i[ok]] - x[j[ok]]) ** beta
        best = max(best, float(np.max(q)))
    return best


@dataclass(frozen=True)
class HolderCertificate:
    seminorm: float
    bound: float
    passed: bool


def holder_certificate(x: Array, u: Array, flux: ConvexFlux, beta: float, M: float,
                       t: float, C0: float) -> HolderCertificate:
    r"""Check :math:`|f'(u(\cdot,t))|_{C^{0,\beta}} \le 1.05\max\{C_0,
    (2M)^{1-\beta}/t\}` on the grid."""
    semi = holder_seminorm(x, flux.fp(np.asarray(u)), beta)
    bound = max(C0, (2.0 * M) ** (1.0 - beta) / t)
    return HolderCertificate(seminorm=semi, bound=bound, passed=semi <= 1.05 * bound)


def onesided_certificate(u: Array, dx: float, *, periodic: bool = False) -> float:
    r"""Empirical :math:`B_1 = \max (u(x-\Delta x) - u(x))_+ / \Delta x`."""
    return max(0.0, -scalar_onesided(u, dx, periodic=periodic))

# }}}


# {{{ self-similar elasticity fans

@dataclass(frozen=True)
class ElasticFan:
    zeta: Array
    V: Array
    F: Array
    dF: Array
    dV: Array
    residual: float
    branch: int

    def sign_identity(self, p: ElasticityParams) -> tuple[Array, Array]:
        r"""Both sides of :math:`-\zeta^2\Sigma''(\mathcal F)V' =
        2\zeta^2\Sigma'(\mathcal F)`."""
        d2S = np.asarray(p.d2Sigma(self.F))
        lhs = -self.zeta**2 * d2S * self.dV
        rhs = 2.0 * self.zeta**2 * np.asarray(p.dSigma(self.F))
        return lhs, rhs


def _inflection(p: ElasticityParams) -> float:
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda F: float(p.dSigma(F)), bounds=p.F_range,
                          method="bounded", options={"xatol": 1e-14})
    return float(res.x)


def fan_F(p: ElasticityParams, zeta, branch: int = 1):
    r""":math:`\mathcal F(\zeta) = (\Sigma')^{-1}(\zeta^2)` on the branch
    where :math:`\Sigma''` has sign ``branch``."""
    Fgrid = np.linspace(*p.F_range, 1025)
    dS = np.asarray(p.dSigma(Fgrid), dtype=np.float64)
    if np.ptp(dS) <= 1e-12 * max(1.0, np.max(np.abs(dS))):
        raise NonStrictlyConvex("Sigma' is constant; the fan degenerates")
    Fs = _inflection(p)
    lo, hi = (Fs, p.F_range[1]) if branch > 0 else (p.F_range[0], Fs)
    zeta = np.asarray(zeta, dtype=np.float64)
    target = zeta**2
    a, b = float(p.dSigma(lo)), float(p.dSigma(hi))
    tol = 1e-12 * max(1.0, a, b)
    if np.any(target < min(a, b) - tol) or np.any(target > max(a, b) + tol):
        raise BracketFailure(
            f"zeta^2 outside Sigma'([{lo:g}, {hi:g}]) = [{min(a, b):g}, {max(a, b):g}]")
    F = _bisect(p.dSigma, np.clip(target, min(a, b), max(a, b)),
                np.full(zeta.shape, lo), np.full(zeta.shape, hi),
                increasing=branch > 0)
    return F if F.ndim else float(F)


def elasticity_self_similar(p: ElasticityParams, zeta_range: tuple[float, float], *,
                            n: int = 1001, branch: int = 1, V0: float = 0.0) -> ElasticFan:
    r"""Self-similar profiles :math:`(V, \mathcal F)(\zeta)`, :math:`\zeta = x/t`.

    :math:`\mathcal F` solves :math:`\zeta^2 = \Sigma'(\mathcal F)`;
    :math:`V = V_0 - \int \zeta\,d\mathcal F` by the trapezoid rule. The
    reported residual is that of :math:`\zeta V' + \Sigma'(\mathcal F)\mathcal F'`
    at interval midpoints.
    """
    if p.d2Sigma is None:
        raise InvalidParams("the fan construction needs Sigma''")
    zeta = np.linspace(zeta_range[0], zeta_range[1], n)
    F = fan_F(p, zeta, branch)
    d2S = np.asarray(p.d2Sigma(F), dtype=np.float64)
    if np.any(np.abs(d2S) < 1e-12):
        raise NonStrictlyConvex("Sigma'' vanishes on the fan; choose a zeta range "
                                "away from the degenerate point")
    dF = 2.0 * zeta / d2S
    dV = -zeta * dF

    incr = -0.5 * (zeta[1:] + zeta[:-1]) * np.diff(F)
    V = V0 + np.concatenate([[0.0], np.cumsum(incr)])

    zm = 0.5 * (zeta[1:] + zeta[:-1])
    Fm = fan_F(p, zm, branch)
    dz = np.diff(zeta)
    res = zm * np.diff(V) / dz + np.asarray(p.dSigma(Fm)) * np.diff(F) / dz
    return ElasticFan(zeta=zeta, V=V, F=F, dF=dF, dV=dV,
                      residual=float(np.max(np.abs(res))), branch=branch)

# }}}


# {{{ planar extension

@dataclass(frozen=True)
class PlanarSplit:
    """Partition of the state of a ``d``-dimensional system into the planar
    part ``w`` and the transverse part ``z``.

    ``A2``, ``G2`` and ``F1_A2`` act on full states and return the
    components of ``A``, ``G`` and ``F_1`` that belong to the second block.
    """

    name: str
    sys: SystemDef
    w_idx: tuple[int, ...]
    z_idx: tuple[int, ...]
    A2: Callable[[Array], Array]
    G2: Callable[[Array], Array]
    F1_A2: Callable[[Array], Array]
    extra: dict[str, Any] = field(default_factory=dict)

    def embed(self, w: Array) -> Array:
        """Full state ``(w, z = 0)`` from planar components ``w``."""
        w = np.asarray(w, dtype=np.float64)
        U = np.zeros((self.sys.m,) + w.shape[1:])
        U[list(self.w_idx)] = w
        return U


def split_from_indices(name: str, sys: SystemDef, w_idx: Sequence[int],
                       a2_idx: Sequence[int]) -> PlanarSplit:
    w_idx = tuple(w_idx)
    z_idx = tuple(i for i in range(sys.m) if i not in w_idx)
    a2 = list(a2_idx)
    return PlanarSplit(
        name=name, sys=sys, w_idx=w_idx, z_idx=z_idx,
        A2=lambda U: np.asarray(sys.A(U))[a2],
        G2=lambda U: np.asarray(sys.G(U))[a2],
        F1_A2=lambda U: np.asarray(sys.F(0, U))[a2])


def euler_split(d: int = 2, gamma: float = 2.0) -> PlanarSplit:
    sys = make_isentropic_euler(EulerParams(gamma=gamma, d=d))
    return split_from_indices("euler", sys, (0, 1), range(2, 1 + d))


def swmhd_split(d: int = 2, g: float = 9.81) -> PlanarSplit:
    sys = make_swmhd(SWMHDParams(g_grav=g, d=d))
    w_idx = (0, 1, 1 + d)
    a2 = [i for i in range(sys.m) if i not in w_idx]
    return split_from_indices("swmhd", sys, w_idx, a2)


def triangular_split(d: int = 2, m_comp: int = 1,
                     params: TriangularParams | None = None) -> PlanarSplit:
    sys = make_multid_triangular(d, m_comp, params)
    return split_from_indices("triangular", sys, range(sys.m), ())


def planar_condition_check(split: PlanarSplit, samples: Array | None = None, *,
                           n: int = 1000, seed: int | None = 0,
                           tol: float = 1.0e-12) -> Report:
    """Check ``F1_A2(w, 0) = A2(w, 0) = G2(w, 0) = 0`` on sampled ``w``."""
    if samples is None:
        samples = split.sys.sample(n, seed)[list(split.w_idx)]
    U = split.embed(samples)

    def worst(v):
        v = np.asarray(v)
        return float(np.max(np.abs(v))) if v.size else 0.0

    metrics = {"A2": worst(split.A2(U)), "G2": worst(split.G2(U)),
               "F1_A2": worst(split.F1_A2(U)), "n_samples": int(U.shape[-1])}
    failures = [f"{k} reaches {metrics[k]:.3e}" for k in ("A2", "G2", "F1_A2")
                if metrics[k] > tol]
    return Report(name=f"planar_condition[{split.name}]", passed=not failures,
                  metrics=metrics, failures=failures)


def planar_extend(split: PlanarSplit, w1d: SpaceTimeField, d: int | None = None, *,
                  N_transverse: int | None = None, check: bool = True) -> SpaceTimeField:
    """Lift a 1-D field of planar components to ``d`` dimensions, constant in
    ``x_2, ..., x_d`` and with ``z = 0``."""
    d = d or split.sys.d
    if check:
        rep = planar_condition_check(split)
        if not rep.passed:
            raise PlanarConditionViolated("; ".join(rep.failures))
    if w1d.d != 1 or w1d.m != len(split.w_idx):
        raise InvalidParams("expected a 1-D field holding the planar components")
    N = w1d.N[0]
    Nt = N_transverse or N
    nt = w1d.times.size
    full = np.zeros((nt, split.sys.m, N) + (Nt,) * (d - 1))
    expand = (Ellipsis,) + (None,) * (d - 1)
    full[:, list(split.w_idx)] = w1d.values[expand]
    return SpaceTimeField(times=w1d.times, values=full,
                          lower=w1d.lower + (0.0,) * (d - 1),
                          length=w1d.length + (1.0,) * (d - 1),
                          periodic=w1d.periodic)

# }}}
