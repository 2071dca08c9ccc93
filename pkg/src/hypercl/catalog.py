r"""
Concrete systems with their entropy structure.

.. autofunction:: make_isentropic_euler
.. autofunction:: make_swmhd
.. autofunction:: make_convex_elasticity_1d
.. autofunction:: make_triangular
.. autofunction:: make_multid_triangular
.. autofunction:: make_scalar
.. autofunction:: max_lambda
.. autofunction:: make_system
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hypercl.errors import (
    InvalidParams,
    LambdaTooLarge,
    NonConvexEnergy,
    NonConvexFlux,
)
from hypercl.system import GrowthMeta, SystemDef

Array = np.ndarray

LAMBDA_CAP = 1.0e6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _eye(m: int, like: Array) -> Array:
    I = np.zeros((m, m) + like.shape[1:])
    for i in range(m):
        I[i, i] = 1.0
    return I


# {{{ scalar fluxes

@dataclass(frozen=True)
class ConvexFlux:
    """A strictly convex scalar flux with its first two derivatives.

    ``sonic_point`` is the minimizer of ``f`` (needed by the Godunov flux).
    """

    name: str
    f: Callable[[Array], Array]
    fp: Callable[[Array], Array]
    fpp: Callable[[Array], Array]
    sonic_point: float = 0.0
    params: dict[str, Any] = field(default_factory=dict)


def burgers_flux() -> ConvexFlux:
    return ConvexFlux(
        name="burgers",
        f=lambda u: 0.5 * np.asarray(u) ** 2,
        fp=lambda u: np.asarray(u, dtype=np.float64) * 1.0,
        fpp=lambda u: np.ones_like(np.asarray(u, dtype=np.float64)))


def power_flux(q: float) -> ConvexFlux:
    r""":math:`f(u) = |u|^{q+1}/(q+1)`, so that :math:`f'(u) = u|u|^{q-1}`."""
    if q < 1.0:
        raise InvalidParams(f"power flux needs q >= 1, got {q}")

    def f(u):
        u = np.asarray(u, dtype=np.float64)
        return np.abs(u) ** (q + 1) / (q + 1)

    def fp(u):
        u = np.asarray(u, dtype=np.float64)
        return u * np.abs(u) ** (q - 1)

    def fpp(u):
        u = np.asarray(u, dtype=np.float64)
        return q * np.abs(u) ** (q - 1)

    return ConvexFlux(name=f"power[q={q:g}]", f=f, fp=fp, fpp=fpp,
                      params={"q": q})


def flux_from_config(cfg: dict[str, Any] | str | None) -> ConvexFlux:
    if cfg is None or cfg == "burgers":
        return burgers_flux()
    if isinstance(cfg, str):
        cfg = {"name": cfg}
    name = cfg.get("name", "burgers")
    if name == "burgers":
        return burgers_flux()
    if name == "power":
        return power_flux(float(cfg.get("q", 2.0)))
    raise InvalidParams(f"unknown flux {name!r} (expected 'burgers' or 'power')")

# }}}


# {{{ isentropic Euler

@dataclass(frozen=True)
class EulerParams:
    gamma: float = 2.0
    d: int = 1
    rho_min: float = 0.5
    rho_max: float = 2.0
    v_max: float = 1.0

    def validate(self) -> None:
        if not self.gamma > 1.0:
            raise InvalidParams(f"gamma must exceed 1, got {self.gamma}")
        if not self.rho_min > 0.0 or self.rho_max <= self.rho_min:
            raise InvalidParams("need 0 < rho_min < rho_max")
        if self.d < 1:
            raise InvalidParams("dimension must be positive")


def euler_pressure_potential(gamma: float):
    r"""Return ``(P, P', P'')`` for :math:`P(\rho)=\rho\int_1^\rho r^{\gamma-2}dr`."""

    def P(rho):
        return (rho**gamma - rho) / (gamma - 1.0)

    def dP(rho):
        return (gamma * rho ** (gamma - 1.0) - 1.0) / (gamma - 1.0)

    def d2P(rho):
        return gamma * rho ** (gamma - 2.0)

    return P, dP, d2P


def make_isentropic_euler(p: EulerParams | None = None) -> SystemDef:
    """Isentropic Euler in density/velocity variables, ``U = (rho, v)``."""
    p = p or EulerParams()
    p.validate()
    gamma, d = p.gamma, p.d
    m = 1 + d
    P, dP, d2P = euler_pressure_potential(gamma)

    def pressure(rho):
        return rho**gamma

    def dpressure(rho):
        return gamma * rho ** (gamma - 1.0)

    def A(U):
        U = np.asarray(U, dtype=np.float64)
        return np.concatenate([U[:1], U[:1] * U[1:]], axis=0)

    def A_inverse(V):
        V = np.asarray(V, dtype=np.float64)
        return np.concatenate([V[:1], V[1:] / V[:1]], axis=0)

    def F(k, U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        out = np.empty_like(U)
        out[0] = rho * v[k]
        out[1:] = rho * v * v[k]
        out[1 + k] += pressure(rho)
        return out

    def H(U):
        rho, v = U[0], U[1:]
        return 0.5 * rho * np.sum(v**2, axis=0) + P(rho)

    def G(U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        out = np.empty_like(U)
        out[0] = dP(rho) - 0.5 * np.sum(v**2, axis=0)
        out[1:] = v
        return out

    def Q(k, U):
        rho, v = U[0], U[1:]
        return (0.5 * rho * np.sum(v**2, axis=0) + rho * dP(rho)) * v[k]

    def DA(U):
        U = np.asarray(U, dtype=np.float64)
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = 1.0
        for i in range(d):
            J[1 + i, 0] = U[1 + i]
            J[1 + i, 1 + i] = U[0]
        return J

    def D2A(U):
        U = np.asarray(U, dtype=np.float64)
        T = np.zeros((m, m, m) + U.shape[1:])
        for i in range(d):
            T[1 + i, 0, 1 + i] = 1.0
            T[1 + i, 1 + i, 0] = 1.0
        return T

    def DF(k, U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = v[k]
        J[0, 1 + k] = rho
        for i in range(d):
            J[1 + i, 0] = v[i] * v[k]
            J[1 + i, 1 + i] += rho * v[k]
            J[1 + i, 1 + k] += rho * v[i]
        J[1 + k, 0] += dpressure(rho)
        return J

    def D2H(U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        M = np.zeros((m, m) + U.shape[1:])
        M[0, 0] = d2P(rho)
        for i in range(d):
            M[0, 1 + i] = M[1 + i, 0] = v[i]
            M[1 + i, 1 + i] = rho
        return M

    def DG(U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = d2P(rho)
        for i in range(d):
            J[0, 1 + i] = -v[i]
            J[1 + i, 1 + i] = 1.0
        return J

    def DQ(k, U):
        U = np.asarray(U, dtype=np.float64)
        rho, v = U[0], U[1:]
        e = 0.5 * rho * np.sum(v**2, axis=0) + rho * dP(rho)
        out = np.empty_like(U)
        out[0] = (0.5 * np.sum(v**2, axis=0) + dP(rho) + rho * d2P(rho)) * v[k]
        out[1:] = rho * v * v[k]
        out[1 + k] += e
        return out

    lo = np.array([p.rho_min] + [-p.v_max] * d)
    hi = np.array([p.rho_max] + [p.v_max] * d)
    pexp = 2.0 * gamma / (gamma + 1.0)
    return SystemDef(
        name="euler", d=d, m=m, A=A, F=F, H=H, G=G, Q=Q,
        admissible=lambda U: np.asarray(U)[0] > 0.0,
        sample_box=(lo, hi),
        growth=GrowthMeta(p=pexp, l=max(3.0, gamma), nonlinear_G=(0,),
                          q_required=2.0 * pexp / (pexp - 1.0)),
        DA=DA, DF=DF, DG=DG, D2H=D2H, D2A=D2A, DQ=DQ, A_inverse=A_inverse,
        components=("rho",) + tuple(f"v{i + 1}" for i in range(d)),
        params={"gamma": gamma, "d": d, "pressure": pressure,
                "dpressure": dpressure, "P": P, "dP": dP, "d2P": d2P})

# }}}


# {{{ shallow water MHD

@dataclass(frozen=True)
class SWMHDParams:
    g_grav: float = 9.81
    d: int = 1
    h_min: float = 0.5
    h_max: float = 2.0
    v_max: float = 1.0
    b_max: float = 1.0

    def validate(self) -> None:
        if not self.g_grav > 0.0:
            raise InvalidParams(f"gravity must be positive, got {self.g_grav}")
        if not self.h_min > 0.0 or self.h_max <= self.h_min:
            raise InvalidParams("need 0 < h_min < h_max")
        if self.d < 1:
            raise InvalidParams("dimension must be positive")


def make_swmhd(p: SWMHDParams | None = None) -> SystemDef:
    """Shallow-water MHD, ``U = (h, v, b)`` with ``v, b`` in R^d."""
    p = p or SWMHDParams()
    p.validate()
    g, d = p.g_grav, p.d
    m = 1 + 2 * d
    iv = slice(1, 1 + d)
    ib = slice(1 + d, 1 + 2 * d)

    def A(U):
        U = np.asarray(U, dtype=np.float64)
        return np.concatenate([U[:1], U[:1] * U[1:]], axis=0)

    def A_inverse(V):
        V = np.asarray(V, dtype=np.float64)
        return np.concatenate([V[:1], V[1:] / V[:1]], axis=0)

    def F(k, U):
        U = np.asarray(U, dtype=np.float64)
        h, v, b = U[0], U[iv], U[ib]
        out = np.empty_like(U)
        out[0] = h * v[k]
        out[iv] = h * (v * v[k] - b * b[k])
        out[1 + k] += 0.5 * g * h**2
        out[ib] = h * (b * v[k] - v * b[k])
        return out

    def H(U):
        h, v, b = U[0], U[iv], U[ib]
        return 0.5 * g * h**2 + 0.5 * h * (np.sum(v**2, axis=0) + np.sum(b**2, axis=0))

    def G(U):
        U = np.asarray(U, dtype=np.float64)
        h, v, b = U[0], U[iv], U[ib]
        out = np.empty_like(U)
        out[0] = g * h - 0.5 * np.sum(v**2, axis=0) - 0.5 * np.sum(b**2, axis=0)
        out[1:] = U[1:]
        return out

    def constrained_Q(k, U):
        # entropy flux of the system only along div(hb) = 0; it is not an
        # exact pair for the unconstrained equations, hence not used as ``Q``
        h, v, b = U[0], U[iv], U[ib]
        e = g * h**2 + 0.5 * h * (np.sum(v**2, axis=0) + np.sum(b**2, axis=0))
        return e * v[k] - h * np.sum(v * b, axis=0) * b[k]

    def DA(U):
        U = np.asarray(U, dtype=np.float64)
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = 1.0
        for i in range(1, m):
            J[i, 0] = U[i]
            J[i, i] = U[0]
        return J

    def D2A(U):
        U = np.asarray(U, dtype=np.float64)
        T = np.zeros((m, m, m) + U.shape[1:])
        for i in range(1, m):
            T[i, 0, i] = 1.0
            T[i, i, 0] = 1.0
        return T

    def DF(k, U):
        U = np.asarray(U, dtype=np.float64)
        h, v, b = U[0], U[iv], U[ib]
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = v[k]
        J[0, 1 + k] = h
        for i in range(d):
            rv, rb = 1 + i, 1 + d + i
            # momentum
            J[rv, 0] = v[i] * v[k] - b[i] * b[k]
            J[rv, 1 + i] += h * v[k]
            J[rv, 1 + k] += h * v[i]
            J[rv, 1 + d + i] -= h * b[k]
            J[rv, 1 + d + k] -= h * b[i]
            # induction
            J[rb, 0] = b[i] * v[k] - v[i] * b[k]
            J[rb, 1 + k] += h * b[i]
            J[rb, 1 + i] -= h * b[k]
            J[rb, 1 + d + i] += h * v[k]
            J[rb, 1 + d + k] -= h * v[i]
        J[1 + k, 0] += g * h
        return J

    def D2H(U):
        U = np.asarray(U, dtype=np.float64)
        M = np.zeros((m, m) + U.shape[1:])
        M[0, 0] = g
        for i in range(1, m):
            M[0, i] = M[i, 0] = U[i]
            M[i, i] = U[0]
        return M

    def DG(U):
        U = np.asarray(U, dtype=np.float64)
        J = np.zeros((m, m) + U.shape[1:])
        J[0, 0] = g
        for i in range(1, m):
            J[0, i] = -U[i]
            J[i, i] = 1.0
        return J

    lo = np.array([p.h_min] + [-p.v_max] * d + [-p.b_max] * d)
    hi = np.array([p.h_max] + [p.v_max] * d + [p.b_max] * d)
    return SystemDef(
        name="swmhd", d=d, m=m, A=A, F=F, H=H, G=G,
        admissible=lambda U: np.asarray(U)[0] > 0.0,
        sample_box=(lo, hi),
        growth=GrowthMeta(p=4.0 / 3.0, l=3.0, nonlinear_G=(0,), q_required=8.0),
        DA=DA, DF=DF, DG=DG, D2H=D2H, D2A=D2A, A_inverse=A_inverse,
        components=("h",) + tuple(f"v{i + 1}" for i in range(d))
        + tuple(f"b{i + 1}" for i in range(d)),
        params={"g": g, "d": d, "constrained_Q": constrained_Q})

# }}}


# {{{ convex elasticity

@dataclass(frozen=True)
class ElasticityParams:
    """Stored energy ``W`` with ``Sigma = W'`` and its derivatives.

    The default is ``W(F) = F^2/2 + F^4/4``.
    """

    W: Callable[[Array], Array] = lambda F: 0.5 * F**2 + 0.25 * F**4
    Sigma: Callable[[Array], Array] = lambda F: F + F**3
    dSigma: Callable[[Array], Array] = lambda F: 1.0 + 3.0 * F**2
    d2Sigma: Callable[[Array], Array] | None = lambda F: 6.0 * F
    F_range: tuple[float, float] = (-1.0, 1.0)
    v_max: float = 1.0


def linear_elasticity_params(**kwargs) -> ElasticityParams:
    return ElasticityParams(
        W=lambda F: 0.5 * F**2,
        Sigma=lambda F: 1.0 * F,
        dSigma=lambda F: np.ones_like(np.asarray(F, dtype=np.float64)),
        d2Sigma=lambda F: np.zeros_like(np.asarray(F, dtype=np.float64)),
        **kwargs)


def make_convex_elasticity_1d(p: ElasticityParams | None = None) -> SystemDef:
    r"""One-dimensional elasticity :math:`v_t = \Sigma(F)_x`, :math:`F_t = v_x`
    written as :math:`U_t + f(U)_x = 0` with :math:`f = -(\Sigma(F), v)`."""
    p = p or ElasticityParams()
    Fgrid = np.linspace(*p.F_range, 1025)
    if np.any(np.asarray(p.dSigma(Fgrid)) <= 0.0):
        raise NonConvexEnergy("W'' <= 0 detected on the sample box")

    def F(k, U):
        U = np.asarray(U, dtype=np.float64)
        return np.stack([-np.asarray(p.Sigma(U[1])), -U[0]])

    def H(U):
        return 0.5 * U[0] ** 2 + p.W(U[1])

    def G(U):
        U = np.asarray(U, dtype=np.float64)
        return np.stack([U[0], np.asarray(p.Sigma(U[1]), dtype=np.float64)])

    def Q(k, U):
        return -U[0] * p.Sigma(U[1])

    def DF(k, U):
        U = np.asarray(U, dtype=np.float64)
        J = np.zeros((2, 2) + U.shape[1:])
        J[0, 1] = -np.asarray(p.dSigma(U[1]))
        J[1, 0] = -1.0
        return J

    def D2H(U):
        U = np.asarray(U, dtype=np.float64)
        M = np.zeros((2, 2) + U.shape[1:])
        M[0, 0] = 1.0
        M[1, 1] = p.dSigma(U[1])
        return M

    def DQ(k, U):
        U = np.asarray(U, dtype=np.float64)
        return np.stack([-np.asarray(p.Sigma(U[1]), dtype=np.float64),
                         -U[0] * p.dSigma(U[1])])

    lo = np.array([-p.v_max, p.F_range[0]])
    hi = np.array([p.v_max, p.F_range[1]])
    return SystemDef(
        name="elastic1d", d=1, m=2, A=lambda U: np.array(U, dtype=np.float64),
        F=F, H=H, G=G, Q=Q, sample_box=(lo, hi),
        growth=GrowthMeta(p=2.0, nonlinear_G=(1,), q_required=4.0),
        DA=lambda U: _eye(2, np.asarray(U)), DF=DF, DG=D2H, D2H=D2H,
        D2A=lambda U: np.zeros((2, 2, 2) + np.shape(U)[1:]), DQ=DQ,
        A_inverse=lambda V: np.array(V, dtype=np.float64), A_is_identity=True,
        components=("v", "F"), params={"elasticity": p})

# }}}


# {{{ triangular systems

def max_lambda(q: float, m: int, M1: float, *, cap: float = LAMBDA_CAP) -> float:
    r"""Largest coupling with :math:`\mathcal{K}'' \le 0` on :math:`[-M_1, M_1]`."""
    if not (1.0 <= q < 2.0):
        raise InvalidParams(f"q must lie in [1, 2), got {q}")
    if int(m) != m or m < 1:
        raise InvalidParams(f"m must be a positive integer, got {m}")
    if not M1 > 0.0:
        raise InvalidParams(f"M1 must be positive, got {M1}")

    a = 2.0 * m * q
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        value = np.float64(a - 1.0) / ((a + q + 1.0) * np.float64(M1) ** a)
    if not np.isfinite(value):
        return cap
    return float(min(value, cap))


@dataclass(frozen=True)
class QuadraticK:
    """The default convex function ``k(s) = |s|^2`` of the entropy family."""

    def K(self, s):
        return np.sum(np.asarray(s) ** 2, axis=0)

    def DK(self, s):
        return 2.0 * np.asarray(s, dtype=np.float64)

    def D2K(self, s):
        s = np.asarray(s, dtype=np.float64)
        return 2.0 * _eye(s.shape[0], s)


@dataclass(frozen=True)
class TriangularParams:
    r"""Parameters of the chromatography-type triangular system with
    :math:`f(u) = |u|^{q+1}/(q+1)`, :math:`g = -\lambda (f')^{2m+1}` and
    entropy :math:`\eta = u^2 + e^{-\phi(u)} k(v e^{\phi(u)})`."""

    q: float = 1.0
    m_exp: int = 1
    lam: float = 0.25
    M1: float = 1.0
    v_max: float = 1.0
    k: Any = field(default_factory=QuadraticK)

    def validate(self) -> None:
        threshold = max_lambda(self.q, self.m_exp, self.M1)
        if not self.lam > 0.0:
            raise InvalidParams(f"lambda must be positive, got {self.lam}")
        if self.lam > threshold:
            raise LambdaTooLarge(self.lam, threshold)

    @property
    def flux(self) -> ConvexFlux:
        return power_flux(self.q) if self.q != 1.0 else burgers_flux()

    def f(self, u):
        return self.flux.f(u)

    def fp(self, u):
        return self.flux.fp(u)

    def fpp(self, u):
        return self.flux.fpp(u)

    # g = h o f'
    def h(self, s):
        return -self.lam * np.asarray(s, dtype=np.float64) ** (2 * self.m_exp + 1)

    def dh(self, s):
        return -self.lam * (2 * self.m_exp + 1) \
            * np.asarray(s, dtype=np.float64) ** (2 * self.m_exp)

    def g(self, u):
        return self.h(self.fp(u))

    def dg(self, u):
        u = np.abs(np.asarray(u, dtype=np.float64))
        a = 2 * self.m_exp * self.q
        return -self.lam * (2 * self.m_exp + 1) * self.q * u ** (a + self.q - 1.0)

    def phi(self, u):
        a = 2 * self.m_exp * self.q
        u = np.abs(np.asarray(u, dtype=np.float64))
        return (2 * self.m_exp + 1) / (2 * self.m_exp) * np.log1p(self.lam * u**a)

    def dphi(self, u):
        a = 2 * self.m_exp * self.q
        u = np.asarray(u, dtype=np.float64)
        s = np.abs(u)
        return self.lam * (2 * self.m_exp + 1) * self.q * np.sign(u) * s ** (a - 1.0) \
            / (1.0 + self.lam * s**a)

    def d2phi(self, u):
        a = 2 * self.m_exp * self.q
        s = np.abs(np.asarray(u, dtype=np.float64))
        return self.lam * (2 * self.m_exp + 1) * self.q * s ** (a - 2.0) \
            * ((a - 1.0) - self.lam * s**a) / (1.0 + self.lam * s**a) ** 2

    def kappa(self, u):
        return np.exp(-self.phi(u))

    def d2kappa(self, u):
        r"""Closed form of :math:`\mathcal{K}''`, nonpositive iff convex entropy."""
        a = 2 * self.m_exp * self.q
        s = np.abs(np.asarray(u, dtype=np.float64))
        mm, lam, q = self.m_exp, self.lam, self.q
        return -lam * (2 * mm + 1) * q * s ** (a - 2.0) \
            * ((a - 1.0) - lam * (a + q + 1.0) * s**a) \
            / (1.0 + lam * s**a) ** ((6 * mm + 1) / (2 * mm))

    def P(self, u):
        r""":math:`\int_0^u \psi'(s) f'(s)\,ds` for :math:`\psi(u) = u^2`."""
        u = np.asarray(u, dtype=np.float64)
        return 2.0 * u * np.abs(u) ** (self.q + 1.0) / (self.q + 2.0)


def make_multid_triangular(d: int = 1, m_comp: int = 1,
                           base: TriangularParams | None = None) -> SystemDef:
    r"""Multi-dimensional triangular system

    .. math::

        u_t + \sum_i f(u)_{x_i} = 0, \qquad
        (v_k)_t + \sum_i (g(u) v_k)_{x_i} = 0,

    with state ``(u, v_1, ..., v_{m_comp})``.
    """
    base = base or TriangularParams()
    base.validate()
    if d < 1 or m_comp < 1:
        raise InvalidParams("d and m_comp must be positive")
    m = 1 + m_comp
    kf = base.k

    def split(U):
        U = np.asarray(U, dtype=np.float64)
        return U[0], U[1:]

    def flux(k, U):
        u, v = split(U)
        out = np.empty((m,) + u.shape)
        out[0] = base.f(u)
        out[1:] = base.g(u) * v
        return out

    def H(U):
        u, v = split(U)
        ephi = np.exp(base.phi(u))
        return u**2 + kf.K(v * ephi) / ephi

    def G(U):
        u, v = split(U)
        ephi = np.exp(base.phi(u))
        w = v * ephi
        dK = kf.DK(w)
        out = np.empty((m,) + u.shape)
        out[0] = 2.0 * u + base.dphi(u) * (np.sum(dK * v, axis=0) - kf.K(w) / ephi)
        out[1:] = dK
        return out

    def Q(k, U):
        u, v = split(U)
        ephi = np.exp(base.phi(u))
        return base.P(u) + base.g(u) * kf.K(v * ephi) / ephi

    def DF(k, U):
        u, v = split(U)
        J = np.zeros((m, m) + u.shape)
        J[0, 0] = base.fp(u)
        gu = base.g(u)
        dg = base.dg(u)
        for j in range(m_comp):
            J[1 + j, 0] = dg * v[j]
            J[1 + j, 1 + j] = gu
        return J

    def D2H(U):
        u, v = split(U)
        phi, dphi, d2phi = base.phi(u), base.dphi(u), base.d2phi(u)
        ephi = np.exp(phi)
        w = v * ephi
        K, dK, d2K = kf.K(w), kf.DK(w), kf.D2K(w)
        d2Kv = np.einsum("ij...,j...->i...", d2K, v)
        M = np.empty((m, m) + u.shape)
        M[0, 0] = (2.0 + (dphi**2 - d2phi) * K / ephi
                   + (d2phi - dphi**2) * np.sum(dK * v, axis=0)
                   + ephi * dphi**2 * np.sum(v * d2Kv, axis=0))
        M[0, 1:] = ephi * dphi * d2Kv
        M[1:, 0] = M[0, 1:]
        M[1:, 1:] = ephi * d2K
        return M

    lo = np.array([-base.M1] + [-base.v_max] * m_comp)
    hi = np.array([base.M1] + [base.v_max] * m_comp)
    name = "triangular" if (d == 1 and m_comp == 1) else "triangular-md"
    return SystemDef(
        name=name, d=d, m=m, A=lambda U: np.array(U, dtype=np.float64),
        F=flux, H=H, G=G, Q=Q, sample_box=(lo, hi),
        growth=GrowthMeta(nonlinear_G=tuple(range(m))),
        DA=lambda U: _eye(m, np.asarray(U)), DF=DF, DG=D2H, D2H=D2H,
        D2A=lambda U: np.zeros((m, m, m) + np.shape(U)[1:]),
        A_inverse=lambda V: np.array(V, dtype=np.float64), A_is_identity=True,
        components=("u",) + tuple(f"v{j + 1}" for j in range(m_comp)),
        params={"triangular": base, "m_comp": m_comp})


def make_triangular(p: TriangularParams | None = None) -> SystemDef:
    """The one-dimensional triangular system, state ``(u, v)``."""
    return make_multid_triangular(1, 1, p)

# }}}


# {{{ scalar laws

def make_scalar(flux: ConvexFlux | None = None, *,
                box: tuple[float, float] = (-1.0, 1.0)) -> SystemDef:
    r"""Scalar law :math:`u_t + f(u)_x = 0` with entropy :math:`u^2`.

    The entropy flux is the quadrature :math:`\int_0^u 2s f'(s)\,ds`.
    """
    flux = flux or burgers_flux()
    ugrid = np.linspace(box[0], box[1], 2049)
    if np.any(np.asarray(flux.fpp(ugrid)) < 0.0) \
            or np.any(np.diff(np.asarray(flux.fp(ugrid))) <= 0.0):
        raise NonConvexFlux(f"flux '{flux.name}' is not strictly convex on {box}")

    n_panels = 8
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    s = (edges[:-1, None] + 0.5 * (edges[1:] - edges[:-1])[:, None]
         * (_GL_NODES[None, :] + 1.0)).ravel()
    w = (0.5 * (edges[1:] - edges[:-1])[:, None] * _GL_WEIGHTS[None, :]).ravel()

    def Q(k, U):
        u = np.asarray(U, dtype=np.float64)[0]
        sig = u[..., None] * s
        return u * np.sum(w * 2.0 * sig * flux.fp(sig), axis=-1)

    def DF(k, U):
        U = np.asarray(U, dtype=np.float64)
        return np.asarray(flux.fp(U[0]))[None, None] * np.ones((1, 1) + U.shape[1:])

    def D2H(U):
        U = np.asarray(U, dtype=np.float64)
        return 2.0 * np.ones((1, 1) + U.shape[1:])

    return SystemDef(
        name="scalar", d=1, m=1, A=lambda U: np.array(U, dtype=np.float64),
        F=lambda k, U: np.asarray(flux.f(np.asarray(U, dtype=np.float64))),
        H=lambda U: np.asarray(U)[0] ** 2,
        G=lambda U: 2.0 * np.asarray(U, dtype=np.float64),
        Q=Q, sample_box=(np.array([box[0]]), np.array([box[1]])),
        growth=GrowthMeta(p=2.0, nonlinear_G=()),
        DA=lambda U: np.ones((1, 1) + np.shape(U)[1:]), DF=DF, DG=D2H, D2H=D2H,
        D2A=lambda U: np.zeros((1, 1, 1) + np.shape(U)[1:]),
        A_inverse=lambda V: np.array(V, dtype=np.float64), A_is_identity=True,
        components=("u",), params={"flux": flux})

# }}}


# {{{ registry

SYSTEM_NAMES = ("euler", "swmhd", "elastic1d", "triangular", "scalar",
                "triangular-md")


def list_systems() -> tuple[str, ...]:
    return SYSTEM_NAMES


def _pick(params: dict[str, Any], keys: dict[str, str]) -> dict[str, Any]:
    unknown = set(params) - set(keys)
    if unknown:
        raise InvalidParams(f"unknown parameters: {sorted(unknown)}")
    return {keys[k]: v for k, v in params.items()}


def make_system(name: str, params: dict[str, Any] | None = None) -> SystemDef:
    """Build a catalog system from its name and a JSON-style parameter dict."""
    params = dict(params or {})
    if name == "euler":
        kw = _pick(params, {"gamma": "gamma", "d": "d", "rho_min": "rho_min",
                            "rho_max": "rho_max", "v_max": "v_max"})
        return make_isentropic_euler(EulerParams(**kw))
    if name == "swmhd":
        kw = _pick(params, {"g": "g_grav", "g_grav": "g_grav", "d": "d",
                            "h_min": "h_min", "h_max": "h_max",
                            "v_max": "v_max", "b_max": "b_max"})
        return make_swmhd(SWMHDParams(**kw))
    if name == "elastic1d":
        kw = _pick(params, {"F_min": "F_min", "F_max": "F_max", "v_max": "v_max",
                            "linear": "linear"})
        F_range = (kw.pop("F_min", -1.0), kw.pop("F_max", 1.0))
        if kw.pop("linear", False):
            return make_convex_elasticity_1d(
                linear_elasticity_params(F_range=F_range, **kw))
        return make_convex_elasticity_1d(ElasticityParams(F_range=F_range, **kw))
    if name in ("triangular", "triangular-md"):
        keys = {"q": "q", "m": "m_exp", "m_exp": "m_exp", "lam": "lam",
                "lambda": "lam", "M1": "M1", "v_max": "v_max"}
        if name == "triangular-md":
            keys.update({"d": "d", "m_comp": "m_comp"})
        kw = _pick(params, keys)
        d = int(kw.pop("d", 2))
        m_comp = int(kw.pop("m_comp", 1))
        if "lam" not in kw:
            kw["lam"] = 0.99 * max_lambda(kw.get("q", 1.0), kw.get("m_exp", 1),
                                          kw.get("M1", 1.0))
        base = TriangularParams(**kw)
        if name == "triangular":
            return make_triangular(base)
        return make_multid_triangular(d, m_comp, base)
    if name == "scalar":
        kw = _pick(params, {"flux": "flux", "q": "q", "u_min": "u_min",
                            "u_max": "u_max"})
        flux_cfg = kw.get("flux", "burgers")
        if "q" in kw:
            flux_cfg = {"name": "power", "q": kw["q"]}
        return make_scalar(flux_from_config(flux_cfg),
                           box=(kw.get("u_min", -1.0), kw.get("u_max", 1.0)))
    raise InvalidParams(f"unknown system {name!r}; known: {', '.join(SYSTEM_NAMES)}")

# }}}
