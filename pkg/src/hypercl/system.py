r"""
Conservation-law systems in the general form

.. math::

    \partial_t A(U) + \sum_k \partial_k F_k(U) = 0,
    \qquad DH = G\,DA, \quad DQ_k = G\,DF_k,

together with the derivative, symmetrizer and entropy-flux audits.

States are stored component-first: an array of shape ``(m, ...)`` holds one
state per trailing index, so every closure below is vectorized over samples
and grid points alike.

.. autoclass:: SystemDef
.. autoclass:: DerivativeBundle
.. autofunction:: jacobians
.. autofunction:: symmetrizer
.. autofunction:: check_spd
.. autofunction:: entropy_flux_compatibility
.. autofunction:: entropy_flux_reconstruct
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import qmc

from hypercl.errors import (
    AsymmetricInput,
    DerivativeMismatch,
    MissingEntropyFlux,
    NonAdmissibleState,
    PathLeavesAdmissibleSet,
    SingularDA,
)
from hypercl.report import Report

Array = np.ndarray

FD_STEP = 1.0e-6
FD_STEP_HESSIAN = 1.0e-4
DET_TOL = 1.0e-12
SYMMETRY_TOL = 1.0e-10
FD_AGREEMENT_TOL = 1.0e-5


@dataclass(frozen=True)
class GrowthMeta:
    """Exponents of the coercivity/growth hypotheses (audit metadata only)."""

    p: float | None = None
    l: float | None = None  # noqa: E741
    L: float | None = None
    nonlinear_G: tuple[int, ...] = ()
    q_required: float | None = None


@dataclass(frozen=True)
class SystemDef:
    """An immutable conservation-law system.

    ``F``, ``Q`` take the direction ``k`` (0-based) first. The optional
    ``DA``, ``DF``, ``DG``, ``D2H``, ``D2A`` closures are analytic
    derivatives; any that are missing fall back to central differences.
    Jacobians are indexed ``J[i, j] = d(out_i)/d(U_j)``.
    """

    name: str
    d: int
    m: int
    A: Callable[[Array], Array]
    F: Callable[[int, Array], Array]
    H: Callable[[Array], Array]
    G: Callable[[Array], Array]
    sample_box: tuple[Array, Array]
    Q: Callable[[int, Array], Array] | None = None
    admissible: Callable[[Array], Array] | None = None
    growth: GrowthMeta = field(default_factory=GrowthMeta)

    DA: Callable[[Array], Array] | None = None
    DF: Callable[[int, Array], Array] | None = None
    DG: Callable[[Array], Array] | None = None
    D2H: Callable[[Array], Array] | None = None
    D2A: Callable[[Array], Array] | None = None
    DQ: Callable[[int, Array], Array] | None = None

    A_inverse: Callable[[Array], Array] | None = None
    A_is_identity: bool = False
    components: tuple[str, ...] = ()
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def has_analytic_derivatives(self) -> bool:
        return all(c is not None for c in (self.DA, self.DF, self.D2H, self.D2A))

    def is_admissible(self, U: Array) -> Array:
        U = np.asarray(U, dtype=np.float64)
        ok = np.all(np.isfinite(U), axis=0)
        if self.admissible is not None:
            ok = ok & np.asarray(self.admissible(U), dtype=bool)
        return ok

    def in_sample_box(self, U: Array, *, rtol: float = 1.0e-12) -> Array:
        lo, hi = self.sample_box
        U = np.asarray(U, dtype=np.float64)
        shape = (self.m,) + (1,) * (U.ndim - 1)
        slack = rtol * np.maximum(1.0, np.maximum(abs(lo), abs(hi)))
        return np.all(
            (U >= (lo - slack).reshape(shape)) & (U <= (hi + slack).reshape(shape)),
            axis=0)

    def sample(self, n: int, rng: np.random.Generator | int | None = None,
               *, method: str = "lhs") -> Array:
        """Draw ``n`` states from the sample box, shape ``(m, n)``."""
        lo, hi = self.sample_box
        if method == "lhs":
            seed = rng if not isinstance(rng, np.random.Generator) \
                else int(rng.integers(2**31))
            unit = qmc.LatinHypercube(d=self.m, seed=seed).random(n)
        else:
            rng = np.random.default_rng(rng)
            unit = rng.random((n, self.m))
        return (lo + unit * (hi - lo)).T.copy()


def require_admissible(sys: SystemDef, U: Array) -> None:
    U = np.asarray(U, dtype=np.float64)
    ok = np.atleast_1d(sys.is_admissible(U))
    if not np.all(ok):
        flat = U.reshape(U.shape[0], -1)
        bad = flat[:, int(np.argmin(ok.ravel()))]
        raise NonAdmissibleState(
            f"state {bad} is outside the admissible set of '{sys.name}'")


# {{{ finite differences

def _steps(U: Array, rel: float) -> Array:
    return rel * np.maximum(1.0, np.abs(U))


def fd_jacobian(func: Callable[[Array], Array], U: Array,
                rel: float = FD_STEP) -> Array:
    """Central-difference Jacobian of a vector map, shape ``(n_out, m, ...)``."""
    U = np.asarray(U, dtype=np.float64)
    h = _steps(U, rel)
    cols = []
    for j in range(U.shape[0]):
        Up = U.copy()
        Um = U.copy()
        Up[j] += h[j]
        Um[j] -= h[j]
        cols.append((np.asarray(func(Up)) - np.asarray(func(Um))) / (2.0 * h[j]))
    return np.stack(cols, axis=1)


def fd_gradient(func: Callable[[Array], Array], U: Array,
                rel: float = FD_STEP) -> Array:
    """Central-difference gradient of a scalar map, shape ``(m, ...)``."""
    return fd_jacobian(lambda V: np.asarray(func(V))[None], U, rel)[0]


def fd_hessian(func: Callable[[Array], Array], U: Array,
               rel: float = FD_STEP_HESSIAN) -> Array:
    """Central-difference Hessian of a (vector of) scalar map(s).

    For scalar ``func`` the result has shape ``(m, m, ...)``; for vector
    output of length ``n`` it is ``(n, m, m, ...)``. The four-point mixed
    stencil uses the same evaluations for ``(j, l)`` and ``(l, j)``, so the
    result is exactly symmetric.
    """
    U = np.asarray(U, dtype=np.float64)
    m = U.shape[0]
    h = _steps(U, rel)

    def shifted(j, sj, l, sl):
        V = U.copy()
        V[j] += sj * h[j]
        V[l] += sl * h[l]
        return np.asarray(func(V))

    rows = [[None] * m for _ in range(m)]
    for j in range(m):
        for l in range(j, m):
            val = (shifted(j, 1, l, 1) - shifted(j, 1, l, -1)
                   - shifted(j, -1, l, 1) + shifted(j, -1, l, -1)) \
                / (4.0 * h[j] * h[l])
            rows[j][l] = rows[l][j] = val

    out = np.stack([np.stack(r, axis=0) for r in rows], axis=0)
    if out.ndim > 2 + U.ndim - 1:
        # vector-valued: move output index to the front
        out = np.moveaxis(out, 2, 0)
    return out

# }}}


@dataclass(frozen=True)
class DerivativeBundle:
    """First and second derivatives at a state (or a batch of states).

    Shapes for a batch ``U`` of shape ``(m, ...)``: ``DA``, ``DG``, ``D2H``
    are ``(m, m, ...)``, ``DF`` is ``(d, m, m, ...)`` and ``D2A`` is
    ``(m, m, m, ...)`` with ``D2A[i]`` the Hessian of ``A_i``.
    """

    DA: Array
    DF: Array
    DG: Array
    D2H: Array
    D2A: Array
    analytic: bool


def _fd_bundle(sys: SystemDef, U: Array) -> DerivativeBundle:
    DA = fd_jacobian(sys.A, U)
    DF = np.stack([fd_jacobian(lambda V, k=k: sys.F(k, V), U)
                   for k in range(sys.d)])
    DG = fd_jacobian(sys.G, U)
    D2H = fd_hessian(sys.H, U)
    D2A = fd_hessian(sys.A, U)
    return DerivativeBundle(DA=DA, DF=DF, DG=DG, D2H=D2H, D2A=D2A, analytic=False)


def _analytic_bundle(sys: SystemDef, U: Array) -> DerivativeBundle:
    DA = sys.DA(U) if sys.DA is not None else fd_jacobian(sys.A, U)
    if sys.DF is not None:
        DF = np.stack([sys.DF(k, U) for k in range(sys.d)])
    else:
        DF = np.stack([fd_jacobian(lambda V, k=k: sys.F(k, V), U)
                       for k in range(sys.d)])
    DG = sys.DG(U) if sys.DG is not None else fd_jacobian(sys.G, U)
    D2H = sys.D2H(U) if sys.D2H is not None else fd_hessian(sys.H, U)
    D2A = sys.D2A(U) if sys.D2A is not None else fd_hessian(sys.A, U)
    return DerivativeBundle(DA=DA, DF=DF, DG=DG, D2H=D2H, D2A=D2A,
                            analytic=sys.has_analytic_derivatives)


def _relative_gap(a: Array, b: Array) -> float:
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0


def derivative_mismatch(sys: SystemDef, U: Array) -> dict[str, float]:
    """Relative analytic-vs-FD gaps for every derivative in the bundle."""
    an = _analytic_bundle(sys, U)
    fd = _fd_bundle(sys, U)
    return {name: _relative_gap(getattr(an, name), getattr(fd, name))
            for name in ("DA", "DF", "DG", "D2H", "D2A")}


def det_DA(DA: Array) -> Array:
    return np.linalg.det(np.moveaxis(DA, (0, 1), (-2, -1)))


def jacobians(sys: SystemDef, xi: Array, *, mode: str = "auto",
              verify: bool = False) -> DerivativeBundle:
    """Evaluate all derivatives at ``xi``.

    :arg mode: ``"auto"`` uses analytic closures where present, ``"fd"``
        forces central differences everywhere.
    :arg verify: compare the analytic bundle against finite differences and
        raise :class:`DerivativeMismatch` above relative ``1e-5``.
    """
    xi = np.asarray(xi, dtype=np.float64)
    require_admissible(sys, xi)

    if mode == "fd":
        bundle = _fd_bundle(sys, xi)
    elif mode in ("auto", "analytic"):
        bundle = _analytic_bundle(sys, xi)
    else:
        raise ValueError(f"unknown derivative mode: {mode!r}")

    det = det_DA(bundle.DA)
    if np.any(np.abs(det) < DET_TOL):
        raise SingularDA(f"|det DA| = {float(np.min(np.abs(det))):.3e} < {DET_TOL}")

    if verify and mode != "fd":
        gaps = derivative_mismatch(sys, xi)
        worst = max(gaps, key=gaps.get)
        if gaps[worst] > FD_AGREEMENT_TOL:
            raise DerivativeMismatch(
                f"{sys.name}: analytic {worst} differs from central differences "
                f"by relative {gaps[worst]:.3e} (tolerance {FD_AGREEMENT_TOL})")

    return bundle


def symmetrizer(sys: SystemDef, xi: Array, *, mode: str = "auto",
                return_asymmetry: bool = False):
    r"""Return :math:`D^2H - \sum_i G_i D^2A_i`, symmetrized.

    Raises :class:`AsymmetricInput` when the raw matrix is asymmetric beyond
    ``1e-10`` (relative to its size); that almost always means a wrong
    analytic derivative.
    """
    xi = np.asarray(xi, dtype=np.float64)
    b = jacobians(sys, xi, mode=mode)
    G = np.asarray(sys.G(xi))
    S = b.D2H - np.einsum("i...,ijk...->jk...", G, b.D2A)

    asym = float(np.max(np.abs(S - np.swapaxes(S, 0, 1))))
    scale = max(1.0, float(np.max(np.abs(S))))
    if asym > SYMMETRY_TOL * scale:
        raise AsymmetricInput(
            f"{sys.name}: symmetrizer asymmetry {asym:.3e} exceeds "
            f"{SYMMETRY_TOL:g}; check the analytic second derivatives")

    S = 0.5 * (S + np.swapaxes(S, 0, 1))
    if return_asymmetry:
        return S, asym
    return S


@dataclass(frozen=True)
class SPDResult:
    min_eigenvalue: float
    passed: bool


def check_spd(M: Array) -> SPDResult:
    """Smallest eigenvalue of a symmetric matrix or a stack ``(m, m, ...)``."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim < 2 or M.shape[0] != M.shape[1]:
        raise AsymmetricInput(f"expected a square matrix, got shape {M.shape}")
    if np.max(np.abs(M - np.swapaxes(M, 0, 1)), initial=0.0) > SYMMETRY_TOL:
        raise AsymmetricInput("matrix is not symmetric within 1e-10")

    stack = np.moveaxis(M, (0, 1), (-2, -1))
    lam = float(np.min(np.linalg.eigvalsh(stack)))
    return SPDResult(min_eigenvalue=lam, passed=lam > 0.0)


def entropy_flux_compatibility(sys: SystemDef, samples: Array) -> Report:
    r"""Audit :math:`DQ_k = G\,DF_k` on ``samples`` of shape ``(m, n)``."""
    if sys.Q is None:
        raise MissingEntropyFlux(f"system '{sys.name}' has no entropy flux")

    samples = np.asarray(samples, dtype=np.float64)
    require_admissible(sys, samples)
    G = np.asarray(sys.G(samples))
    b = jacobians(sys, samples)

    analytic = sys.DQ is not None and b.analytic
    tol = 1.0e-10 if analytic else 1.0e-5

    residual = 0.0
    for k in range(sys.d):
        if sys.DQ is not None:
            DQ = np.asarray(sys.DQ(k, samples))
        else:
            DQ = fd_gradient(lambda V, k=k: sys.Q(k, V), samples)
        GDF = np.einsum("i...,ij...->j...", G, b.DF[k])
        scale = np.maximum(1.0, np.max(np.abs(GDF), axis=0))
        residual = max(residual, float(np.max(np.abs(DQ - GDF) / scale)))

    return Report(
        name=f"entropy_flux_compatibility[{sys.name}]",
        passed=residual <= tol,
        metrics={"residual": residual, "tolerance": tol,
                 "mode": "analytic" if analytic else "fd",
                 "n_samples": int(samples.shape[-1]) if samples.ndim > 1 else 1})


@dataclass(frozen=True)
class FluxIncrement:
    """``Q_k(target) - Q_k(base)`` for every direction, plus path residual."""

    values: Array
    path_residual: float


def _segment_integral(sys: SystemDef, a: Array, b: Array,
                      nodes: Array, weights: Array, n_panels: int) -> Array:
    edges = np.linspace(0.0, 1.0, n_panels + 1)
    s = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None]
         * 0.5 * (nodes[None, :] + 1.0)).ravel()
    w = (0.5 * (edges[1:] - edges[:-1])[:, None] * weights[None, :]).ravel()

    path = a[:, None] + s[None, :] * (b - a)[:, None]
    if not np.all(sys.is_admissible(path)):
        raise PathLeavesAdmissibleSet(
            f"segment {a} -> {b} leaves the admissible set of '{sys.name}'")

    G = np.asarray(sys.G(path))
    bundle = _analytic_bundle(sys, path)
    out = np.empty(sys.d)
    for k in range(sys.d):
        integrand = np.einsum("in,ijn,j->n", G, bundle.DF[k], b - a)
        out[k] = np.dot(w, integrand)
    return out


def entropy_flux_reconstruct(sys: SystemDef, base: Array, target: Array,
                             *, n_panels: int = 16, order: int = 8) -> FluxIncrement:
    r"""Line-integrate :math:`G\,DF_k` from ``base`` to ``target``.

    Composite Gauss-Legendre on the straight segment; the path residual is
    the largest gap to two L-shaped detours (first coordinate first, then
    the rest, and vice versa), which stay inside any convex box containing
    both endpoints.
    """
    base = np.asarray(base, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def along(points):
        total = np.zeros(sys.d)
        for a, b in zip(points[:-1], points[1:]):
            if np.any(a != b):
                total += _segment_integral(sys, a, b, nodes, weights, n_panels)
        return total

    straight = along([base, target])
    corner1 = base.copy()
    corner1[0] = target[0]
    corner2 = target.copy()
    corner2[0] = base[0]
    detour1 = along([base, corner1, target])
    detour2 = along([base, corner2, target])

    residual = float(max(np.max(np.abs(detour1 - straight)),
                         np.max(np.abs(detour2 - straight))))
    return FluxIncrement(values=straight, path_residual=residual)


def audit_system(sys: SystemDef, n_samples: int = 1000, *,
                 seed: int | None = 0) -> Report:
    """Run the symmetrizer, derivative and compatibility audits on the box."""
    samples = sys.sample(n_samples, seed)
    S, asym = symmetrizer(sys, samples, return_asymmetry=True)
    spd = check_spd(S)

    metrics: dict[str, Any] = {
        "n_samples": n_samples,
        "symmetrizer_asymmetry": asym,
        "symmetrizer_min_eigenvalue": spd.min_eigenvalue,
    }
    passed = spd.passed

    if sys.has_analytic_derivatives:
        gaps = derivative_mismatch(sys, samples)
        metrics["derivative_gap"] = max(gaps.values())
        passed &= metrics["derivative_gap"] <= FD_AGREEMENT_TOL

    det = det_DA(jacobians(sys, samples).DA)
    metrics["min_abs_det_DA"] = float(np.min(np.abs(det)))
    passed &= metrics["min_abs_det_DA"] >= DET_TOL

    if sys.Q is not None:
        compat = entropy_flux_compatibility(sys, samples)
        metrics["flux_compatibility_residual"] = compat.metrics["residual"]
        passed &= compat.passed

    return Report(name=f"audit[{sys.name}]", passed=bool(passed), metrics=metrics)
