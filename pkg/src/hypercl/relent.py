r"""
Relative entropy and relative flux

.. math::

    H(\xi|\bar\xi) = H(\xi) - H(\bar\xi) - G(\bar\xi)\cdot(A(\xi) - A(\bar\xi)),

    F_k(\xi|\bar\xi) = F_k(\xi) - F_k(\bar\xi)
        - DF_k(\bar\xi)\,DA(\bar\xi)^{-1}(A(\xi) - A(\bar\xi)).

Fields are arrays of shape ``(m, N_1, ..., N_d)`` on the unit torus.
"""

from __future__ import annotations

import numpy as np

from hypercl.errors import GridMismatch, SingularDA
from hypercl.report import Report
from hypercl.system import DET_TOL, SystemDef, jacobians, require_admissible

Array = np.ndarray


def relative_entropy(sys: SystemDef, xi: Array, xibar: Array) -> Array:
    """Relative entropy, vectorized over trailing axes."""
    xi = np.asarray(xi, dtype=np.float64)
    xibar = np.asarray(xibar, dtype=np.float64)
    require_admissible(sys, xi)
    require_admissible(sys, xibar)
    dA = np.asarray(sys.A(xi)) - np.asarray(sys.A(xibar))
    return (np.asarray(sys.H(xi)) - np.asarray(sys.H(xibar))
            - np.sum(np.asarray(sys.G(xibar)) * dA, axis=0))


def _solve_DA(DA: Array, rhs: Array) -> Array:
    """Solve ``DA x = rhs`` per sample (LU with partial pivoting)."""
    mat = np.moveaxis(DA, (0, 1), (-2, -1))
    vec = np.moveaxis(rhs, 0, -1)[..., None]
    det = np.abs(np.linalg.det(mat))
    if np.any(det < DET_TOL):
        raise SingularDA(f"|det DA| = {float(np.min(det)):.3e} < {DET_TOL}")
    return np.moveaxis(np.linalg.solve(mat, vec)[..., 0], -1, 0)


def relative_flux(sys: SystemDef, k: int, xi: Array, xibar: Array) -> Array:
    """Relative flux in direction ``k`` (0-based), shape ``(m, ...)``."""
    xi = np.asarray(xi, dtype=np.float64)
    xibar = np.asarray(xibar, dtype=np.float64)
    require_admissible(sys, xi)
    b = jacobians(sys, xibar)
    dA = np.asarray(sys.A(xi)) - np.asarray(sys.A(xibar))
    if sys.A_is_identity:
        w = dA
    else:
        w = _solve_DA(b.DA, dA)
    return (np.asarray(sys.F(k, xi)) - np.asarray(sys.F(k, xibar))
            - np.einsum("ij...,j...->i...", b.DF[k], w))


def _check_fields(sys: SystemDef, U: Array, Ubar: Array) -> tuple[Array, Array]:
    U = np.asarray(U, dtype=np.float64)
    Ubar = np.asarray(Ubar, dtype=np.float64)
    if U.shape != Ubar.shape:
        raise GridMismatch(f"field shapes differ: {U.shape} vs {Ubar.shape}")
    if U.shape[0] != sys.m:
        raise GridMismatch(f"expected {sys.m} components, got {U.shape[0]}")
    return U, Ubar


def relative_entropy_integral(sys: SystemDef, U: Array, Ubar: Array,
                              *, cell_volume: float | None = None) -> float:
    r"""Midpoint rule for :math:`\int H(U|\bar U)\,dx` over the unit torus."""
    U, Ubar = _check_fields(sys, U, Ubar)
    if cell_volume is None:
        cell_volume = 1.0 / float(np.prod(U.shape[1:]))
    density = relative_entropy(sys, U, Ubar)
    # np.sum uses pairwise summation, so the result is deterministic
    return float(np.sum(density) * cell_volume)


QUADRATIC_BOUNDS_COLUMNS = ("sample_id", "xi", "xibar", "H_rel", "ratio1", "ratio2")


def quadratic_bounds_audit(sys: SystemDef, n_samples: int = 10_000, *,
                           seed: int | None = 0, keep_rows: bool = False) -> Report:
    r"""Monte-Carlo audit of :math:`H(\xi|\bar\xi) \gtrsim |A(\xi)-A(\bar\xi)|^2`
    and :math:`|F_k(\xi|\bar\xi)| \lesssim H(\xi|\bar\xi)` on the sample box.

    ``ratio1`` is :math:`H_{rel}/|\Delta A|^2` (its minimum must be positive),
    ``ratio2`` is :math:`\max_k |F_k(\xi|\bar\xi)|/H_{rel}` (its maximum must
    be finite).
    """
    rng = np.random.default_rng(seed)
    xi = sys.sample(n_samples, rng)
    xibar = sys.sample(n_samples, rng)
    distinct = np.linalg.norm(xi - xibar, axis=0) > 1.0e-9
    xi, xibar = xi[:, distinct], xibar[:, distinct]

    H_rel = relative_entropy(sys, xi, xibar)
    dA = np.asarray(sys.A(xi)) - np.asarray(sys.A(xibar))
    ratio1 = H_rel / np.sum(dA**2, axis=0)
    F_rel = np.stack([relative_flux(sys, k, xi, xibar) for k in range(sys.d)])
    F_norm = np.max(np.linalg.norm(F_rel, axis=1), axis=0)
    with np.errstate(divide="ignore"):
        ratio2 = np.where(H_rel > 0.0, F_norm / H_rel, np.inf)

    min1 = float(np.min(ratio1))
    max2 = float(np.max(ratio2))
    rows = []
    if keep_rows:
        for j in range(xi.shape[1]):
            row = {"sample_id": j}
            row.update({f"xi{i}": xi[i, j] for i in range(sys.m)})
            row.update({f"xibar{i}": xibar[i, j] for i in range(sys.m)})
            row.update({"H_rel": H_rel[j], "ratio1": ratio1[j], "ratio2": ratio2[j]})
            rows.append(row)

    failures = []
    if not min1 > 0.0:
        failures.append(f"H_rel/|dA|^2 reached {min1:.3e}")
    if not np.isfinite(max2):
        failures.append("|F_rel|/H_rel is unbounded")
    return Report(
        name=f"quadratic_bounds[{sys.name}]",
        passed=not failures,
        metrics={"n_pairs": int(xi.shape[1]), "min_ratio1": min1,
                 "max_ratio2": max2, "min_H_rel": float(np.min(H_rel))},
        rows=rows, failures=failures)
