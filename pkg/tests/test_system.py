from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercl.catalog import (
    EulerParams,
    burgers_flux,
    make_isentropic_euler,
    make_scalar,
    make_system,
    make_triangular,
    list_systems,
)
from hypercl.errors import (
    AsymmetricInput,
    DerivativeMismatch,
    MissingEntropyFlux,
    NonAdmissibleState,
    PathLeavesAdmissibleSet,
    SingularDA,
)
from hypercl.system import (
    SystemDef,
    audit_system,
    check_spd,
    entropy_flux_compatibility,
    entropy_flux_reconstruct,
    fd_hessian,
    fd_jacobian,
    jacobians,
    symmetrizer,
)


def _quadratic_system() -> SystemDef:
    """A = id, F = 0, H = |u|^2 / 2 on the plane."""
    return SystemDef(
        name="quadratic", d=1, m=2, A=lambda U: np.asarray(U, dtype=float),
        F=lambda k, U: np.zeros_like(np.asarray(U, dtype=float)),
        H=lambda U: 0.5 * np.sum(np.asarray(U) ** 2, axis=0),
        G=lambda U: np.asarray(U, dtype=float),
        sample_box=(np.array([-1.0, -1.0]), np.array([1.0, 1.0])),
        A_is_identity=True)


def test_euler_DA_hand_value():
    sys = make_isentropic_euler(EulerParams(gamma=2.0))
    b = jacobians(sys, np.array([2.0, 1.0]))
    np.testing.assert_allclose(b.DA, [[1.0, 0.0], [1.0, 2.0]], atol=1e-14)


def test_identity_DA_for_triangular():
    sys = make_triangular()
    b = jacobians(sys, np.array([0.3, 0.2]))
    np.testing.assert_allclose(b.DA, np.eye(2), atol=1e-14)


def test_fd_mode_agrees_with_analytic():
    sys = make_system("swmhd", {"d": 2})
    xi = sys.sample(20, 0)
    a = jacobians(sys, xi)
    f = jacobians(sys, xi, mode="fd")
    np.testing.assert_allclose(f.DA, a.DA, atol=1e-6)
    np.testing.assert_allclose(f.DF, a.DF, atol=1e-6)
    np.testing.assert_allclose(f.D2H, a.D2H, atol=1e-4)


def test_corrupted_analytic_derivative_is_diagnosed():
    sys = make_isentropic_euler()
    bad = dataclasses.replace(sys, DA=lambda U: 1.01 * np.asarray(sys.DA(U)))
    with pytest.raises(DerivativeMismatch, match="DA"):
        jacobians(bad, np.array([1.0, 0.5]), verify=True)


def test_singular_DA_raises():
    sys = dataclasses.replace(_quadratic_system(), A_is_identity=False,
                              A=lambda U: np.stack([U[0], U[0]]), DA=None)
    with pytest.raises(SingularDA):
        jacobians(sys, np.array([0.1, 0.2]))


def test_inadmissible_state_raises():
    sys = make_isentropic_euler()
    with pytest.raises(NonAdmissibleState):
        jacobians(sys, np.array([-1.0, 0.0]))


def test_symmetrizer_examples():
    euler = make_isentropic_euler(EulerParams(gamma=2.0))
    np.testing.assert_allclose(symmetrizer(euler, np.array([2.0, 1.0])),
                               np.diag([2.0, 2.0]), atol=1e-12)
    sw = make_system("swmhd", {"g": 9.81})
    np.testing.assert_allclose(symmetrizer(sw, np.array([1.0, 0.0, 0.0])),
                               np.diag([9.81, 1.0, 1.0]), atol=1e-12)
    np.testing.assert_allclose(symmetrizer(_quadratic_system(), np.array([0.3, -0.2])),
                               np.eye(2), atol=1e-12)


def test_symmetrizer_rejects_wrong_second_derivative():
    sys = make_isentropic_euler()
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    bad = dataclasses.replace(
        sys, D2H=lambda U: np.asarray(sys.D2H(U)) + skew[(...,) + (None,) * (np.ndim(U) - 1)])
    with pytest.raises(AsymmetricInput):
        symmetrizer(bad, np.array([1.0, 0.2]))


def test_check_spd_examples():
    r = check_spd(np.diag([2.0, 2.0]))
    assert r.passed and r.min_eigenvalue == pytest.approx(2.0)
    r = check_spd(np.diag([9.81, 1.0, 1.0]))
    assert r.passed and r.min_eigenvalue == pytest.approx(1.0)
    r = check_spd(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not r.passed and r.min_eigenvalue == pytest.approx(-1.0)
    with pytest.raises(AsymmetricInput):
        check_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_compatibility_scalar_and_triangular_md():
    for sys in (make_scalar(burgers_flux()), make_system("triangular-md", {"d": 2}),
                make_system("triangular-md", {"d": 3, "m_comp": 2})):
        rep = entropy_flux_compatibility(sys, sys.sample(200, 1))
        assert rep.passed, rep.metrics


def test_compatibility_detects_corrupted_Q():
    sys = make_scalar(burgers_flux())
    bad = dataclasses.replace(sys, Q=lambda k, U: np.asarray(sys.Q(k, U)) + U[0], DQ=None)
    rep = entropy_flux_compatibility(bad, bad.sample(50, 2))
    assert not rep.passed
    assert rep.metrics["residual"] > 0.1


def test_compatibility_without_Q():
    sys = make_system("swmhd")
    with pytest.raises(MissingEntropyFlux):
        entropy_flux_compatibility(sys, sys.sample(10, 0))


def test_reconstruct_burgers_two_thirds():
    sys = make_scalar(burgers_flux())
    inc = entropy_flux_reconstruct(sys, np.array([0.0]), np.array([1.0]))
    assert inc.values[0] == pytest.approx(2.0 / 3.0, abs=1e-12)
    zero = entropy_flux_reconstruct(sys, np.array([0.4]), np.array([0.4]))
    assert zero.values[0] == 0.0


def test_reconstruct_matches_closed_form_triangular_md():
    sys = make_system("triangular-md", {"d": 2})
    a, b = np.array([0.1, 0.2]), np.array([0.6, -0.4])
    inc = entropy_flux_reconstruct(sys, a, b)
    closed = np.array([sys.Q(k, b) - sys.Q(k, a) for k in range(2)])
    np.testing.assert_allclose(inc.values, closed, atol=1e-8)
    assert inc.path_residual <= 1e-7


def test_reconstruct_path_independence_euler():
    sys = make_isentropic_euler(EulerParams(gamma=1.4, d=2))
    inc = entropy_flux_reconstruct(sys, np.array([0.7, 0.1, -0.2]),
                                   np.array([1.6, -0.5, 0.4]))
    assert inc.path_residual <= 1e-7


def test_reconstruct_path_leaving_set():
    sys = make_isentropic_euler()
    with pytest.raises((PathLeavesAdmissibleSet, NonAdmissibleState)):
        entropy_flux_reconstruct(sys, np.array([1.0, 0.0]), np.array([-0.5, 0.0]))


@pytest.mark.parametrize("name", list_systems())
def test_audit_every_catalog_system(name):
    rep = audit_system(make_system(name), 1000, seed=3)
    assert rep.passed, rep.metrics
    assert rep.metrics["symmetrizer_asymmetry"] <= 1e-10
    assert rep.metrics["symmetrizer_min_eigenvalue"] > 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_fd_helpers_on_polynomial(x, y):
    func = lambda U: np.stack([U[0] ** 2 * U[1], np.sin(U[0]) + U[1] ** 3])  # noqa: E731
    U = np.array([x, y])
    J = fd_jacobian(func, U)
    exact = np.array([[2 * x * y, x**2], [np.cos(x), 3 * y**2]])
    np.testing.assert_allclose(J, exact, atol=1e-6 * max(1.0, np.max(np.abs(exact))))
    Hs = fd_hessian(lambda U: U[0] ** 2 * U[1] + U[1] ** 3, U)
    np.testing.assert_allclose(Hs, [[2 * y, 2 * x], [2 * x, 6 * y]], atol=1e-5)
