from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hypercl.catalog import (
    ElasticityParams,
    EulerParams,
    SWMHDParams,
    TriangularParams,
    burgers_flux,
    euler_pressure_potential,
    flux_from_config,
    linear_elasticity_params,
    list_systems,
    make_convex_elasticity_1d,
    make_isentropic_euler,
    make_multid_triangular,
    make_scalar,
    make_swmhd,
    make_system,
    make_triangular,
    max_lambda,
    power_flux,
)
from hypercl.errors import InvalidParams, LambdaTooLarge, NonConvexEnergy, NonConvexFlux
from hypercl.system import check_spd, symmetrizer


def test_six_catalog_names():
    assert list_systems() == ("euler", "swmhd", "elastic1d", "triangular", "scalar",
                              "triangular-md")


def test_euler_examples():
    sys = make_isentropic_euler(EulerParams(gamma=2.0))
    assert sys.H(np.array([2.0, 1.0])) == pytest.approx(3.0)
    np.testing.assert_allclose(sys.G(np.array([1.0, 0.0])), [1.0, 0.0], atol=1e-15)
    assert sys.H(np.array([1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("gamma", [1.4, 2.0, 3.0])
def test_pressure_potential_against_quadrature(gamma):
    # P(rho) = rho * int_1^rho p(r) / r^2 dr with p = rho^gamma
    P, dP, d2P = euler_pressure_potential(gamma)
    for rho in (0.5, 1.0, 1.7):
        val = rho * quad(lambda r: r ** (gamma - 2.0), 1.0, rho)[0]
        assert P(rho) == pytest.approx(val, rel=1e-10, abs=1e-14)
        # pressure law p = rho P' - P = rho^gamma
        assert rho * dP(rho) - P(rho) == pytest.approx(rho**gamma, rel=1e-12)
        assert d2P(rho) == pytest.approx(gamma * rho ** (gamma - 2.0))


def test_euler_validation():
    with pytest.raises(InvalidParams):
        make_isentropic_euler(EulerParams(gamma=1.0))
    with pytest.raises(InvalidParams):
        make_isentropic_euler(EulerParams(rho_min=0.0))


def test_swmhd_examples():
    sys = make_swmhd(SWMHDParams(g_grav=2.0))
    assert sys.H(np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)
    np.testing.assert_allclose(sys.G(np.array([1.0, 0.0, 0.0])), [2.0, 0.0, 0.0])
    np.testing.assert_allclose(sys.A(np.array([2.0, 1.0, -1.0])), [2.0, 2.0, -2.0])


def test_swmhd_constrained_flux_exact_without_field():
    """With b = 0 the stored constrained flux is an exact entropy flux."""
    sys = make_swmhd(SWMHDParams(g_grav=9.81))
    Qc = sys.params["constrained_Q"]
    xi = sys.sample(50, 0)
    xi[2] = 0.0
    h = 1e-6
    for j in range(2):
        e = np.zeros((3, 1))
        e[j] = h
        dQ = (Qc(0, xi + e) - Qc(0, xi - e)) / (2 * h)
        GDF = np.einsum("in,in->n", sys.G(xi), np.asarray(sys.DF(0, xi))[:, j])
        np.testing.assert_allclose(dQ, GDF, atol=1e-6)


def test_elasticity_examples():
    lin = make_convex_elasticity_1d(linear_elasticity_params())
    np.testing.assert_allclose(symmetrizer(lin, np.array([0.2, 0.3])), np.eye(2),
                               atol=1e-12)
    assert lin.H(np.array([1.0, 1.0])) == pytest.approx(1.0)
    p = ElasticityParams(F_range=(-2.5, 2.5))
    assert p.Sigma(2.0) == pytest.approx(10.0)


def test_elasticity_nonconvex_energy():
    p = ElasticityParams(W=lambda F: -0.5 * F**2, Sigma=lambda F: -F,
                         dSigma=lambda F: -np.ones_like(np.asarray(F, dtype=float)),
                         d2Sigma=lambda F: np.zeros_like(np.asarray(F, dtype=float)))
    with pytest.raises(NonConvexEnergy):
        make_convex_elasticity_1d(p)


def test_triangular_examples():
    p = TriangularParams(q=1.0, m_exp=1, lam=0.25, M1=1.0)
    assert p.phi(1.0) == pytest.approx(1.5 * np.log(1.25))
    assert np.exp(-p.phi(1.0)) == pytest.approx(0.71554, abs=5e-6)
    assert p.g(1.0) == pytest.approx(-0.25)
    sys = make_triangular(p)
    assert sys.H(np.array([1.0, 0.0])) == pytest.approx(1.0)


def test_max_lambda_examples():
    assert max_lambda(1.0, 1, 1.0) == pytest.approx(0.25)
    assert max_lambda(1.0, 1, 2.0) == pytest.approx(1.0 / 16.0)
    assert max_lambda(1.0, 1, 1e-300, cap=1e6) == 1e6
    with pytest.raises(InvalidParams):
        max_lambda(2.5, 1, 1.0)


def test_kappa_second_derivative_vanishes_at_threshold():
    for q, m, M1 in [(1.0, 1, 1.0), (1.5, 2, 0.8), (1.2, 1, 1.3)]:
        lam = max_lambda(q, m, M1)
        p = TriangularParams(q=q, m_exp=m, lam=lam, M1=M1)
        assert abs(p.d2kappa(M1)) <= 1e-9
        # kappa'' against finite differences
        h = 1e-4
        u = 0.7 * M1
        fd = (p.kappa(u + h) - 2 * p.kappa(u) + p.kappa(u - h)) / h**2
        assert p.d2kappa(u) == pytest.approx(fd, rel=1e-5, abs=1e-7)
        with pytest.raises(LambdaTooLarge, match="threshold"):
            TriangularParams(q=q, m_exp=m, lam=1.01 * lam, M1=M1).validate()
        bigger = TriangularParams(q=q, m_exp=m, lam=1.01 * lam, M1=M1)
        assert bigger.d2kappa(M1) > 0.0


def test_scalar_examples():
    b = burgers_flux()
    assert b.fp(0.3) == pytest.approx(0.3)
    c = power_flux(2.0)
    assert c.fp(-1.5) == pytest.approx(-1.5 * 1.5)
    assert c.fp(2.0) == pytest.approx(4.0)
    concave = flux_from_config("burgers")
    with pytest.raises(NonConvexFlux):
        make_scalar(type(concave)(name="concave", f=lambda u: -0.5 * u**2,
                                  fp=lambda u: -u, fpp=lambda u: -np.ones_like(u)))


def test_multid_triangular_shapes_and_spd():
    sys = make_multid_triangular(2, 1, TriangularParams(lam=0.2))
    assert sys.d == 2 and sys.m == 2
    assert check_spd(symmetrizer(sys, np.array([0.5, 0.1]))).passed
    U = np.zeros((2, 8, 8))
    assert np.asarray(sys.F(1, U)).shape == (2, 8, 8)


def test_make_system_rejects_unknown():
    with pytest.raises(InvalidParams):
        make_system("maxwell")
    with pytest.raises(InvalidParams):
        make_system("euler", {"kappa": 1.0})


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 3.0), st.integers(1, 3))
def test_euler_symmetrizer_closed_form_property(gamma, d):
    sys = make_isentropic_euler(EulerParams(gamma=gamma, d=d))
    xi = sys.sample(16, 0)
    S = symmetrizer(sys, xi)
    ref = np.zeros_like(S)
    ref[0, 0] = gamma * xi[0] ** (gamma - 2.0)
    for i in range(1, d + 1):
        ref[i, i] = xi[0]
    np.testing.assert_allclose(S, ref, atol=1e-10)
