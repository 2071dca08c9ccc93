"""End-to-end acceptance checks, one test per criterion, each printing a
PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

from hypercl.besov import besov_seminorm, commutator_rate, mollification_rate_audit
from hypercl.catalog import (
    ElasticityParams,
    EulerParams,
    SWMHDParams,
    burgers_flux,
    euler_pressure_potential,
    list_systems,
    make_isentropic_euler,
    make_scalar,
    make_swmhd,
    make_system,
    max_lambda,
)
from hypercl.exact import (
    RarefactionSpec,
    TerminalData,
    backward_reconstruct,
    elasticity_self_similar,
    euler_split,
    holder_certificate,
    lipschitz_B0,
    periodic_profile,
    periodic_profile_dx,
    planar_condition_check,
    planar_extend,
    swmhd_split,
    theta,
    triangular_split,
)
from hypercl.fields import SpaceTimeField, cell_centers, sample_field
from hypercl.fv import (
    GridSpec,
    conserved_totals,
    default_tests,
    entropy_budget,
    solve,
    transverse_divergence,
    weak_residual,
)
from hypercl.monitor import build_scenario, uniqueness_experiment
from hypercl.osc import OscBound, osc_margin_pointwise, scalar_onesided
from hypercl.relent import quadratic_bounds_audit, relative_entropy, relative_flux
from hypercl.system import check_spd, symmetrizer

N_PAIRS = 10_000


def _euler_closed_forms(gamma, d, xi, xibar):
    P, dP, _ = euler_pressure_potential(gamma)
    rho, v = xi[0], xi[1:]
    rb, vb = xibar[0], xibar[1:]
    w = v - vb
    P_rel = P(rho) - P(rb) - dP(rb) * (rho - rb)
    p = lambda r: r * dP(r) - P(r)  # noqa: E731
    dp = lambda r: r * euler_pressure_potential(gamma)[2](r)  # noqa: E731
    p_rel = p(rho) - p(rb) - dp(rb) * (rho - rb)
    H = 0.5 * rho * np.sum(w**2, axis=0) + P_rel
    flux = []
    for k in range(d):
        mom = rho * w * w[k] + p_rel * (np.arange(d)[:, None] == k)
        flux.append(np.concatenate([np.zeros((1,) + rho.shape), mom]))
    return H, flux


def test_criterion_01_euler_closed_forms(verdict):
    start = time.perf_counter()
    worst_H = worst_F = 0.0
    for gamma in (1.4, 2.0):
        for d in (1, 2):
            sys = make_isentropic_euler(EulerParams(gamma=gamma, d=d))
            rng = np.random.default_rng(1)
            xi, xibar = sys.sample(N_PAIRS, rng), sys.sample(N_PAIRS, rng)
            H_ref, F_ref = _euler_closed_forms(gamma, d, xi, xibar)
            worst_H = max(worst_H, float(np.max(np.abs(relative_entropy(sys, xi, xibar)
                                                        - H_ref))))
            for k in range(d):
                worst_F = max(worst_F, float(np.max(np.abs(
                    relative_flux(sys, k, xi, xibar) - F_ref[k]))))
    elapsed = time.perf_counter() - start
    ok = worst_H <= 1e-10 and worst_F <= 1e-10 and elapsed < 5.0
    verdict(1, "Euler relative entropy and flux match closed forms", ok,
            f"H gap {worst_H:.2e}, flux gap {worst_F:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_swmhd_closed_form(verdict):
    start = time.perf_counter()
    worst = 0.0
    for g in (1.0, 9.81):
        for d in (1, 2):
            sys = make_swmhd(SWMHDParams(g_grav=g, d=d))
            rng = np.random.default_rng(2)
            xi, xibar = sys.sample(N_PAIRS, rng), sys.sample(N_PAIRS, rng)
            h, v, b = xi[0], xi[1:1 + d], xi[1 + d:]
            hb, vb, bb = xibar[0], xibar[1:1 + d], xibar[1 + d:]
            ref = (0.5 * h * np.sum((v - vb) ** 2, axis=0)
                   + 0.5 * h * np.sum((b - bb) ** 2, axis=0) + 0.5 * g * (h - hb) ** 2)
            worst = max(worst, float(np.max(np.abs(relative_entropy(sys, xi, xibar) - ref))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 5.0
    verdict(2, "SWMHD relative entropy matches closed form", ok,
            f"gap {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_03_symmetrizers(verdict):
    start = time.perf_counter()
    gaps, spd = [], []
    for gamma in (1.4, 2.0):
        sys = make_isentropic_euler(EulerParams(gamma=gamma, d=2))
        xi = sys.sample(1000, 3)
        S = symmetrizer(sys, xi)
        ref = np.zeros_like(S)
        ref[0, 0] = euler_pressure_potential(gamma)[2](xi[0])
        for i in range(1, 3):
            ref[i, i] = xi[0]
        gaps.append(float(np.max(np.abs(S - ref))))
        spd.append(check_spd(S).passed)
    g = 9.81
    sys = make_swmhd(SWMHDParams(g_grav=g, d=2))
    xi = sys.sample(1000, 4)
    S = symmetrizer(sys, xi)
    ref = np.zeros_like(S)
    ref[0, 0] = g
    for i in range(1, sys.m):
        ref[i, i] = xi[0]
    gaps.append(float(np.max(np.abs(S - ref))))
    spd.append(check_spd(S).passed)

    tri = make_system("triangular-md", {"d": 2, "m_comp": 2})
    tp = tri.params["triangular"]
    lam_ok = abs(tp.lam - 0.99 * max_lambda(tp.q, tp.m_exp, tp.M1)) <= 1e-15
    tri_spd = check_spd(symmetrizer(tri, tri.sample(1000, 5)))
    spd.append(tri_spd.passed)
    elapsed = time.perf_counter() - start
    ok = max(gaps) <= 1e-10 and all(spd) and lam_ok and elapsed < 5.0
    verdict(3, "symmetrizer identities and positive definiteness", ok,
            f"gap {max(gaps):.2e}, triangular min eig {tri_spd.min_eigenvalue:.3e}, "
            f"{elapsed:.2f}s")
    assert ok


def test_criterion_04_relative_entropy_positivity(verdict):
    details, ok = [], True
    for name in list_systems():
        sys = make_system(name)
        rep = quadratic_bounds_audit(sys, N_PAIRS, seed=6)
        xi = sys.sample(1000, 7)
        diag = float(np.max(np.abs(relative_entropy(sys, xi, xi))))
        good = rep.metrics["min_H_rel"] > 0.0 and rep.metrics["n_pairs"] == N_PAIRS \
            and diag <= 1e-12
        ok &= good
        details.append(f"{name} min {rep.metrics['min_H_rel']:.2e}")
    verdict(4, "relative entropy positive off the diagonal, zero on it", ok,
            "; ".join(details))
    assert ok


def test_criterion_05_relative_flux_domination(verdict):
    details, ok = [], True
    for name in list_systems():
        rep = quadratic_bounds_audit(make_system(name), N_PAIRS, seed=8)
        ratio = rep.metrics["max_ratio2"]
        good = bool(np.isfinite(ratio)) and rep.passed
        ok &= good
        details.append(f"{name} {ratio:.3g}")
    verdict(5, "max |F_k(xi|xibar)| / H(xi|xibar) finite", ok, "; ".join(details))
    assert ok


def test_criterion_06_commutator_rate(verdict):
    start = time.perf_counter()
    N = 2**14
    x = cell_centers(N)
    w = np.abs(2.0 * x - 1.0) ** 0.6
    eps = [2.0**-k for k in range(4, 10)]
    rep = commutator_rate(lambda u: u**2, w, 0.6, 4.0, eps)
    ident = commutator_rate(lambda u: u, w, 0.6, 4.0, eps)
    elapsed = time.perf_counter() - start
    slope = rep.metrics["slope"]
    ok = rep.passed and slope >= 0.1 and ident.metrics["max_norm"] <= 1e-14 \
        and elapsed < 30.0
    verdict(6, "commutator decay rate", ok,
            f"slope {slope:.3f} >= 0.1, identity {ident.metrics['max_norm']:.1e}, "
            f"{elapsed:.2f}s")
    assert ok


def test_criterion_07_mollification_rates(verdict):
    start = time.perf_counter()
    N = 2**12
    x = cell_centers(N)
    g = ((x >= 0.25) & (x < 0.75)).astype(float)
    rep = mollification_rate_audit(g, 0.5, 2.0, [2.0**-k for k in range(3, 8)])
    elapsed = time.perf_counter() - start
    slope, semi = rep.metrics["slope_error"], rep.metrics["seminorm"]
    ok = 0.45 <= slope <= 0.55 and abs(semi / np.sqrt(2.0) - 1.0) <= 0.05 \
        and elapsed < 10.0
    verdict(7, "mollification rates for an indicator", ok,
            f"slope {slope:.3f}, seminorm {semi:.4f}, {elapsed:.2f}s")
    assert ok


def test_criterion_08_backward_characteristics(verdict):
    start = time.perf_counter()
    flux = burgers_flux()
    xs = np.linspace(-1.0, 1.0, 2001)
    td = TerminalData(x=xs, u_T=xs.copy(), T=1.0, beta=1.0, M=1.0)
    errs, certs, onesided = [], [], []
    for t in (0.25, 0.5, 1.0):
        grid, u = backward_reconstruct(td, flux, t, n_out=2001)
        dx = float(grid[1] - grid[0])
        errs.append(float(np.max(np.abs(u - grid / t))) / dx)
        cert = holder_certificate(grid, u, flux, 1.0, 1.0, t, 1.0)
        certs.append(cert.passed and cert.bound == max(1.0, 1.0 / t))
        onesided.append(scalar_onesided(u, dx, periodic=False))
    elapsed = time.perf_counter() - start
    ok = max(errs) <= 2.0 and all(certs) and min(onesided) >= -1e-10 and elapsed < 5.0
    verdict(8, "backward characteristics, Holder and one-sided certificates", ok,
            f"max error {max(errs):.2e} dx, min quotient {min(onesided):.3f}, "
            f"{elapsed:.2f}s")
    assert ok


def test_criterion_09_periodic_profile(verdict):
    start = time.perf_counter()
    spec = RarefactionSpec(burgers_flux(), 0.0, 1.0, 0.0, 1.0, 3.0)
    th = theta(spec, 2.5, 1.0)
    B0 = lipschitz_B0(spec, 1.0)
    sys = make_scalar(burgers_flux(), box=(-0.5, 1.5))
    times = np.linspace(0.0, 1.0, 21)
    fld = sample_field(lambda x, t: periodic_profile(spec, x, t), times, 2000,
                       lower=-0.5, length=4.0, periodic=False,
                       dfunc=lambda x, t: periodic_profile_dx(spec, x, t)[None])
    rep = osc_margin_pointwise(sys, fld, OscBound.constant(B0 * (1.0 + 1e-6)), 200)
    quot = min(scalar_onesided(U[0], fld.dx[0], periodic=False) for U in fld.values)
    elapsed = time.perf_counter() - start
    ok = abs(th - 0.5) <= 1e-10 and abs(B0 - 1.0) <= 0.02 and rep.passed \
        and quot >= -B0 * (1.0 + 1e-6) and elapsed < 5.0
    verdict(9, "periodic ramp profile", ok,
            f"Theta(2.5)={th:.12f}, B0={B0:.5f}, min quotient {quot:.5f}, "
            f"osc margin {rep.worst_margin:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_10_uniqueness_experiment(verdict):
    start = time.perf_counter()
    rep = uniqueness_experiment({"scenario": {"kind": "triangular-rarefaction"},
                                 "ladder": [256, 512, 1024, 2048], "T": 0.5,
                                 "delta": 1e-2, "seed": 0})
    elapsed = time.perf_counter() - start
    m = rep.metrics
    rT = np.array(m["r_T"])
    ok = rep.passed and bool(np.all(np.diff(rT) < 0.0)) and rT[-1] <= 0.25 * rT[0] \
        and m["perturbed_worst_ratio"] <= 1.0 and elapsed < 180.0
    verdict(10, "Gronwall monitor on the triangular system", ok,
            f"r(T) {', '.join(f'{r:.2e}' for r in rT)}; ratio {rT[-1] / rT[0]:.3f}; "
            f"perturbed sup r/(r0 e^B 1.5) {m['perturbed_worst_ratio']:.3f}; "
            f"{elapsed:.1f}s")
    assert ok


def _shipped_runs():
    """Finite-volume runs for every shipped scenario plus smooth data for the
    remaining catalog systems."""
    for kind in ("triangular-rarefaction", "euler-simple-wave", "burgers-shock"):
        scn = build_scenario({"kind": kind})
        for N in (256, 512):
            U0 = scn.exact(np.array([0.0]), N).values[0]
            yield f"{kind} N={N}", scn.sys, U0, GridSpec(1, N, 0.45, scn.T)
    x = cell_centers(256)
    s = np.sin(2.0 * np.pi * x)
    sw = make_system("swmhd", {"g": 1.0})
    yield "swmhd", sw, np.stack([1.0 + 0.3 * s, 0.2 * s, 0.1 + 0.2 * np.cos(2 * np.pi * x)]), \
        GridSpec(1, 256, 0.45, 0.3)
    el = make_system("elastic1d")
    yield "elastic1d", el, np.stack([0.3 * s, 0.4 * np.cos(2 * np.pi * x)]), \
        GridSpec(1, 256, 0.45, 0.3)
    X, Y = np.meshgrid(cell_centers(64), cell_centers(64), indexing="ij")
    tmd = make_system("triangular-md", {"d": 2})
    U0 = np.stack([0.25 + 0.2 * np.sin(2 * np.pi * (X + Y)),
                   0.5 + 0.2 * np.cos(2 * np.pi * X)])
    yield "triangular-md 2-D", tmd, U0, GridSpec(2, 64, 0.45, 0.2)
    eu2 = make_system("euler", {"d": 2})
    U0 = np.stack([1.0 + 0.2 * np.sin(2 * np.pi * X), 0.2 * np.cos(2 * np.pi * Y),
                   0.1 * np.sin(2 * np.pi * (X - Y))])
    yield "euler 2-D", eu2, U0, GridSpec(2, 64, 0.45, 0.2)


def test_criterion_11_dissipativity_and_conservation(verdict):
    details, ok = [], True
    for label, sys, U0, grid in _shipped_runs():
        fld = solve(sys, U0, grid, n_snapshots=16)
        bud = entropy_budget(sys, fld)
        tot = conserved_totals(sys, fld)
        drift = float(np.max(np.abs(tot - tot[0])))
        good = bud.passed and drift <= 1e-12
        ok &= good
        details.append(f"{label}: {'ok' if good else 'FAIL'} drift {drift:.1e}")
    verdict(11, "entropy budget nonincreasing, totals conserved", ok, "; ".join(details))
    assert ok


def test_criterion_12_planar_extension(verdict):
    start = time.perf_counter()
    checks = [planar_condition_check(s, tol=1e-12)
              for s in (euler_split(2), swmhd_split(2), triangular_split(2))]
    split = euler_split(2)
    sys1 = make_isentropic_euler(EulerParams(gamma=2.0, d=1))
    x = cell_centers(128)
    U0 = np.stack([1.0 + 0.3 * np.sin(2 * np.pi * x), 0.3 * np.cos(2 * np.pi * x)])
    run = solve(sys1, U0, GridSpec(1, 128, 0.45, 0.25), n_snapshots=9)
    ext = planar_extend(split, run, 2, N_transverse=16)
    res1 = weak_residual(sys1, run, default_tests(1))
    res2 = weak_residual(split.sys, ext, default_tests(2, planar=True))
    div = transverse_divergence(split.sys, ext)
    elapsed = time.perf_counter() - start
    ok = all(c.passed for c in checks) and div == 0.0 and abs(res1 - res2) <= 1e-12 \
        and elapsed < 30.0
    verdict(12, "planar extension", ok,
            f"splits {[c.passed for c in checks]}, transverse divergence {div:.1e}, "
            f"residual 1-D {res1:.6e} vs 2-D {res2:.6e}, {elapsed:.2f}s")
    assert ok


def test_criterion_13_elasticity_fan(verdict):
    p = ElasticityParams()
    ok = True
    parts = []
    for branch, zr in ((-1, (1.1, 2.0)), (1, (1.1, 2.0))):
        fan = elasticity_self_similar(p, zr, n=1000, branch=branch)
        lhs, rhs = fan.sign_identity(p)
        ident = float(np.max(np.abs(lhs - rhs)))
        nonneg = bool(np.all(rhs >= 0.0))
        good = fan.residual <= 1e-6 and ident <= 1e-10 * np.max(np.abs(rhs)) and nonneg
        if branch == -1:
            good &= bool(np.all(fan.dV >= 0.0))
            parts.append(f"min dV {np.min(fan.dV):.3f}")
        ok &= good
        parts.append(f"branch {branch}: residual {fan.residual:.1e}, identity gap {ident:.1e}")
    verdict(13, "elasticity self-similar fan", ok, "; ".join(parts))
    assert ok
