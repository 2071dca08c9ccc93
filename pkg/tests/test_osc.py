from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypercl.catalog import burgers_flux, make_scalar, make_system
from hypercl.errors import EpsilonBelowGrid, EpsilonExceedsDomain, FieldLeavesSampleBox
from hypercl.exact import (
    EulerSimpleWave,
    RarefactionSpec,
    periodic_profile,
    periodic_profile_dx,
)
from hypercl.fields import SpaceTimeField, cell_centers, sample_field
from hypercl.monitor import build_scenario
from hypercl.osc import (
    OscBound,
    euler_velocity_onesided,
    fit_osc_bound,
    lipschitz_osc_bound,
    osc_distributional,
    osc_margin_pointwise,
    scalar_onesided,
)
from hypercl.relent import quadratic_bounds_audit

BURGERS = make_scalar(burgers_flux())


def _fan_field(N=256):
    times = np.linspace(0.5, 1.0, 6)
    return sample_field(lambda x, t: x / t, times, N, lower=-0.5, length=1.0,
                        periodic=False, dfunc=lambda x, t: np.full_like(x, 1.0 / t)[None])


def test_rarefaction_fan_has_nonnegative_margin():
    rep = osc_margin_pointwise(BURGERS, _fan_field(), OscBound.constant(0.0), 500)
    assert rep.passed
    assert rep.worst_margin >= 0.0


def test_constant_field_margin_is_b_times_min_H():
    fld = SpaceTimeField(times=np.array([0.0, 0.5]), values=np.full((2, 1, 32), 0.2))
    rep0 = osc_margin_pointwise(BURGERS, fld, OscBound.constant(0.0), 200)
    assert rep0.passed and rep0.worst_margin == pytest.approx(0.0, abs=1e-15)
    rep1 = osc_margin_pointwise(BURGERS, fld, OscBound.constant(1.0), 200)
    assert rep1.worst_margin >= 0.0
    dist = osc_distributional(BURGERS, fld, [0.1, 0.2], OscBound.constant(1.0), 200)
    assert dist.passed and dist.worst_margin >= 0.0


def test_triangular_profile_passes_with_lipschitz_bound():
    scn = build_scenario({"kind": "triangular-rarefaction"})
    fld = scn.exact(np.linspace(0.0, 0.5, 6), 256)
    C = quadratic_bounds_audit(scn.sys, 5000, seed=0).metrics["max_ratio2"]
    b = lipschitz_osc_bound(scn.sys, fld, C)
    rep = osc_margin_pointwise(scn.sys, fld, b, 1000)
    assert rep.passed, rep.worst_margin


def test_fitted_bound_makes_margins_nonnegative():
    scn = build_scenario({"kind": "triangular-rarefaction"})
    fld = scn.exact(np.linspace(0.0, 0.5, 6), 256)
    b = fit_osc_bound(scn.sys, fld, 1000, seed=3)
    assert b.provenance == "fitted"
    assert osc_margin_pointwise(scn.sys, fld, b, 1000, seed=3).passed
    unbounded = osc_margin_pointwise(scn.sys, fld, OscBound.constant(0.0), 1000, seed=3)
    assert not unbounded.passed


def test_pair_sampling_is_stable():
    """The H-normalised worst margin (the fitted b) is stable under refinement."""
    scn = build_scenario({"kind": "triangular-rarefaction"})
    fld = scn.exact(np.linspace(0.0, 0.5, 4), 128)
    for seed in range(3):
        small = osc_margin_pointwise(scn.sys, fld, None, 1000, seed=seed).fitted_b.max()
        large = osc_margin_pointwise(scn.sys, fld, None, 10_000, seed=seed).fitted_b.max()
        assert abs(large - small) <= 0.05 * large


def test_distributional_agrees_with_pointwise_on_smooth_field():
    wave = EulerSimpleWave()
    sys = make_system("euler")
    fld = wave.sample(np.array([0.0, 0.2]), 1024)
    b0 = OscBound.constant(0.0)
    point = osc_margin_pointwise(sys, fld, b0, 300).worst_margin
    gaps = [abs(osc_distributional(sys, fld, [e], b0, 300).worst_margin - point)
            for e in (0.1, 0.05, 0.025)]
    assert gaps[2] < gaps[1] < gaps[0]


def test_distributional_shock_margin_diverges():
    x = cell_centers(2048)
    u = np.where((x > 0.25) & (x < 0.5), 1.0, 0.0)
    fld = SpaceTimeField(times=np.array([0.0]), values=u[None, None])
    rep = osc_distributional(BURGERS, fld, [0.2, 0.1, 0.05, 0.025, 0.0125],
                             OscBound.constant(1.0), 200)
    by_eps = {}
    for row in rep.rows:
        by_eps[row["eps"]] = min(by_eps.get(row["eps"], np.inf), row["worst_margin"])
    eps = sorted(by_eps, reverse=True)
    margins = [by_eps[e] for e in eps]
    assert not rep.passed
    assert all(a > b for a, b in zip(margins, margins[1:]))
    assert margins[-1] < 4.0 * margins[0]


def test_distributional_scale_checks():
    fld = SpaceTimeField(times=np.array([0.0]), values=np.zeros((1, 1, 64)))
    with pytest.raises(EpsilonBelowGrid):
        osc_distributional(BURGERS, fld, [0.01], None, 10)
    with pytest.raises(EpsilonExceedsDomain):
        osc_distributional(BURGERS, fld, [0.6], None, 10)


def test_field_outside_box():
    fld = SpaceTimeField(times=np.array([0.0]), values=np.full((1, 1, 16), 3.0))
    with pytest.raises(FieldLeavesSampleBox):
        osc_margin_pointwise(BURGERS, fld, None, 10)


def test_velocity_onesided_examples():
    times = np.linspace(0.0, 1.0, 5)
    expand = sample_field(lambda x, t: x / (1.0 + t), times, 64, lower=-1.0, length=2.0,
                          periodic=False)
    res = euler_velocity_onesided(expand)
    np.testing.assert_allclose(res.D, 1.0 / (1.0 + times), rtol=1e-12)
    assert np.all(res.bound.values == 0.0)

    compress = sample_field(lambda x, t: -x, times, 64, lower=-1.0, length=2.0,
                            periodic=False)
    res = euler_velocity_onesided(compress, gamma=2.0)
    np.testing.assert_allclose(res.D, -1.0, rtol=1e-12)
    np.testing.assert_allclose(res.bound.values, 2.0)

    rot = sample_field(lambda x, y, t: np.stack([-y, x]), [0.0], (16, 16),
                       lower=-1.0, length=2.0, periodic=False)
    assert abs(euler_velocity_onesided(rot).D[0]) <= 1e-13


def test_velocity_bound_on_centered_rarefaction_is_zero():
    """Centred 1-rarefaction of Euler: v increases through the fan."""
    gamma, w_plus = 2.0, 3.0
    times = np.linspace(0.2, 1.0, 5)

    def lam(x, t):
        return np.clip(x / t, -2.0, -1.0)

    fld = sample_field(lambda x, t: ((gamma - 1) * w_plus + 2 * lam(x, t)) / (gamma + 1),
                       times, 400, lower=-3.0, length=3.0, periodic=False)
    res = euler_velocity_onesided(fld, gamma=gamma)
    assert np.all(res.D >= -1e-12)
    assert res.bound.integral(0.2, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_scalar_onesided_examples():
    x = cell_centers(200)
    assert scalar_onesided(x, 1 / 200, periodic=False) >= 0.0
    spec = RarefactionSpec(burgers_flux(), 0.0, 1.0, 0.0, 1.0, 3.0)
    xs = np.linspace(-0.5, 3.5, 4001)
    val = scalar_onesided(periodic_profile(spec, xs, 1.0), xs[1] - xs[0], periodic=False)
    assert val == pytest.approx(-1.0, rel=1e-6)
    quots = []
    for N in (64, 128, 256):
        u = np.where(cell_centers(N) < 0.5, 1.0, 0.0)
        quots.append(scalar_onesided(u, 1.0 / N))
    np.testing.assert_allclose(quots, [-64.0, -128.0, -256.0])


def test_rarefaction_only_solution_has_nonnegative_quotient():
    spec = RarefactionSpec(burgers_flux(), -0.5, 1.0, 0.0)
    from hypercl.exact import rarefaction
    xs = np.linspace(-2.0, 2.0, 801)
    for t in (0.1, 0.5, 1.0):
        assert scalar_onesided(rarefaction(spec, xs, t), xs[1] - xs[0],
                               periodic=False) >= 0.0


def test_osc_bound_basics():
    b = OscBound(np.array([0.0, 1.0, 2.0]), np.array([1.0, 3.0]))
    assert b.integral(0.0, 2.0) == pytest.approx(4.0)
    assert b.integral(0.5, 1.5) == pytest.approx(0.5 + 1.5)
    assert b(1.5) == 3.0
    np.testing.assert_allclose(b.cumulative(np.array([0.0, 1.0, 2.0])), [0.0, 1.0, 4.0])
    s = OscBound.from_slices(np.array([0.0, 1.0, 2.0]), np.array([1.0, 2.0, 0.5]))
    np.testing.assert_allclose(s.values, [2.0, 2.0])
    with pytest.raises(ValueError):
        OscBound(np.array([0.0, 0.0]), np.array([1.0]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=6),
       st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_osc_bound_integral_additive(vals, a, b, c):
    bp = np.linspace(0.0, 1.0, len(vals) + 1)
    bound = OscBound(bp, np.array(vals))
    t0, t1, t2 = sorted((a, b, c))
    assert bound.integral(t0, t2) == pytest.approx(
        bound.integral(t0, t1) + bound.integral(t1, t2), abs=1e-12)
    assert bound.integral(t0, t2) >= 0.0
