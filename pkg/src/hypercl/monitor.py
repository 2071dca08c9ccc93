r"""
Grönwall monitor for the relative-entropy gap between a dissipative
numerical solution :math:`U` and a regular solution :math:`\bar U`:

.. math::

    r(\tau) = \int H(U|\bar U)(x, \tau)\,dx \le r(0)\exp\Big(\int_0^\tau b(t)\,dt\Big).

:func:`uniqueness_experiment` builds both solutions for a named scenario
over a grid ladder, obtains :math:`b` from the one-sided condition on
:math:`\bar U`, certifies the spatial Besov regularity of :math:`\bar U`
and checks the Grönwall inequality.

.. autoclass:: GronwallSeries
.. autofunction:: gronwall_series
.. autofunction:: uniqueness_experiment
"""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from hypercl.besov import besov_seminorm
from hypercl.catalog import burgers_flux, make_system
from hypercl.errors import ConfigError, GridMismatch
from hypercl.exact import (
    BumpData,
    BurgersFanShock,
    EulerSimpleWave,
    RarefactionSpec,
    TriangularExact,
    periodic_profile_closure,
)
from hypercl.fields import SpaceTimeField
from hypercl.fv import GridSpec, solve
from hypercl.osc import (
    OscBound,
    OscReport,
    euler_velocity_onesided,
    fit_osc_bound,
    osc_margin_pointwise,
)
from hypercl.relent import relative_entropy_integral
from hypercl.report import Report
from hypercl.system import SystemDef

logger = logging.getLogger(__name__)

Array = np.ndarray

R_FLOOR = -1.0e-12
GRONWALL_COLUMNS = ["N", "tau", "r", "bound"]


# {{{ Grönwall series

@dataclass
class GronwallSeries:
    """Gap ``r`` and Grönwall bound ``r(0) exp(int_0^tau b)`` per snapshot."""

    times: Array
    r: Array
    b: OscBound
    bound: Array
    tol: float
    passed: bool
    failures: list[str] = field(default_factory=list)

    @property
    def worst_ratio(self) -> float:
        """Largest ``r / bound`` (``inf`` if a positive gap meets a zero bound)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.r > 0.0, self.r / self.bound, 0.0)
        return float(np.max(ratio))

    def rows(self, N: int | None = None) -> list[dict[str, Any]]:
        head = {} if N is None else {"N": N}
        return [{**head, "tau": t, "r": r, "bound": bd}
                for t, r, bd in zip(self.times, self.r, self.bound)]


def gronwall_series(sys: SystemDef, U: SpaceTimeField, Ubar: SpaceTimeField,
                    b: OscBound, *, tol: float = 0.5) -> GronwallSeries:
    r"""Relative-entropy gap per snapshot against the Grönwall bound.

    Passes iff :math:`r(\tau) \le (1 + \mathrm{tol})\,r(0)\exp(\int_0^\tau b)`
    at every snapshot and ``r`` stays above ``-1e-12``.
    """
    if U.times.shape != Ubar.times.shape or not np.allclose(U.times, Ubar.times,
                                                            rtol=0.0, atol=1e-12):
        raise GridMismatch("U and Ubar are stored at different times")
    if U.values.shape != Ubar.values.shape:
        raise GridMismatch(f"U has shape {U.values.shape}, Ubar {Ubar.values.shape}")

    vol = U.cell_volume
    r = np.array([relative_entropy_integral(sys, u, ub, cell_volume=vol)
                  for u, ub in zip(U.values, Ubar.values)])
    bound = r[0] * np.exp(b.cumulative(U.times))
    failures = []
    if np.min(r) < R_FLOOR:
        failures.append(f"relative entropy integral {np.min(r):.3e} is negative")
    bad = np.nonzero(r > bound * (1.0 + tol))[0]
    if bad.size:
        n = int(bad[0])
        failures.append(f"r({U.times[n]:.4g}) = {r[n]:.4e} exceeds "
                        f"(1+{tol:g}) x bound {bound[n]:.4e}")
    return GronwallSeries(times=U.times, r=r, b=b, bound=bound, tol=tol,
                          passed=not failures, failures=failures)

# }}}


# {{{ scenarios

@dataclass(frozen=True)
class Scenario:
    """An exact solution ``exact(times, N)`` of ``sys`` on the unit torus
    with its default horizon and the default way of obtaining ``b``."""

    name: str
    sys: SystemDef
    exact: Callable[[Array, int], SpaceTimeField]
    T: float
    T_max: float
    b_mode: str = "fitted"


def _triangular_scenario(kw: dict[str, Any], sys_params: dict[str, Any]) -> Scenario:
    sys = make_system("triangular", sys_params)
    tp = sys.params["triangular"]
    spec = RarefactionSpec(burgers_flux(), kw.pop("u_L", 0.0), kw.pop("u_R", 0.5),
                           kw.pop("x0", 0.1), kw.pop("y0", 0.35), kw.pop("y1", 0.85))
    t0 = float(kw.pop("t0", 0.25))
    v0 = BumpData(**kw.pop("v0", {}))
    exact = TriangularExact(tp, periodic_profile_closure(spec, t0), v0)
    return Scenario("triangular-rarefaction", sys, exact.sample,
                    T=0.5, T_max=spec.T_max - t0)


def _euler_scenario(kw: dict[str, Any], sys_params: dict[str, Any]) -> Scenario:
    gamma = float(sys_params.get("gamma", kw.get("gamma", 2.0)))
    sys = make_system("euler", {**sys_params, "gamma": gamma})
    if sys.d != 1:
        raise ConfigError("the Euler simple wave is one-dimensional")
    kw.pop("gamma", None)
    wave = EulerSimpleWave(gamma=gamma, **kw)
    kw.clear()
    return Scenario("euler-simple-wave", sys, wave.sample, T=0.4, T_max=wave.T_max,
                    b_mode="velocity")


def _shock_scenario(kw: dict[str, Any], sys_params: dict[str, Any]) -> Scenario:
    sys = make_system("scalar", {"u_min": -0.5, "u_max": 1.5, **sys_params})
    sol = BurgersFanShock(**kw)
    kw.clear()
    return Scenario("burgers-shock", sys, sol.sample, T=0.4, T_max=sol.T_max)


SCENARIOS: dict[str, Callable[[dict[str, Any], dict[str, Any]], Scenario]] = {
    "triangular-rarefaction": _triangular_scenario,
    "euler-simple-wave": _euler_scenario,
    "burgers-shock": _shock_scenario,
}


def build_scenario(spec: Mapping[str, Any], sys_params: Mapping[str, Any] | None = None
                   ) -> Scenario:
    kw = dict(spec)
    kind = kw.pop("kind", None)
    if kind not in SCENARIOS:
        raise ConfigError(f"scenario.kind must be one of {sorted(SCENARIOS)}, got {kind!r}")
    try:
        scn = SCENARIOS[kind](kw, dict(sys_params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for scenario {kind!r}: {exc}") from exc
    if kw:
        raise ConfigError(f"unknown parameters for scenario {kind!r}: {sorted(kw)}")
    return scn

# }}}


# {{{ experiment

@dataclass(frozen=True)
class ExperimentConfig:
    scenario: dict[str, Any]
    params: dict[str, Any] = field(default_factory=dict)
    ladder: tuple[int, ...] = (256, 512, 1024, 2048)
    T: float | None = None
    n_snapshots: int = 16
    CFL: float = 0.45
    delta: float = 1.0e-2
    b: str | float = "auto"
    tol: float = 0.5
    ladder_ratio: float = 0.25
    n_pairs: int = 1000
    seed: int = 0
    besov_alpha: float = 0.75
    besov_q: float = 2.0
    workers: int | None = None

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any]) -> ExperimentConfig:
        cfg = dict(cfg)
        if "scenario" not in cfg or not isinstance(cfg["scenario"], Mapping):
            raise ConfigError("config needs a 'scenario' object with a 'kind'")
        cfg.pop("system", None)
        besov = dict(cfg.pop("besov", {}))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(cfg) - known
        unknown |= {f"besov.{k}" for k in set(besov) - {"alpha", "q"}}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "ladder" in cfg:
            cfg["ladder"] = tuple(int(n) for n in cfg["ladder"])
        if "besov_alpha" not in cfg and "alpha" in besov:
            cfg["besov_alpha"] = float(besov["alpha"])
        if "besov_q" not in cfg and "q" in besov:
            cfg["besov_q"] = float(besov["q"])
        out = cls(**cfg)
        if len(out.ladder) < 2 or any(n < 8 for n in out.ladder) \
                or list(out.ladder) != sorted(set(out.ladder)):
            raise ConfigError("ladder needs at least two increasing grid sizes >= 8")
        if out.n_snapshots < 2:
            raise ConfigError("n_snapshots must be at least 2")
        if out.delta < 0.0 or out.tol < 0.0:
            raise ConfigError("delta and tol must be nonnegative")
        if not (isinstance(out.b, (int, float)) or out.b in ("auto", "fitted", "velocity")):
            raise ConfigError("b must be a number, 'auto', 'fitted' or 'velocity'")
        return out


def _velocity_bound(sys: SystemDef, fld: SpaceTimeField) -> OscBound:
    gamma = float(sys.params["gamma"])
    idx = slice(1, 1 + sys.d)
    vel = SpaceTimeField(times=fld.times, values=fld.values[:, idx], lower=fld.lower,
                         length=fld.length, periodic=fld.periodic,
                         dU=None if fld.dU is None else fld.dU[:, :, idx])
    return euler_velocity_onesided(vel, gamma=gamma).bound


def _obtain_bound(scn: Scenario, cfg: ExperimentConfig, fld: SpaceTimeField) -> OscBound:
    mode = scn.b_mode if cfg.b == "auto" else cfg.b
    if isinstance(mode, (int, float)):
        return OscBound.constant(float(mode))
    if mode == "velocity":
        if "pressure" not in scn.sys.params:
            raise ConfigError("b='velocity' needs an Euler scenario")
        return _velocity_bound(scn.sys, fld)
    return fit_osc_bound(scn.sys, fld, cfg.n_pairs, seed=cfg.seed)


def perturbation(sys: SystemDef, N: int, delta: float) -> Array:
    r"""Smooth perturbation :math:`\delta\sqrt2\sin(2\pi x)\,e` with ``e``
    the normalized all-ones vector; its :math:`L^2` norm is ``delta``."""
    from hypercl.fields import cell_centers

    x = cell_centers(N)
    e = np.ones(sys.m) / np.sqrt(sys.m)
    return delta * np.sqrt(2.0) * e[:, None] * np.sin(2.0 * np.pi * x)[None]


@dataclass
class _Rung:
    N: int
    Ubar: SpaceTimeField
    b: OscBound
    osc: OscReport
    besov: float
    series: dict[float, GronwallSeries] = field(default_factory=dict)


def _osc_rung(scn: Scenario, cfg: ExperimentConfig, times: Array, N: int) -> _Rung:
    Ubar = scn.exact(times, N)
    b = _obtain_bound(scn, cfg, Ubar)
    rep = osc_margin_pointwise(scn.sys, Ubar, b, cfg.n_pairs, seed=cfg.seed)
    later = Ubar.values[Ubar.times > 0.0]
    besov = max(besov_seminorm(U, cfg.besov_alpha, cfg.besov_q) for U in later)
    return _Rung(N=N, Ubar=Ubar, b=b, osc=rep, besov=float(besov))


def _gronwall_rung(scn: Scenario, cfg: ExperimentConfig, rung: _Rung,
                   deltas: list[float]) -> None:
    grid = GridSpec(d=1, N=rung.N, CFL=cfg.CFL, T=float(rung.Ubar.times[-1]))
    for delta in deltas:
        U0 = rung.Ubar.values[0] + perturbation(scn.sys, rung.N, delta)
        U = solve(scn.sys, U0, grid, times=rung.Ubar.times)
        rung.series[delta] = gronwall_series(scn.sys, U, rung.Ubar, rung.b, tol=cfg.tol)
        logger.info("%s N=%d delta=%g: r(T)=%.4e", scn.name, rung.N, delta,
                    rung.series[delta].r[-1])


def _log_slope(N: Array, y: Array) -> float:
    y = np.asarray(y, dtype=np.float64)
    if np.all(y <= 0.0):
        return 0.0
    return float(np.polyfit(np.log(N), np.log(np.maximum(y, 1e-300)), 1)[0])


def _default_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("HYPERCL_WORKERS", "0") or 0) or (os.cpu_count() or 1)
    return max(1, int(workers))


OSC_DIVERGENCE_SLOPE = 0.5
BESOV_GROWTH_SLOPE = 0.1
LADDER_SLACK = 0.05


def uniqueness_experiment(config: Mapping[str, Any] | ExperimentConfig) -> Report:
    """Run the Grönwall monitor along a grid ladder.

    Stages, each able to reject the scenario: the one-sided condition on
    the exact solution (a bound ``b`` must exist and stay bounded under
    refinement), spatial Besov certificates for the exact solution, and the
    Grönwall comparison with finite-volume solutions from the same data
    (``delta = 0``) and from perturbed data (``delta > 0``).
    """
    cfg = config if isinstance(config, ExperimentConfig) \
        else ExperimentConfig.from_dict(config)
    scn = build_scenario(cfg.scenario, cfg.params)
    T = scn.T if cfg.T is None else float(cfg.T)
    if not 0.0 < T <= scn.T_max:
        raise ConfigError(f"T={T:g} must lie in (0, {scn.T_max:.4g}] for {scn.name}")
    times = np.linspace(0.0, T, cfg.n_snapshots)
    ladder = np.array(cfg.ladder)
    workers = min(_default_workers(cfg.workers), len(ladder))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rungs = list(pool.map(lambda N: _osc_rung(scn, cfg, times, int(N)), ladder))

    failures: list[str] = []
    metrics: dict[str, Any] = {"scenario": scn.name, "system": scn.sys.name,
                               "ladder": ladder.tolist(), "T": T, "delta": cfg.delta,
                               "tol": cfg.tol}

    # one-sided condition
    int_b = np.array([r.b.integral(0.0, T) for r in rungs])
    osc_slope = _log_slope(ladder, int_b)
    metrics.update(int_b=int_b.tolist(), int_b_slope=osc_slope,
                   osc_worst_margin=min(r.osc.worst_margin for r in rungs),
                   b_provenance=rungs[-1].b.provenance)
    for r in rungs:
        if not r.osc.passed:
            failures.append(f"osc: margin {r.osc.worst_margin:.3e} at N={r.N}")
    if osc_slope > OSC_DIVERGENCE_SLOPE:
        failures.append(f"osc: int b grows like N^{osc_slope:.2f} under refinement")
    if failures:
        metrics["rejected_stage"] = "osc"
        return _finish(scn, rungs, metrics, failures)

    # Besov certificates, space only
    seminorms = np.array([r.besov for r in rungs])
    besov_slope = _log_slope(ladder, seminorms)
    metrics.update(besov_alpha=cfg.besov_alpha, besov_q=cfg.besov_q,
                   besov_seminorm=seminorms.tolist(), besov_slope=besov_slope)
    if besov_slope > BESOV_GROWTH_SLOPE:
        failures.append(f"besov: seminorm grows like N^{besov_slope:.2f}")
        metrics["rejected_stage"] = "besov"
        return _finish(scn, rungs, metrics, failures)

    # Grönwall stage
    deltas = [0.0] + ([cfg.delta] if cfg.delta > 0.0 else [])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda r: _gronwall_rung(scn, cfg, r, deltas), rungs))

    rT = np.array([r.series[0.0].r[-1] for r in rungs])
    metrics.update(r_T=rT.tolist(), r_T_ratio=float(rT[-1] / rT[0]) if rT[0] > 0 else 0.0,
                   r_T_slope=_log_slope(ladder, rT))
    if not np.all(np.diff(rT) < 0.0):
        failures.append("gronwall: r(T) does not strictly decrease along the ladder")
    if rT[-1] > cfg.ladder_ratio * rT[0]:
        failures.append(f"gronwall: r(T) ratio {rT[-1] / rT[0]:.3f} "
                        f"exceeds {cfg.ladder_ratio:g}")
    R = np.stack([r.series[0.0].r for r in rungs])
    up = np.any(R[1:] > R[:-1] + 1e-15, axis=1)
    up_big = np.any(R[1:] > R[:-1] * (1.0 + LADDER_SLACK) + 1e-15, axis=1)
    metrics.update(ladder_nonmonotone_rungs=int(np.sum(up)))
    if np.any(up_big) or np.sum(up) > 1:
        failures.append("gronwall: r(tau) is not nonincreasing across the ladder")

    if cfg.delta > 0.0:
        ratios = []
        for r in rungs:
            s = r.series[cfg.delta]
            growth = float(np.max(s.r) / s.r[0])
            allowed = float(np.exp(r.b.integral(0.0, T)) * (1.0 + cfg.tol))
            ratios.append(growth / allowed)
            if not s.passed:
                failures.extend(f"gronwall N={r.N}: {f}" for f in s.failures)
        metrics.update(perturbed_r0=[r.series[cfg.delta].r[0] for r in rungs],
                       perturbed_worst_ratio=max(ratios))
    if failures:
        metrics["rejected_stage"] = "gronwall"
    return _finish(scn, rungs, metrics, failures)


def _finish(scn: Scenario, rungs: list[_Rung], metrics: dict[str, Any],
            failures: list[str]) -> Report:
    rows, children = [], []
    for r in rungs:
        child_rows = []
        for delta, s in sorted(r.series.items()):
            child_rows += [{"delta": delta, **row} for row in s.rows(r.N)]
        rows += child_rows
        children.append(Report(
            name=f"rung[N={r.N}]",
            passed=r.osc.passed and all(s.passed for d, s in r.series.items() if d > 0),
            metrics={"N": r.N, "int_b": r.b.integral(0.0, float(r.Ubar.times[-1])),
                     "osc_worst_margin": r.osc.worst_margin, "besov_seminorm": r.besov,
                     **{f"r_T[delta={d:g}]": s.r[-1] for d, s in r.series.items()}},
            rows=child_rows))
    metrics.setdefault("rejected_stage", None)
    return Report(name=f"uniqueness[{scn.name}]", passed=not failures, metrics=metrics,
                  rows=rows, children=children, failures=failures)

# }}}
