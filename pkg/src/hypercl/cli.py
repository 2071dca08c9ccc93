"""Command-line orchestration: JSON scenario configs in, JSON reports and
plot-ready CSV out.

Exit codes: 0 when every checked property holds, 1 when one fails, 2 for
invalid configs or usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from hypercl import besov, exact, fv, monitor, osc
from hypercl.catalog import (
    ElasticityParams,
    flux_from_config,
    list_systems,
    make_system,
)
from hypercl.errors import ConfigError, HyperclError, InvalidParams
from hypercl.fields import SpaceTimeField, cell_centers
from hypercl.relent import quadratic_bounds_audit
from hypercl.report import Report, emit
from hypercl.system import audit_system

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

logger = logging.getLogger("hypercl")


class _Usage(Exception):
    pass


# {{{ config helpers

def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("the config must be a JSON object")
    return cfg


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _extra_params(extra: Sequence[str]) -> dict[str, Any]:
    """Turn trailing ``--key value`` pairs into a parameter dict."""
    out: dict[str, Any] = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise _Usage(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise _Usage(f"missing value for --{key}")
        out[key] = _parse_value(val)
    return out


def _get(cfg: dict[str, Any], key: str, default: Any, kind: Callable = float) -> Any:
    if key not in cfg:
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc


def _workers(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("HYPERCL_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"HYPERCL_WORKERS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _test_function(spec: Any, x: np.ndarray) -> np.ndarray:
    """Named 1-D test profiles for the Besov commands."""
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "indicator":
        lo, hi = spec.get("interval", (0.25, 0.75))
        return ((x >= lo) & (x < hi)).astype(np.float64)
    if kind == "abs-power":
        return np.abs(2.0 * x - 1.0) ** float(spec.get("p", 0.6))
    if kind == "sin":
        return np.sin(2.0 * np.pi * int(spec.get("k", 1)) * x)
    raise ConfigError("function.kind must be 'indicator', 'abs-power' or 'sin'")


def _default_ladder(lo: int, hi: int) -> list[float]:
    return [2.0**-k for k in range(lo, hi + 1)]

# }}}


# {{{ subcommands

def cmd_systems(args, cfg, extra) -> Report | None:
    if args.action != "list":
        raise _Usage("usage: hypercl systems list")
    for name in list_systems():
        print(name)
    return None


def cmd_audit(args, cfg, extra) -> Report:
    name = args.system or cfg.get("system")
    if name is None:
        raise ConfigError("audit needs --system NAME (or 'system' in the config)")
    params = {**cfg.get("params", {}), **_extra_params(extra)}
    sysdef = make_system(name, params)
    n = _get(cfg, "n_samples", args.n_samples, int)
    core = audit_system(sysdef, n, seed=args.seed)
    quad = quadratic_bounds_audit(sysdef, n, seed=args.seed)
    return Report(name=f"audit[{sysdef.name}]", passed=core.passed and quad.passed,
                  metrics={**core.metrics, **quad.metrics}, rows=quad.rows,
                  children=[core, quad], failures=core.failures + quad.failures)


def _scenario_field(cfg: dict[str, Any]) -> tuple[monitor.Scenario, SpaceTimeField]:
    scn = monitor.build_scenario(cfg.get("scenario", {}), cfg.get("params", {}))
    T = _get(cfg, "T", scn.T)
    if not 0.0 < T <= scn.T_max:
        raise ConfigError(f"T={T:g} must lie in (0, {scn.T_max:.4g}]")
    times = np.linspace(0.0, T, _get(cfg, "n_snapshots", 16, int))
    return scn, scn.exact(times, _get(cfg, "N", 512, int))


def cmd_osc(args, cfg, extra) -> Report:
    scn, fld = _scenario_field(cfg)
    n_pairs = _get(cfg, "n_pairs", 1000, int)
    b_cfg = cfg.get("b", "fitted")
    if isinstance(b_cfg, (int, float)):
        b = osc.OscBound.constant(float(b_cfg))
    elif b_cfg == "fitted":
        b = osc.fit_osc_bound(scn.sys, fld, n_pairs, seed=args.seed)
    elif b_cfg == "velocity":
        b = monitor._velocity_bound(scn.sys, fld)
    else:
        raise ConfigError("b must be a number, 'fitted' or 'velocity'")
    if "eps_ladder" in cfg:
        rep = osc.osc_distributional(scn.sys, fld, cfg["eps_ladder"], b, n_pairs,
                                     seed=args.seed)
    else:
        rep = osc.osc_margin_pointwise(scn.sys, fld, b, n_pairs, seed=args.seed)
    rep.tolerance *= args.tol_scale
    rep.passed = rep.worst_margin >= -rep.tolerance
    out = rep.to_report(f"osc[{scn.name}]")
    out.metrics["int_b"] = b.integral(float(fld.times[0]), float(fld.times[-1]))
    out.metrics["b_provenance"] = b.provenance
    return out


def cmd_besov(args, cfg, extra) -> Report:
    N = _get(cfg, "N", 2**12, int)
    x = cell_centers(N)
    g = _test_function(cfg.get("function", "indicator"), x)
    eps = cfg.get("eps_ladder", _default_ladder(3, 7))
    return besov.mollification_rate_audit(g, _get(cfg, "alpha", 0.5), _get(cfg, "q", 2.0),
                                          eps)


_BMAPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "square": lambda w: w**2,
    "identity": lambda w: w,
    "exp": np.exp,
}


def cmd_commutator(args, cfg, extra) -> Report:
    N = _get(cfg, "N", 2**14, int)
    x = cell_centers(N)
    w = _test_function(cfg.get("function", {"kind": "abs-power", "p": 0.6}), x)
    bname = cfg.get("bmap", "square")
    if bname not in _BMAPS:
        raise ConfigError(f"bmap must be one of {sorted(_BMAPS)}")
    eps = cfg.get("eps_ladder", _default_ladder(4, 9))
    return besov.commutator_rate(_BMAPS[bname], w, _get(cfg, "alpha", 0.6),
                                 _get(cfg, "q", 4.0), eps)


def _exact_periodic_profile(cfg) -> Report:
    spec = exact.RarefactionSpec(flux_from_config(cfg.get("flux", "burgers")),
                                 cfg.get("u_L", 0.0), cfg.get("u_R", 1.0),
                                 cfg.get("x0", 0.0), cfg.get("y0", 1.0),
                                 cfg.get("y1", 3.0))
    t = _get(cfg, "t", 1.0)
    x = np.linspace(cfg.get("x_min", -1.0), cfg.get("x_max", 4.0),
                    _get(cfg, "n", 1001, int))
    u = exact.periodic_profile(spec, x, t)
    B0 = exact.lipschitz_B0(spec, t)
    rows = [{"x": xi, "u": ui} for xi, ui in zip(x, u)]
    return Report(name="exact[periodic-profile]", passed=True,
                  metrics={"t": t, "B0": B0, "critical_time": spec.critical_time,
                           "T_max": spec.T_max}, rows=rows)


def _exact_backward(cfg) -> Report:
    flux = flux_from_config(cfg.get("flux", "burgers"))
    n = _get(cfg, "n", 2001, int)
    xs = np.linspace(-1.0, 1.0, n)
    T = _get(cfg, "T", 1.0)
    td = exact.TerminalData(x=xs, u_T=xs.copy(), T=T, beta=_get(cfg, "beta", 1.0),
                            M=_get(cfg, "M", 1.0))
    rows, failures = [], []
    for t in cfg.get("times", [0.25, 0.5, 1.0]):
        grid, u = exact.backward_reconstruct(td, flux, t, n_out=n)
        dx = float(grid[1] - grid[0])
        cert = exact.holder_certificate(grid, u, flux, td.beta, td.M, t,
                                        _get(cfg, "C0", 1.0))
        B1 = exact.onesided_certificate(u, dx)
        rows.append({"t": t, "holder_seminorm": cert.seminorm, "holder_bound": cert.bound,
                     "onesided_B1": B1, "pass": cert.passed})
        if not cert.passed:
            failures.append(f"Holder certificate fails at t={t:g}")
    return Report(name="exact[backward]", passed=not failures, rows=rows,
                  metrics={"reachable": td.is_reachable(flux)}, failures=failures)


def _exact_elastic_fan(cfg) -> Report:
    p = ElasticityParams(F_range=tuple(cfg.get("F_range", (-1.0, 1.0))))
    zr = tuple(cfg.get("zeta_range", (1.1, 2.0)))
    fan = exact.elasticity_self_similar(p, zr, n=_get(cfg, "n", 1001, int),
                                        branch=_get(cfg, "branch", -1, int))
    lhs, rhs = fan.sign_identity(p)
    gap = float(np.max(np.abs(lhs - rhs)))
    rows = [{"zeta": z, "V": v, "F": f, "dV": dv}
            for z, v, f, dv in zip(fan.zeta, fan.V, fan.F, fan.dV)]
    failures = []
    if fan.residual > 1e-6:
        failures.append(f"fan residual {fan.residual:.3e} > 1e-6")
    if gap > 1e-8 * max(1.0, float(np.max(np.abs(rhs)))):
        failures.append(f"sign identity gap {gap:.3e}")
    return Report(name="exact[elastic-fan]", passed=not failures, rows=rows,
                  metrics={"residual": fan.residual, "sign_identity_gap": gap,
                           "min_dV": float(np.min(fan.dV)), "branch": fan.branch},
                  failures=failures)


def _exact_planar(cfg) -> Report:
    d = _get(cfg, "d", 2, int)
    splits = {"euler": lambda: exact.euler_split(d, _get(cfg, "gamma", 2.0)),
              "swmhd": lambda: exact.swmhd_split(d, _get(cfg, "g", 9.81)),
              "triangular": lambda: exact.triangular_split(d)}
    names = cfg.get("systems", sorted(splits))
    unknown = set(names) - set(splits)
    if unknown:
        raise ConfigError(f"planar systems must be among {sorted(splits)}")
    children = [exact.planar_condition_check(splits[nm]()) for nm in names]
    return Report(name="exact[planar]", passed=all(c.passed for c in children),
                  children=children, failures=[f for c in children for f in c.failures])


_EXACT = {"periodic-profile": _exact_periodic_profile, "backward": _exact_backward,
          "elastic-fan": _exact_elastic_fan, "planar": _exact_planar}


def cmd_exact(args, cfg, extra) -> Report:
    kind = cfg.get("kind", "periodic-profile")
    if kind not in _EXACT:
        raise ConfigError(f"kind must be one of {sorted(_EXACT)}")
    return _EXACT[kind](cfg)


def cmd_solve(args, cfg, extra) -> Report:
    init = cfg.get("initial", {"kind": "triangular-rarefaction"})
    N = _get(cfg, "N", 512, int)
    if init.get("kind") == "constant":
        sysdef = make_system(cfg.get("system", "euler"), cfg.get("params", {}))
        U0 = np.asarray(init["state"], dtype=np.float64)[:, None] * np.ones(N)
        T_default = 0.5
    else:
        scn = monitor.build_scenario(init, cfg.get("params", {}))
        sysdef = scn.sys
        U0 = scn.exact(np.array([0.0]), N).values[0]
        T_default = scn.T
    grid = fv.GridSpec(d=1, N=N, CFL=_get(cfg, "CFL", 0.45), T=_get(cfg, "T", T_default))
    manifest: dict[str, Any] = {}
    fld = fv.solve(sysdef, U0, grid, n_snapshots=_get(cfg, "n_snapshots", 16, int),
                   flux=cfg.get("flux", "rusanov"), manifest=manifest)
    budget = fv.entropy_budget(sysdef, fld, slack_factor=1e-3 * args.tol_scale)
    totals = fv.conserved_totals(sysdef, fld)
    drift = float(np.max(np.abs(totals - totals[0])))
    failures = list(budget.failures)
    if drift > 1e-12 * args.tol_scale:
        failures.append(f"conserved totals drift by {drift:.3e}")
    x = fld.coords(0)
    children = [Report(name=f"snapshot[t={t:.6g}]", passed=True,
                       rows=[{"x": xi, **{c: U[i, j] for i, c in enumerate(sysdef.components)}}
                             for j, xi in enumerate(x)])
                for t, U in zip(fld.times, fld.values)]
    return Report(name=f"solve[{sysdef.name}]", passed=not failures,
                  metrics={**budget.metrics, "conservation_drift": drift,
                           "manifest": manifest},
                  rows=budget.rows, children=children, failures=failures)


def cmd_monitor(args, cfg, extra) -> Report:
    if not cfg:
        raise ConfigError("monitor needs --config with a 'scenario' object")
    cfg = {**cfg, "seed": args.seed, "workers": _workers(args.workers)}
    cfg["tol"] = float(cfg.get("tol", 0.5)) * args.tol_scale
    return monitor.uniqueness_experiment(cfg)


COMMANDS = {"systems": cmd_systems, "audit": cmd_audit, "osc": cmd_osc,
            "besov": cmd_besov, "commutator": cmd_commutator, "exact": cmd_exact,
            "solve": cmd_solve, "monitor": cmd_monitor}

# }}}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON scenario config")
    common.add_argument("--out", metavar="DIR", help="write JSON and CSV reports here")
    common.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    common.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: $HYPERCL_WORKERS or all cores)")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply the command's tolerance by this factor")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="hypercl", description="Relative-entropy verification toolkit for "
        "hyperbolic conservation laws.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("systems", parents=[common], help="list catalog systems")
    p.add_argument("action", nargs="?", default="list", choices=["list"])
    p = sub.add_parser("audit", parents=[common],
                       help="symmetrizer, derivative, flux and quadratic-bound audits; "
                       "extra --key value pairs become system parameters")
    p.add_argument("--system", choices=list_systems())
    p.add_argument("--n-samples", type=int, default=10_000)
    for name, text in [("osc", "one-sided condition on a scenario's exact solution"),
                       ("besov", "mollification rates of a test function"),
                       ("commutator", "commutator decay rate"),
                       ("exact", "exact-solution constructions and certificates"),
                       ("solve", "finite-volume run with dissipation audit"),
                       ("monitor", "uniqueness experiment along a grid ladder")]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if extra and args.command != "audit":
        print(f"hypercl: unrecognized arguments: {' '.join(extra)}", file=sys.stderr)
        return EXIT_USAGE
    args.seed_given = args.seed is not None
    args.seed = 0 if args.seed is None else args.seed
    if args.tol_scale <= 0.0:
        print("hypercl: --tol-scale must be positive", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = _load_config(args.config)
        if args.seed_given:
            cfg["seed"] = args.seed
        else:
            args.seed = int(cfg.get("seed", 0))
        rep = COMMANDS[args.command](args, cfg, extra)
    except _Usage as exc:
        print(f"hypercl {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InvalidParams, KeyError, TypeError) as exc:
        print(f"hypercl {args.command}: invalid config: {exc}\n"
              f"  see 'hypercl {args.command} --help' and the README for the schema",
              file=sys.stderr)
        return EXIT_USAGE
    except HyperclError as exc:
        rep = Report(name=args.command, passed=False,
                     metrics={"error": type(exc).__name__}, failures=[str(exc)])

    if rep is None:
        return EXIT_PASS
    if args.out:
        emit(rep, args.out)
    print(json.dumps({"name": rep.name, "passed": rep.passed,
                      "failures": rep.failures}))
    return EXIT_PASS if rep.passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())
