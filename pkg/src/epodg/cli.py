"""Command-line entry points: `run` (one benchmark scenario with CSV output),
`converge` (refinement sweep with error/order table), and `properties` (the
seeded randomized invariant suites).

All floating-point output uses 17 significant digits, so repeated runs with
the same configuration and seed are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 invariant violation,
4 numerical failure (NaN detected).
"""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import properties
from .errors import (ConfigError, InvariantViolation, NumericalFailure)
from .limiter import CosConfig, LimiterToggles
from .physics import euler_scaled_entropy_pair
from .scenarios import (build_problem, error_norms, exact_smooth_solution,
                        global_entropy, observed_orders, scenario_catalog,
                        scenario_names)
from .timestepping import IntegratorConfig, simulate

ENV_OUTDIR = "EPODG_OUTDIR"
_FMT = "{:.17g}"


@dataclass
class RunConfig:
    scenario: str
    cells: int = None
    order: int = 2
    integrator: str = None
    cfl: float = None
    limiter_p: bool = True
    limiter_e: bool = True
    limiter_o: bool = True
    entropy: tuple = ("physical",)
    cos_c_k: float = 1.0
    cos_eps_floor: float = 1e-12
    cos_delta: float = 0.1
    cos_mode: str = "local"
    cos_distance: str = "frozen-hessian"
    gamma: float = None
    eps: float = 1e-13
    alpha_factor: float = 1.0
    outdir: str = None
    seed: int = 0

    def validate(self):
        if self.order not in (1, 2, 3):
            raise ConfigError(f"order must be 1, 2, or 3 (got {self.order})")
        if self.cells is not None and self.cells < 4:
            raise ConfigError(f"cells must be at least 4 (got {self.cells})")
        if self.integrator is not None and self.integrator not in (
                "forward-euler", "ssprk33", "ssp-ms3"):
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.cfl is not None and not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        for name in self.entropy:
            if name not in ("physical", "physical-scaled"):
                raise ConfigError(f"unknown entropy pair {name!r}")


_KEYMAP = {
    "scenario": ("scenario", str),
    "cells": ("cells", int),
    "order": ("order", int),
    "integrator": ("integrator", str),
    "cfl": ("cfl", float),
    "limiter.p": ("limiter_p", None),
    "limiter.e": ("limiter_e", None),
    "limiter.o": ("limiter_o", None),
    "entropy": ("entropy", None),
    "cos.c_k": ("cos_c_k", float),
    "cos.eps_floor": ("cos_eps_floor", float),
    "cos.delta": ("cos_delta", float),
    "cos.mode": ("cos_mode", str),
    "cos.distance": ("cos_distance", str),
    "gamma": ("gamma", float),
    "eps": ("eps", float),
    "alpha_factor": ("alpha_factor", float),
    "outdir": ("outdir", str),
    "seed": ("seed", int),
}


def _parse_bool(raw, key, lineno):
    lowered = raw.strip().lower()
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"line {lineno}: {key} expects on/off, got {raw!r}")


def parse_config(path, base):
    """Merge a flat key=value file into `base`; returns (config, file_values).

    Unknown keys and malformed lines are rejected with their line number.
    """
    file_values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _KEYMAP:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            attr, cast = _KEYMAP[key]
            try:
                if attr.startswith("limiter_"):
                    value = _parse_bool(raw, key, lineno)
                elif attr == "entropy":
                    value = tuple(s.strip() for s in raw.split(",") if s.strip())
                else:
                    value = cast(raw)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: cannot parse value {raw!r} for {key}") from None
            file_values[attr] = value
            setattr(base, attr, value)
    return base, file_values


def _resolve(config):
    """Fill scenario-dependent defaults and build the solver objects."""
    config.validate()
    scenario = scenario_catalog(config.scenario)
    cells = config.cells if config.cells is not None else scenario.default_cells
    cfl = config.cfl if config.cfl is not None else scenario.default_cfl_fraction
    scheme = config.integrator if config.integrator is not None \
        else scenario.default_scheme
    params, model, pair, aset, rule, mesh, op, nodal = build_problem(
        scenario, cells=cells, gamma=config.gamma, eps=config.eps,
        k=config.order)
    pairs = []
    for name in config.entropy:
        if name == "physical":
            pairs.append(pair)
        else:
            pairs.append(euler_scaled_entropy_pair(params))
    integ = IntegratorConfig(
        scheme=scheme, cfl_fraction=cfl,
        toggles=LimiterToggles(config.limiter_p, config.limiter_e,
                               config.limiter_o),
        cos=CosConfig(c_k=config.cos_c_k, eps_floor=config.cos_eps_floor,
                      delta=config.cos_delta, mode=config.cos_mode,
                      distance=config.cos_distance),
        alpha_factor=config.alpha_factor)
    return scenario, params, pairs, aset, rule, mesh, op, nodal, integ


def _default_outdir(config):
    if config.outdir:
        return config.outdir
    base = os.environ.get(ENV_OUTDIR, "runs")
    return os.path.join(base, config.scenario)


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_FMT.format(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_meta(path, config, resolved, overrides, flag_overrides, alphas,
                extra):
    lines = []
    for key, (attr, _) in _KEYMAP.items():
        value = resolved.get(attr, getattr(config, attr))
        if isinstance(value, tuple):
            value = ",".join(value)
        elif isinstance(value, bool):
            value = "on" if value else "off"
        elif isinstance(value, float):
            value = _FMT.format(value)
        lines.append(f"{key}={value}")
    for attr, (file_val, flag_val) in flag_overrides.items():
        lines.append(f"override.{attr}=file:{file_val},flag:{flag_val}")
    for key, value in extra.items():
        lines.append(f"{key}={value}")
    lines.append("alpha_history=" + ",".join(_FMT.format(a) for a in alphas))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run(config, flag_overrides=None):
    """Execute one scenario and write the output bundle; returns the outdir."""
    scenario, params, pairs, aset, rule, mesh, op, nodal, integ = \
        _resolve(config)
    outdir = _default_outdir(config)
    os.makedirs(outdir, exist_ok=True)
    e0 = global_entropy(nodal, rule, pairs[0], mesh.dx)
    result = simulate(op, pairs, aset, integ, nodal, 0.0, scenario.t_final)

    x = mesh.node_positions(rule).reshape(-1)
    U = result.nodal.reshape(-1, 3)
    rho = U[:, 0]
    u = U[:, 1] / rho
    p = (params.gamma - 1.0) * (U[:, 2] - 0.5 * U[:, 1] ** 2 / rho)
    _write_csv(os.path.join(outdir, "solution.csv"), "x,rho,u,p",
               zip(x.tolist(), rho.tolist(), u.tolist(), p.tolist()))
    _write_csv(os.path.join(outdir, "entropy.csv"), "t,E_eta",
               [(0.0, e0)] + [(r.t, r.entropy) for r in result.records])
    _write_csv(os.path.join(outdir, "radii.csv"),
               "t,theta_p_min,theta_pe_min,theta_o_min,theta_epo_min",
               [(r.t, r.theta_p_min, r.theta_pe_min, r.theta_o_min,
                 r.theta_epo_min) for r in result.records])
    resolved = {
        "cells": mesh.n_cells,
        "integrator": integ.scheme,
        "cfl": integ.cfl_fraction,
        "gamma": params.gamma,
        "outdir": outdir,
    }
    _write_meta(os.path.join(outdir, "run.meta"), config, resolved,
                {}, flag_overrides or {}, result.alphas,
                {"steps": result.steps, "restarts": result.restarts,
                 "t_final": _FMT.format(result.t)})
    return outdir


def _converge_worker(args):
    """One refinement level of the accuracy sweep (runs in a worker process)."""
    config_dict, cells = args
    config = RunConfig(**config_dict)
    config.cells = cells
    scenario, params, pairs, aset, rule, mesh, op, nodal, integ = \
        _resolve(config)
    result = simulate(op, pairs, aset, integ, nodal, 0.0, scenario.t_final,
                      collect_records=False)

    def exact(x, t):
        from .physics import euler_primitive_to_conservative
        rho, u, p = exact_smooth_solution(x, t)
        return euler_primitive_to_conservative(rho, u, p, params)

    L1, L2, Linf = error_norms(result.nodal,
                               lambda x, t: exact(x, t)[..., 0],
                               rule, mesh, result.t)
    return cells, L1, L2, Linf


def converge(config, cell_list, flag_overrides=None, parallel=True):
    """Refinement sweep; writes convergence.csv and returns its rows."""
    scenario = scenario_catalog(config.scenario)
    if not scenario.has_exact:
        raise ConfigError(
            f"scenario {config.scenario!r} has no exact solution for converge")
    outdir = _default_outdir(config)
    os.makedirs(outdir, exist_ok=True)
    config_dict = {k: getattr(config, k) for k in RunConfig.__dataclass_fields__}
    jobs = [(dict(config_dict), int(n)) for n in cell_list]
    workers = min(os.cpu_count() or 1, len(jobs))
    if parallel and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_converge_worker, jobs))
    else:
        raw = [_converge_worker(job) for job in jobs]
    raw.sort(key=lambda r: r[0])
    Ns = [r[0] for r in raw]
    L1s = [r[1] for r in raw]
    L2s = [r[2] for r in raw]
    Linfs = [r[3] for r in raw]
    o1 = observed_orders(L1s, Ns)
    o2 = observed_orders(L2s, Ns)
    oi = observed_orders(Linfs, Ns)

    def fmt_order(v):
        return "NA" if not np.isfinite(v) else _FMT.format(v)

    path = os.path.join(outdir, "convergence.csv")
    with open(path, "w") as fh:
        fh.write("N,L1,order1,L2,order2,Linf,orderinf\n")
        for i, n in enumerate(Ns):
            fh.write(",".join([str(n), _FMT.format(L1s[i]), fmt_order(o1[i]),
                               _FMT.format(L2s[i]), fmt_order(o2[i]),
                               _FMT.format(Linfs[i]), fmt_order(oi[i])]) + "\n")
    return list(zip(Ns, L1s, o1, L2s, o2, Linfs, oi)), path


def run_properties(seed=0, fast=False):
    results = properties.run_all(seed=seed, fast=fast)
    failed = False
    for name, trials, passed, message in results:
        if passed:
            print(f"PASS {name} ({trials} trials)")
        else:
            failed = True
            print(f"FAIL {name}: {message}")
    return not failed


def _add_common_flags(sub):
    sub.add_argument("--config", help="flat key=value configuration file")
    sub.add_argument("--cells", type=int)
    sub.add_argument("--order", type=int)
    sub.add_argument("--integrator",
                     choices=("forward-euler", "ssprk33", "ssp-ms3"))
    sub.add_argument("--cfl", type=float)
    sub.add_argument("--limiter",
                     choices=("none", "p", "e", "o", "pe", "po", "eo", "epo"),
                     help="which scaling modules are active")
    sub.add_argument("--entropy", help="comma list: physical,physical-scaled")
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--eps", type=float)
    sub.add_argument("--alpha-factor", type=float, dest="alpha_factor")
    sub.add_argument("--cos-mode", choices=("global", "local", "off"),
                     dest="cos_mode")
    sub.add_argument("--cos-delta", type=float, dest="cos_delta")
    sub.add_argument("--cos-ck", type=float, dest="cos_c_k")
    sub.add_argument("--cos-eps-floor", type=float, dest="cos_eps_floor")
    sub.add_argument("--cos-distance", choices=("jensen", "frozen-hessian"),
                     dest="cos_distance")
    sub.add_argument("--outdir")
    sub.add_argument("--seed", type=int)


def _apply_flags(config, args, file_values):
    """Command-line flags win over file values; conflicts are recorded."""
    overrides = {}
    flag_attrs = ["cells", "order", "integrator", "cfl", "entropy", "gamma",
                  "eps", "alpha_factor", "cos_mode", "cos_delta", "cos_c_k",
                  "cos_eps_floor", "cos_distance", "outdir", "seed"]
    for attr in flag_attrs:
        value = getattr(args, attr, None)
        if value is None:
            continue
        if attr == "entropy":
            value = tuple(s.strip() for s in value.split(",") if s.strip())
        if attr in file_values and file_values[attr] != value:
            overrides[attr] = (file_values[attr], value)
        setattr(config, attr, value)
    if getattr(args, "limiter", None) is not None:
        letters = args.limiter
        new = (False, False, False) if letters == "none" else \
            ("p" in letters, "e" in letters, "o" in letters)
        for attr, value in zip(("limiter_p", "limiter_e", "limiter_o"), new):
            if attr in file_values and file_values[attr] != value:
                overrides[attr] = (file_values[attr], value)
            setattr(config, attr, value)
    return overrides


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="epodg",
        description="High-order DG solver for 1D conservation laws with a "
                    "positivity/entropy/oscillation scaling limiter")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run one benchmark scenario")
    p_run.add_argument("scenario", choices=scenario_names())
    _add_common_flags(p_run)

    p_conv = subs.add_parser("converge", help="refinement sweep with orders")
    p_conv.add_argument("scenario", choices=scenario_names())
    p_conv.add_argument("--cells-list", default="16,32,64,128,256",
                        help="comma list of cell counts")
    p_conv.add_argument("--serial", action="store_true",
                        help="disable the per-level process pool")
    _add_common_flags(p_conv)

    p_prop = subs.add_parser("properties",
                             help="run the randomized invariant suites")
    p_prop.add_argument("--seed", type=int, default=0)
    p_prop.add_argument("--fast", action="store_true",
                        help="reduce trial counts for a quick pass")

    args = parser.parse_args(argv)
    try:
        if args.command == "properties":
            ok = run_properties(seed=args.seed, fast=args.fast)
            return 0 if ok else 3
        config = RunConfig(scenario=args.scenario)
        file_values = {}
        if args.config:
            config, file_values = parse_config(args.config, config)
            config.scenario = args.scenario
        overrides = _apply_flags(config, args, file_values)
        if args.command == "run":
            outdir = run(config, flag_overrides=overrides)
            print(f"wrote {outdir}/solution.csv entropy.csv radii.csv run.meta")
            return 0
        cells = [int(s) for s in args.cells_list.split(",") if s.strip()]
        rows, path = converge(config, cells, flag_overrides=overrides,
                              parallel=not args.serial)
        print(f"wrote {path}")
        for row in rows:
            print("  N=%d L1=%.3e order=%s" % (
                row[0], row[1],
                "NA" if not np.isfinite(row[2]) else f"{row[2]:.2f}"))
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3
    except (NumericalFailure, ValueError) as exc:
        # off-domain evaluations in uncertified runs surface as ValueError
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
