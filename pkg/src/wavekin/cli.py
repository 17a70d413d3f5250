"""Command line entry point.

Subcommands:

    run      time-step a configured system, writing snapshots and a
             conservation series
    bundles  build the bundle decomposition only and write its table
    audit    run consistency checks on the assembled operator
    preset   print a config file for a named preset

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures (non-finite or negative fields, non-convergent solves).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import HAVE_COMPILED
from .config import RunConfig, config_hash, config_text, desk_scale, parse_config
from .diagnostics import relative_error, totals
from .errors import ConfigurationError, NumericalError, WavekinError
from .io import SeriesWriter, read_config_file, write_bundle_table, write_snapshot
from .scenario import build_scenario, initial_state
from .solver import advance


def _log(msg: str) -> None:
    print(msg, flush=True)


def _load_config(args) -> RunConfig:
    if args.config is None:
        return RunConfig()
    return parse_config(read_config_file(args.config))


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    scenario = build_scenario(cfg)
    _log(f"scenario built in {time.perf_counter() - t0:.2f} s "
         f"(compiled kernels: {'yes' if HAVE_COMPILED else 'no'})")
    stats = scenario.operator.stats()
    _log(f"operator: {stats['bundles']} bundles, {stats['nonzeros']} stored entries, "
         f"fill {stats['fill']:.3e}")

    cfg_hash = config_hash(cfg)
    (out / "config.txt").write_text(config_text(cfg))
    write_bundle_table(out / "bundles.csv", scenario.bundles)

    state = initial_state(scenario)
    w = scenario.weights
    ref = totals(state.f, state.n, w)
    series = SeriesWriter(out / "series.csv")
    series.append(state.t, ref.mass, ref.momentum_z, ref.energy, 0.0, 0.0, 0.0)
    write_snapshot(out, state, scenario, cfg_hash)

    cadence = max(1, cfg.cadence)

    def on_step(state, record):
        if state.step % cadence != 0 and state.t < cfg.t_max:
            return
        cur = totals(state.f, state.n, w)
        em = relative_error(cur.mass, ref.mass)
        ep = relative_error(cur.momentum_z, ref.momentum_z)
        ee = relative_error(cur.energy, ref.energy)
        series.append(state.t, cur.mass, cur.momentum_z, cur.energy, em, ep, ee)
        _log(f"step {state.step:7d}  t {state.t:.6e}  dt {record.dt:.3e}  "
             f"bound {record.active_bound}  e_rel mass {em:.2e} mom {ep:.2e} "
             f"energy {ee:.2e}")
        write_snapshot(out, state, scenario, cfg_hash)

    if cfg.t_max > 0.0:
        final = advance(
            state,
            scenario.operator,
            cfg.scheme,
            cfg.t_max,
            delta=cfg.delta,
            safety=cfg.safety,
            max_steps=cfg.max_steps,
            on_step=on_step,
        )
    else:
        final = state
    write_snapshot(out, final, scenario, cfg_hash)

    if args.audit:
        rc = _run_audit(scenario, final)
        if rc != 0:
            return rc
    _log(f"done at t = {final.t:.6e} after {final.step} steps")
    return 0


def _cmd_bundles(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenario = build_scenario(cfg)
    path = write_bundle_table(out / "bundles.csv", scenario.bundles)
    if scenario.excluded_bundles:
        write_bundle_table(out / "bundles_excluded.csv", scenario.excluded_bundles)
    total = sum(b.measure for b in scenario.bundles)
    _log(f"{len(scenario.bundles)} bundles retained, "
         f"{len(scenario.excluded_bundles)} touching the wavenumber boundary")
    _log(f"total retained measure {total:.6e}")
    _log(f"table written to {path}")
    return 0


def _run_audit(scenario, state=None) -> int:
    from .diagnostics import measure_partition_audit, min_eigenvalue_ratio

    ok = True
    all_bundles = list(scenario.bundles) + list(scenario.excluded_bundles)
    worst = 0.0
    retained = excluded = 0.0
    for cell in range(scenario.n_phz_cells):
        audit = measure_partition_audit(
            scenario.hamiltonians[cell],
            scenario.stratifications[cell],
            [b for b in all_bundles if b.phz_cell == cell],
            scenario.phz_area,
        )
        worst = max(worst, audit["relative_defect"])
        retained += audit["retained"]
        excluded += audit["excluded"]
    _log(f"audit: worst per-cell measure partition defect {worst:.3e} "
         f"(retained {retained:.6e} excluded {excluded:.6e})")
    if worst > 1e-10:
        _log("audit: FAIL measure partition")
        ok = False

    if state is None:
        state = initial_state(scenario)
    dfield = scenario.operator.diffusion_field(state.n)
    ratio = min_eigenvalue_ratio(dfield)
    _log(f"audit: diffusion tensor min eigenvalue ratio {ratio:.3e}")
    if ratio < -1e-12:
        _log("audit: FAIL diffusion tensor not positive semidefinite")
        ok = False

    bad = ~np.isfinite(state.f)
    if bad.any():
        _log("audit: FAIL non-finite values in the electron field")
        ok = False
    if not ok:
        return 3
    _log("audit: all checks passed")
    return 0


def _cmd_audit(args) -> int:
    cfg = _load_config(args)
    scenario = build_scenario(cfg)
    return _run_audit(scenario)


_PRESETS = {
    "default": RunConfig,
    "desk": desk_scale,
}


def _cmd_preset(args) -> int:
    if args.name not in _PRESETS:
        raise ConfigurationError(
            f"unknown preset '{args.name}' (choices: {', '.join(sorted(_PRESETS))})"
        )
    sys.stdout.write(config_text(_PRESETS[args.name]()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavekin",
        description="Bundle-projected electron and wave kinetics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="time-step a configured system")
    p_run.add_argument("--config", metavar="PATH", default=None,
                       help="config file (defaults used when omitted)")
    p_run.add_argument("--out", metavar="DIR", default="out",
                       help="output directory (default: out)")
    p_run.add_argument("--audit", action="store_true",
                       help="run consistency checks after the run")
    p_run.set_defaults(func=_cmd_run)

    p_b = sub.add_parser("bundles", help="build the bundle decomposition only")
    p_b.add_argument("--config", metavar="PATH", default=None)
    p_b.add_argument("--out", metavar="DIR", default="out")
    p_b.set_defaults(func=_cmd_bundles)

    p_a = sub.add_parser("audit", help="check the assembled operator")
    p_a.add_argument("--config", metavar="PATH", default=None)
    p_a.set_defaults(func=_cmd_audit)

    p_p = sub.add_parser("preset", help="print a named preset config")
    p_p.add_argument("name", help="preset name (default, desk)")
    p_p.set_defaults(func=_cmd_preset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except WavekinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
