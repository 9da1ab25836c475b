"""Command line interface: ``jmgtlab simulate | sweep-tau | verify``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, NumericalFailure
from .experiment import (PRESETS, SweepConfig, default_output_dir, load_config,
                         run_simulation, sweep_tau, write_simulation, write_sweep)
from .verify import SUITES, run_suites

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

log = logging.getLogger("jmgtlab")


def _overrides(pairs):
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _config_args(p):
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameter set")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--out", type=Path, default=None,
                   help="output directory (default: $JMGTLAB_OUTPUT_DIR or ./output)")


def _load(args):
    if args.config is None and args.preset is None:
        raise ConfigError("one of --config or --preset is required")
    return load_config(args.config, args.preset, _overrides(args.set))


def cmd_simulate(args):
    cfg = _load(args)
    res = run_simulation(cfg)
    out = args.out or default_output_dir()
    files = write_simulation(res, out)
    x, p = res.peak_pressure()
    traj = res.trajectory
    print(f"model={cfg.model.value} tau={cfg.tau:.6g} s steps={cfg.n_steps}")
    print(f"peak pressure at T: {p / 1e6:.4f} MPa at x={x:.5f} m")
    print(f"min alpha {res.degeneracy.global_min_alpha:.6f}  "
          f"min gamma {res.degeneracy.global_min_gamma:.6g}")
    print(f"fixed-point iterations: mean {traj.iterations.mean():.2f} max {traj.iterations.max()}")
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args)
    if not cfg.taus:
        raise ConfigError("nothing to sweep: config has no taus")
    rows = sweep_tau(SweepConfig(cfg, tuple(cfg.taus)), jobs=args.jobs)
    out = args.out or default_output_dir()
    path = write_sweep(rows, out)
    for r in rows:
        print(f"tau={r.tau:.4e}  error_ch1={r.errors.error_ch1:.6e}  "
              f"error_xbarw={r.errors.error_xbarw:.6e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args):
    names = tuple(SUITES) if args.suite == "all" else (args.suite,)
    results = run_suites(names, dt_scale=args.dt_scale)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def build_parser():
    parser = argparse.ArgumentParser(prog="jmgtlab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation and write CSV output")
    _config_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-tau", help="relative errors against the tau = 0 limit")
    _config_args(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run verification suites")
    p.add_argument("--suite", default="all", choices=["all", *SUITES])
    p.add_argument("--dt-scale", type=float, default=1.0,
                   help="multiply the modal-oracle time steps (forces failures when large)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
