"""Command line interface: ``magstrict run | check-mesh | sweep``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .config import ConfigError, RunConfig, apply, load_config
from .driver import RunError, parse_vary, run_benchmark, sweep
from .mesh import build_structured_mesh, check_angle_condition
from .report import emit_outputs

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4

# CLI flag -> config key
FLAGS = {
    "r": "r", "scheme": "scheme", "k": "k", "T": "T", "alpha": "alpha", "theta": "theta",
    "Ce": "c_e", "Cm": "c_m", "Cexch": "c_exch", "rho": "rho", "s": "s", "out": "out",
    "cadence": "cadence",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_flags(p):
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--r", type=int)
    p.add_argument("--scheme", choices=("tangent", "midpoint"))
    p.add_argument("--k", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--Ce", type=float, help="elastic tensor constant")
    p.add_argument("--Cm", type=float, help="magnetic tensor constant")
    p.add_argument("--Cexch", type=float, help="exchange constant")
    p.add_argument("--rho", type=float)
    p.add_argument("--s", type=float, help="initial data parameter")
    p.add_argument("--cadence", type=int, help="record diagnostics every N steps")
    p.add_argument("--out", help="output path stem")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any other configuration key, e.g. pi.kind=applied_field")
    p.add_argument("--no-figures", action="store_true")


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for flag, key in FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[key] = val
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key] = val
    if args.no_figures:
        overrides["figures"] = False
    if args.config:
        return load_config(args.config, overrides)
    return apply(RunConfig(), overrides).validate()


def _progress(n, total, row):
    logging.getLogger("magstrict").info("step %d/%d t=%.6g E=%.6g W1inf=%.6g", n, total, row.t,
                                        row.E_exchange, row.W1inf)


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    rows, tb = run_benchmark(cfg, progress=_progress if args.verbose else None)
    paths = emit_outputs(rows, cfg.out, figures=cfg.figures, blow_up=tb)
    print(f"T_B = {tb if tb is not None else 'none'}")
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_check_mesh(args) -> int:
    mesh = build_structured_mesh(args.r)
    rep = check_angle_condition(mesh)
    print(f"r={args.r} nodes={mesh.n_nodes} elements={mesh.n_elements} h_max={mesh.h_max:.6g}")
    print(f"angle condition: {'pass' if rep.passed else 'FAIL'} "
          f"(worst off-diagonal {rep.worst_entry:.3e} at {rep.worst_pair})")
    return EXIT_OK if rep.passed else EXIT_INVARIANT


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    key, values = parse_vary(args.vary)
    for c, _rows, tb in sweep(cfg, key, values, workers=args.workers):
        print(f"{key}={getattr(c, key.replace('.', '_'), '?')} T_B={tb if tb is not None else 'none'} -> {c.out}.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="magstrict", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run one simulation")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_mesh = sub.add_parser("check-mesh", help="check the angle condition of T_r")
    p_mesh.add_argument("--r", type=int, required=True)
    p_mesh.set_defaults(func=cmd_check_mesh)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep in worker threads")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--vary", required=True, metavar="KEY=V1,V2,...")
    p_sweep.add_argument("--workers", type=int)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
