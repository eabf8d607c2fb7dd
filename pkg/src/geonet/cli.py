"""Command-line front end: a thin client over the shared run handlers.

Exit codes: 0 success, 2 configuration error, 3 resource abort.
All randomness flows from the config's master_seed (or --seed override);
there are no hidden entropy sources.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .config import ConfigError, load_analytic_config, load_sweep_config
from .montecarlo import ResourceAbort
from .runs import run_analytic, run_compare, run_render_sample, run_simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _default_parallelism(flag_value) -> int:
    if flag_value is not None:
        return max(1, int(flag_value))
    env = os.environ.get("GEONET_PARALLELISM")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"GEONET_PARALLELISM={env!r} is not an integer") from exc
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geonet",
        description="Monte Carlo and analytic connectivity of random ad hoc networks",
    )
    parser.add_argument("--version", action="version", version=f"geonet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo sweep")
    sim.add_argument("--config", required=True, help="sweep config JSON")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--parallelism", type=int, default=None)
    sim.add_argument("--trials", type=int, default=None, help="override config trials")
    sim.add_argument("--seed", type=int, default=None, help="override master seed")

    ana = sub.add_parser("analytic", help="evaluate a closed-form grid")
    ana.add_argument("--config", required=True, help="analytic config JSON")
    ana.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="overlay simulation and analytic grids")
    cmp_.add_argument("--sim", required=True, help="sweep.csv (or analytic.csv) path")
    cmp_.add_argument("--analytic", required=True, help="analytic.csv path")
    cmp_.add_argument("--out", required=True)

    ren = sub.add_parser("render-sample", help="export one realization for plotting")
    ren.add_argument("--config", required=True, help="single-cell sweep config JSON")
    ren.add_argument("--out", required=True)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            parallelism = _default_parallelism(args.parallelism)
            cfg = load_sweep_config(args.config)
            if args.parallelism is None and cfg.parallelism:
                parallelism = max(1, cfg.parallelism)
            out = run_simulate(
                cfg,
                args.out,
                parallelism=parallelism,
                trials_override=args.trials,
                seed_override=args.seed,
            )
            print(f"wrote {out['sweep_csv']} and {out['sweep_json']}")
        elif args.command == "analytic":
            cfg = load_analytic_config(args.config)
            out = run_analytic(cfg, args.out)
            print(f"wrote {out['analytic_csv']} ({len(out['rows'])} rows)")
        elif args.command == "compare":
            out = run_compare(args.sim, args.analytic, args.out)
            s = out["summary"]
            print(
                f"wrote {out['compare_csv']}: {s['covered']}/{s['points']} points covered "
                f"({100.0 * s['coverage']:.1f}%)"
            )
        elif args.command == "render-sample":
            cfg = load_sweep_config(args.config)
            out = run_render_sample(cfg, args.out)
            print(f"wrote {out['positions_csv']} and {out['edges']} (n={out['n']})")
        elif args.command == "serve":
            import uvicorn

            from .service.app import app

            uvicorn.run(app, host=args.host, port=args.port)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceAbort, MemoryError) as exc:
        print(f"resource abort: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
