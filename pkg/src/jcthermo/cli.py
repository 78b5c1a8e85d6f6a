"""Command-line interface.

Subcommands map to the main activities: ``trace`` (entropy-production time
series for one initial state), ``divisibility`` (memory-effect
classification with the minimised rates), ``verify`` (the theorem and
identity scoreboard) and ``presets``.  Exit codes: 0 success, 1 a
verification check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checks import ALL_CHECKS, run_verify
from .jcdyn import ConfigError, CutoffLeakageError
from .report import run_divisibility, run_trace, write_csv, write_manifest
from .scenarios import PRESETS, apply_overrides, load_scenario, preset, save_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jcthermo",
        description="Entropy production and memory effects for a qubit "
                    "coupled to a single-mode thermal bath")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--preset", "-p", help="preset name (see `jcthermo presets`)")
        p.add_argument("--config", help="INI configuration file (overrides --preset)")
        p.add_argument("--out", "-o", default=".", help="output directory")
        p.add_argument("--tmax", type=float, default=None,
                       help="override t_max (units of 1/omega_a)")
        p.add_argument("--grid", type=int, default=None, help="override n_steps")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("--figures", dest="figures", action="store_true", default=True,
                       help="render figures next to the CSV (default)")
        p.add_argument("--no-figures", dest="figures", action="store_false")

    add_run_args(sub.add_parser("trace", help="entropy-production time series"))
    add_run_args(sub.add_parser("divisibility", help="divisibility verdicts and minimised rates"))

    ver = sub.add_parser("verify", help="run the verification scoreboard")
    ver.add_argument("--preset", "-p", default="all",
                     help="'all' (default) or a preset for the generic scenario checks")
    ver.add_argument("--config", help="verify a custom scenario from an INI file")
    ver.add_argument("--checks", help="comma-separated check names (with --preset all)")
    ver.add_argument("--threads", type=int, default=1)

    sub.add_parser("presets", help="list shipped presets")
    return parser


def _resolve_scenario(args) -> "Scenario":
    if args.config:
        sc = load_scenario(args.config)
    elif args.preset:
        sc = preset(args.preset)
    else:
        raise ConfigError("supply --preset or --config")
    return apply_overrides(sc, t_max=getattr(args, "tmax", None),
                           n_steps=getattr(args, "grid", None))


def _emit(report, outdir: Path, figures: bool) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{report.scenario.name}_{report.kind}"
    csv_name = f"{stem}.csv"
    write_csv(report, outdir / csv_name)
    figure_names = []
    if figures:
        from .plotting import render_figures   # deferred: keeps matplotlib off import paths
        figure_names = render_figures(report, outdir, stem)
    write_manifest(report, outdir / f"{stem}_manifest.json", csv_name, figure_names)
    save_scenario(report.scenario, outdir / f"{stem}_config.ini")
    print(f"wrote {csv_name} (+ manifest, config"
          + (f", {len(figure_names)} figures" if figure_names else "") + f") in {outdir}")
    print(f"rows: {len(report.rows)}, wall time {report.wall_time:.1f} s")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in PRESETS:
                sc = preset(name)
                beta_a = "-" if sc.params.beta_a is None else repr(sc.params.beta_a)
                print(f"{name}: omega_b={sc.params.omega_b} g={sc.params.g} "
                      f"beta_b={sc.params.beta_b} beta_a={beta_a} "
                      f"initial={sc.initial_state} t_max={sc.cfg.t_max:.4g} "
                      f"n_steps={sc.cfg.n_steps}")
            return 0
        if args.command == "trace":
            report = run_trace(_resolve_scenario(args), threads=args.threads)
            _emit(report, Path(args.out), args.figures)
            return 0
        if args.command == "divisibility":
            report = run_divisibility(_resolve_scenario(args), threads=args.threads)
            _emit(report, Path(args.out), args.figures)
            return 0
        if args.command == "verify":
            if args.config:
                target = load_scenario(args.config)
            else:
                target = args.preset
            names = None
            if args.checks:
                names = [n.strip() for n in args.checks.split(",") if n.strip()]
            try:
                results = run_verify(target, names=names, threads=args.threads)
            except KeyError as exc:
                print(f"error: {exc}; known checks: {', '.join(ALL_CHECKS)}",
                      file=sys.stderr)
                return 2
            n_fail = sum(not r.passed for r in results)
            print(f"{len(results) - n_fail}/{len(results)} checks passed")
            return 0 if n_fail == 0 else 1
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CutoffLeakageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
