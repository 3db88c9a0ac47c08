"""Command-line entry point: validate, run, sweep, analyze, report, synthetic."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .agents import BackendUnavailable, ReplayExhausted
from .analysis import (
    EmptyResults,
    OrderEffects,
    correlate_benchmarks,
    order_effects,
    summarize_model,
)
from .config import RunConfig, build_backend, load_benchmarks, load_config, parse_grid
from .core import ConfigError, SamplingConfig, WordOrder
from .protocol import GridResults, run_grid
from .reports import export_reports
from .store import ParseError, StorageError, TrialStore
from .synthetic import format_suite, run_synthetic_suite

log = logging.getLogger("semantic_bell")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--store", type=Path, help="trial store (JSONL); overrides the config")
    p.add_argument("--model", help="model_id of the backend to use / analyze")
    p.add_argument("--seed", type=int, help="sweep seed; overrides the config")
    p.add_argument("--trials", type=int, help="trials per grid point; overrides the config")
    p.add_argument("--grid", help="'default' or a YAML file with a list of sampling configs")
    p.add_argument("--outdir", type=Path, help="output directory; overrides the config")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="fail on corrupt store lines (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false", help="skip corrupt store lines")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="semantic-bell", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check a configuration file")

    run = sub.add_parser("run", parents=[common], help="run the trials of a single grid point")
    run.add_argument("--pair", required=True, help="word pair as word1/word2")
    run.add_argument("--order", choices=[o.value for o in WordOrder], default="original")
    run.add_argument("--temperature", type=float)
    run.add_argument("--top-p", type=float)
    run.add_argument("--top-k", type=int)

    sweep = sub.add_parser("sweep", parents=[common], help="sweep the full sampling grid")
    sweep.add_argument("--pairs", help="comma-separated word1/word2 keys (default: whole lexicon)")
    sweep.add_argument("--workers", type=int, help="concurrent trials")

    sub.add_parser("analyze", parents=[common], help="recompute CHSH and summaries from the store")

    report = sub.add_parser("report", parents=[common], help="export tables, correlations and plots")
    report.add_argument("--benchmarks", type=Path, help="CSV: model,mmlu,hallucination,pushback")
    report.add_argument("--no-plots", action="store_true")

    syn = sub.add_parser("synthetic", parents=[common], help="estimator comparison on synthetic sources")
    syn.add_argument("--samples", type=int, default=100_000, help="singlet samples per setting pair")
    return parser


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.store:
        cfg.store = args.store
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials_per_point = args.trials
    if args.grid:
        cfg.grid = parse_grid(args.grid)
    if args.outdir:
        cfg.outdir = args.outdir
    return cfg


def _load_results(cfg: RunConfig, args) -> list[GridResults]:
    store = TrialStore(cfg.store)
    loaded = store.load_trials(model_id=args.model, strict=args.strict)
    if loaded.skipped:
        print(f"skipped {loaded.skipped} corrupt line(s): {loaded.skipped_lines}", file=sys.stderr)
    models = sorted({t.model_id for t in loaded.trials})
    return [GridResults.from_trials(loaded.trials, m) for m in models]


def _analyze(results: list[GridResults]):
    summaries, effects = [], OrderEffects()
    for res in results:
        try:
            summaries.append(summarize_model(res))
        except EmptyResults as exc:
            print(f"note: {exc}", file=sys.stderr)
        per_model = order_effects(res)
        effects.records.extend(per_model.records)
        effects.skipped += per_model.skipped
    return summaries, effects


def cmd_validate(cfg: RunConfig, args) -> int:
    print(f"ok: {len(cfg.backends)} backend(s), {len(cfg.lexicon)} word pairs, "
          f"{len(cfg.templates)} templates, {len(cfg.grid)} grid points, "
          f"{cfg.trials_per_point} trials per point")
    return 0


def _sweep(cfg: RunConfig, args, pairs, grid, orders) -> GridResults:
    backend = build_backend(cfg, args.model)
    try:
        return run_grid(
            backend,
            pairs,
            cfg.templates,
            grid,
            cfg.trials_per_point,
            cfg.seed,
            settings=cfg.settings,
            orders=orders,
            store=TrialStore(cfg.store),
            workers=getattr(args, "workers", None) or cfg.workers,
            classifier_retries=cfg.classifier_retries,
            classifier_sampling=cfg.classifier_sampling,
        )
    finally:
        backend.close()


def _print_cells(results: GridResults) -> None:
    for point, cell in results.cells.items():
        s = "n/a" if cell.chsh is None else f"{cell.chsh.s_literal:.4f}"
        print(f"{point.key}  trials={len(cell.trials)} failed={cell.failed}  S={s}")


def cmd_run(cfg: RunConfig, args) -> int:
    sampling = SamplingConfig(args.temperature, args.top_p, args.top_k)
    results = _sweep(cfg, args, [cfg.pair(args.pair)], [sampling], [WordOrder(args.order)])
    _print_cells(results)
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    pairs = [cfg.pair(k.strip()) for k in args.pairs.split(",")] if args.pairs else cfg.lexicon
    results = _sweep(cfg, args, pairs, cfg.grid, (WordOrder.ORIGINAL, WordOrder.FLIPPED))
    _print_cells(results)
    return 0


def cmd_analyze(cfg: RunConfig, args) -> int:
    results = _load_results(cfg, args)
    summaries, effects = _analyze(results)
    manifest = export_reports(results, summaries, effects, None, cfg.outdir, plots=False)
    for s in summaries:
        row = s.row()
        print("  ".join(f"{k}={v}" for k, v in row.items()))
    print(f"wrote {len(manifest['files'])} file(s) to {cfg.outdir}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    results = _load_results(cfg, args)
    summaries, effects = _analyze(results)
    bench_path = args.benchmarks or cfg.benchmarks
    correlations = correlate_benchmarks(summaries, load_benchmarks(bench_path)) if bench_path else None
    manifest = export_reports(results, summaries, effects, correlations, cfg.outdir, plots=not args.no_plots)
    for entry in manifest["files"]:
        print(f"{entry['file']}")
    for name, reason in manifest["omitted"].items():
        print(f"omitted {name}: {reason}")
    return 0


def cmd_synthetic(cfg: RunConfig, args) -> int:
    print(format_suite(run_synthetic_suite(cfg.seed, args.samples)))
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "report": cmd_report,
    "synthetic": cmd_synthetic,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParseError, StorageError, BackendUnavailable, ReplayExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
