"""Record a synthetic sweep, replay it from the script, and export the reports.

The replayed run reproduces the recorded outcomes exactly, which is how a
paid sweep can be re-analysed offline.

    python3 scripts/replay_demo.py --outdir results/replay-demo
"""

import argparse
from pathlib import Path

from semantic_bell.agents import Backend, BackendDescriptor, LexicalResponder, ReplayScript, noisy_chooser
from semantic_bell.analysis import order_effects, summarize_model
from semantic_bell.core import DEFAULT_LEXICON, DEFAULT_PERSONAS, DEFAULT_TEMPLATES, default_grid
from semantic_bell.protocol import run_grid
from semantic_bell.reports import export_reports
from semantic_bell.store import TrialStore


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--outdir", type=Path, default=Path("results/replay-demo"))
    parser.add_argument("--trials", type=int, default=10, help="trials per grid point")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--pairs", type=int, default=1, help="how many lexicon pairs to sweep")
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    pairs = DEFAULT_LEXICON[: args.pairs]

    responder = LexicalResponder(DEFAULT_LEXICON, DEFAULT_PERSONAS, noisy_chooser(p_plus=0.6, p_zero=0.15))
    recorder = Backend(BackendDescriptor(kind="synthetic", model_id="recorder"), responder=responder, record=True)
    run_grid(recorder, pairs, DEFAULT_TEMPLATES, default_grid(), args.trials, args.seed, progress=None)
    script = args.outdir / "replay_script.jsonl"
    ReplayScript.save(recorder.recording, script)
    print(f"recorded {len(recorder.recording)} responses to {script}")

    store_path = args.outdir / "trials.jsonl"
    store_path.unlink(missing_ok=True)
    replay = Backend(BackendDescriptor(kind="replay", model_id="replayed"), replay=ReplayScript.load(script))
    results = run_grid(replay, pairs, DEFAULT_TEMPLATES, default_grid(), args.trials, args.seed,
                       store=TrialStore(store_path, fsync=False), progress=None)
    print(f"replayed {len(results.trials)} trials into {store_path}")

    summary = summarize_model(results)
    effects = order_effects(results)
    manifest = export_reports([results], [summary], effects, None, args.outdir)
    print("  ".join(f"{k}={v}" for k, v in summary.row().items()))
    print(f"order effects: {effects.summary()}")
    print(f"wrote {', '.join(e['file'] for e in manifest['files'])}")


if __name__ == "__main__":
    main()
