import csv
import subprocess
import sys

import pytest
import yaml

from semantic_bell.agents import constant_chooser, noisy_chooser
from semantic_bell.analysis import order_effects, summarize_model
from semantic_bell.cli import main
from semantic_bell.config import ConfigError, config_from_dict, load_benchmarks, load_config
from semantic_bell.core import DEFAULT_LEXICON, DEFAULT_TEMPLATES, default_grid
from semantic_bell.protocol import GridResults, run_grid
from semantic_bell.reports import TABLE1_COLUMNS, export_reports
from semantic_bell.store import TrialStore

from conftest import no_progress, synthetic_backend


def write_config(tmp_path, **overrides):
    raw = {
        "backends": [
            {"kind": "synthetic", "model_id": "toy-a", "responder": {"kind": "hidden_variable"}},
            {"kind": "synthetic", "model_id": "toy-b", "responder": {"kind": "noisy", "p_zero": 0.3}},
            {"kind": "synthetic", "model_id": "toy-c", "responder": {"kind": "noisy", "p_plus": 0.9}},
        ],
        "grid": [{"temperature": 1.0, "top_p": 0.9, "top_k": 50}, {"temperature": 0.2, "top_p": 0.7, "top_k": 10}],
        "trials_per_point": 4,
        "seed": 3,
        "outdir": "out",
    }
    raw.update(overrides)
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def test_export_full_grid_layout(tmp_path):
    results = run_grid(synthetic_backend(constant_chooser(1)), DEFAULT_LEXICON[:1], DEFAULT_TEMPLATES,
                       default_grid(), 2, 0, progress=no_progress)
    summary = summarize_model(results)
    manifest = export_reports([results], [summary], order_effects(results), None, tmp_path, plots=False)
    with open(tmp_path / "table1_summary.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == TABLE1_COLUMNS
    assert rows[1][:2] == ["synthetic", "54"]
    md = (tmp_path / "table2_sampling_grid.md").read_text().splitlines()
    table = [line for line in md if line.startswith("| 0.") or line.startswith("| 1.")]
    assert len(table) == 3
    assert all(line.count("2.00 +/- 0.00") == 9 for line in table)
    assert "**" not in "\n".join(table)
    assert manifest["omitted"]["correlations.csv"].endswith("no benchmark table supplied")
    with open(tmp_path / "table2_sampling_grid.csv") as fh:
        assert len(list(csv.reader(fh))) == 28


def test_export_empty_results(tmp_path):
    manifest = export_reports([], [], None, None, tmp_path / "o", plots=True)
    assert manifest["files"] == []
    assert set(manifest["omitted"]) >= {"table1_summary.csv", "grid_points.csv", "correlations.csv"}


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"lexicon": [{"word1": "bank", "word2": "bank", "senses1": ["a", "b"], "senses2": ["c", "d"]}]})
    with pytest.raises(ConfigError):
        config_from_dict({"templates": ["no slots here"]})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    with pytest.raises(ConfigError):
        load_benchmarks(tmp_path / "missing.csv")


def test_load_benchmarks(tmp_path):
    path = tmp_path / "b.csv"
    path.write_text("model,mmlu,hallucination,pushback\nx,1,2,\ny,,,\n")
    table = load_benchmarks(path)
    assert set(table) == {"x"} and table["x"].pushback is None


def test_cli_validate(tmp_path, capsys):
    assert main(["validate", "--config", str(write_config(tmp_path))]) == 0
    assert "3 backend(s)" in capsys.readouterr().out
    assert main(["validate", "--config", str(write_config(tmp_path, trials_per_point=0))]) == 2


def test_cli_sweep_analyze_report(tmp_path, capsys):
    cfg = write_config(tmp_path)
    for model in ("toy-a", "toy-b", "toy-c"):
        assert main(["sweep", "--config", str(cfg), "--model", model, "--pairs", "bank/bat"]) == 0
    out = capsys.readouterr()
    assert "trials=4" in out.out
    assert '"event": "trial_done"' in out.err

    bench = tmp_path / "bench.csv"
    bench.write_text("model,mmlu,hallucination,pushback\ntoy-a,70,10,0.5\ntoy-b,60,20,0.3\ntoy-c,50,15,\n")
    assert main(["report", "--config", str(cfg), "--benchmarks", str(bench), "--no-plots"]) == 0
    out = capsys.readouterr().out
    assert "correlations.csv" in out and "omitted correlations" not in out
    with open(tmp_path / "out" / "correlations.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # pushback has only two models

    assert main(["analyze", "--config", str(cfg), "--model", "toy-b", "--outdir", str(tmp_path / "a")]) == 0
    assert "model=toy-b" in capsys.readouterr().out


def test_cli_run_single_point(tmp_path, capsys):
    cfg = write_config(tmp_path)
    argv = ["run", "--config", str(cfg), "--model", "toy-a", "--pair", "palm/iris",
            "--temperature", "1.0", "--top-p", "0.9", "--top-k", "50", "--order", "flipped"]
    assert main(argv) == 0
    assert "palm/iris|flipped" in capsys.readouterr().out
    assert main(["run", "--config", str(cfg), "--model", "toy-a", "--pair", "no/such"]) == 2


def test_cli_report_plots_deterministic(tmp_path):
    cfg = write_config(tmp_path)
    main(["sweep", "--config", str(cfg), "--model", "toy-a"])
    main(["report", "--config", str(cfg), "--outdir", str(tmp_path / "r1")])
    main(["report", "--config", str(cfg), "--outdir", str(tmp_path / "r2")])
    svg1 = (tmp_path / "r1" / "s_hist_toy-a.svg").read_bytes()
    assert svg1 == (tmp_path / "r2" / "s_hist_toy-a.svg").read_bytes()


def test_cli_strict_corrupt_store(tmp_path, capsys):
    cfg = write_config(tmp_path)
    main(["sweep", "--config", str(cfg), "--model", "toy-a", "--pairs", "bank/bat"])
    store = tmp_path / "out" / "trials.jsonl"
    with open(store, "a") as fh:
        fh.write("{not json\n")
    assert main(["analyze", "--config", str(cfg)]) == 2
    assert main(["analyze", "--config", str(cfg), "--lenient"]) == 0
    assert "skipped 1 corrupt line" in capsys.readouterr().err


def test_cli_synthetic_subprocess():
    proc = subprocess.run([sys.executable, "-m", "semantic_bell.cli", "synthetic", "--samples", "20000"],
                          capture_output=True, text=True, check=True)
    assert "PR box" in proc.stdout and "4.0000" in proc.stdout


class Interrupted(Exception):
    pass


def test_interrupted_sweep_resumes_to_same_exports(tmp_path):
    args = (DEFAULT_LEXICON[:1], DEFAULT_TEMPLATES, default_grid()[:4], 5, 21)

    def export(store_path, outdir):
        trials = TrialStore(store_path).load().trials
        res = GridResults.from_trials(trials)
        export_reports([res], [summarize_model(res)], order_effects(res), None, outdir, plots=True)

    full = tmp_path / "full.jsonl"
    run_grid(synthetic_backend(noisy_chooser(0.5, 0.2)), *args, store=TrialStore(full), progress=no_progress)

    partial = tmp_path / "partial.jsonl"
    backend = synthetic_backend(noisy_chooser(0.5, 0.2))
    inner, calls = backend.responder, []

    def flaky(*a):
        calls.append(1)
        if len(calls) == 97:
            raise Interrupted
        return inner(*a)

    backend.responder = flaky
    with pytest.raises(Interrupted):
        run_grid(backend, *args, store=TrialStore(partial), progress=no_progress)
    assert 0 < len(TrialStore(partial).load()) < 40
    run_grid(synthetic_backend(noisy_chooser(0.5, 0.2)), *args, store=TrialStore(partial), progress=no_progress)

    export(full, tmp_path / "a")
    export(partial, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
