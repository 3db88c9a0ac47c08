import json

import httpx
import pytest

from semantic_bell.agents import (
    CLASSIFIER_SYSTEM,
    AuthError,
    Backend,
    BackendDescriptor,
    constant_chooser,
    hidden_variable_chooser,
)
from semantic_bell.core import (
    DEFAULT_LEXICON,
    DEFAULT_PERSONAS,
    DEFAULT_TEMPLATES,
    ConfigError,
    SamplingConfig,
    SettingLabel,
    WordOrder,
    default_grid,
)
from semantic_bell.protocol import (
    GridPoint,
    GridResults,
    TrialError,
    product_vector,
    run_grid,
    run_trial,
    trial_id,
    trial_seed,
)
from semantic_bell.store import TrialStore

from conftest import no_progress, synthetic_backend

SAMPLING = SamplingConfig(temperature=1.0, top_p=0.9, top_k=50)


def ollama_backend(handler):
    desc = BackendDescriptor(kind="ollama", model_id="local", endpoint="http://x", retry_budget=0, backoff=0)
    return Backend(desc, transport=httpx.MockTransport(handler))


def persona_handler(failing=(), status=503):
    failing_text = {DEFAULT_PERSONAS[l] for l in failing}

    def handler(request):
        body = json.loads(request.content)
        system = body["messages"][0]["content"]
        if system in failing_text:
            return httpx.Response(status, json={})
        text = "A" if system == CLASSIFIER_SYSTEM else "bank: a financial institution\nbat: flying mammal"
        return httpx.Response(200, json={"message": {"content": text}})

    return handler


def test_all_plus_trial(bank_bat, tmp_path):
    store = TrialStore(tmp_path / "s.jsonl")
    backend = synthetic_backend(constant_chooser(1))
    rec = run_trial(backend, bank_bat, DEFAULT_TEMPLATES[0], WordOrder.ORIGINAL, SAMPLING, seed=3, store=store)
    assert rec.values == (1, 1, 1, 1)
    assert rec.complete and not rec.partial
    assert rec.sentence == "The bank was settled near the bat."
    assert product_vector(rec).tolist() == [1, 1, 1, 1]
    # one interpretation plus one classification per setting
    assert {l: [c.role for c in cs] for l, cs in rec.calls.items()} == {
        l: ["interpret", "classify"] for l in SettingLabel
    }
    assert store.load().trials[0].to_dict() == rec.to_dict()


def test_four_isolated_requests(bank_bat):
    rec = run_trial(synthetic_backend(constant_chooser(-1)), bank_bat, DEFAULT_TEMPLATES[0],
                    WordOrder.FLIPPED, SAMPLING)
    interp = [cs[0] for cs in rec.calls.values()]
    assert len({c.system for c in interp}) == 4
    assert {c.user for c in interp} == {interp[0].user}
    assert rec.sentence == "The bat was settled near the bank."
    assert rec.values == (-1, -1, -1, -1)


def test_partial_trial(bank_bat, tmp_path):
    store = TrialStore(tmp_path / "s.jsonl")
    backend = ollama_backend(persona_handler(failing=[SettingLabel.A_PRIME, SettingLabel.B]))
    rec = run_trial(backend, bank_bat, DEFAULT_TEMPLATES[0], WordOrder.ORIGINAL, SAMPLING, store=store)
    assert rec.values == (1, 0, 0, 1)
    assert rec.partial
    assert rec.outcomes[SettingLabel.B].classification_label == "INTERPRET_FAILED"
    assert len(store.load().trials) == 1


def test_total_failure_logs_attempt(bank_bat, tmp_path):
    store = TrialStore(tmp_path / "s.jsonl")
    backend = ollama_backend(persona_handler(failing=list(SettingLabel)))
    with pytest.raises(TrialError):
        run_trial(backend, bank_bat, DEFAULT_TEMPLATES[0], WordOrder.ORIGINAL, SAMPLING,
                  store=store, trial_id="t-1")
    loaded = store.load()
    assert loaded.trials == [] and [a["trial_id"] for a in loaded.attempts] == ["t-1"]
    assert store.known_ids("local") == {"t-1"}


def test_auth_error_propagates(bank_bat):
    backend = ollama_backend(persona_handler(failing=[SettingLabel.A], status=401))
    with pytest.raises(AuthError):
        run_trial(backend, bank_bat, DEFAULT_TEMPLATES[0], WordOrder.ORIGINAL, SAMPLING)


def test_sequential_matches_parallel(bank_bat):
    backend = synthetic_backend(hidden_variable_chooser())
    kw = dict(seed=11, trial_id="x")
    a = run_trial(backend, bank_bat, DEFAULT_TEMPLATES[1], WordOrder.ORIGINAL, SAMPLING, parallel=True, **kw)
    b = run_trial(backend, bank_bat, DEFAULT_TEMPLATES[1], WordOrder.ORIGINAL, SAMPLING, parallel=False, **kw)
    assert a.values == b.values


def test_seed_and_id_derivation(bank_bat):
    p = GridPoint(bank_bat, WordOrder.ORIGINAL, SAMPLING)
    q = GridPoint(bank_bat, WordOrder.FLIPPED, SAMPLING)
    assert trial_seed(1, p, 0) == trial_seed(1, p, 0)
    assert len({trial_seed(1, p, 0), trial_seed(1, p, 1), trial_seed(2, p, 0), trial_seed(1, q, 0)}) == 4
    assert trial_id("m", 1, p, 0) != trial_id("n", 1, p, 0)


def test_run_grid_counts(tmp_path):
    grid = default_grid()[:3]
    store = TrialStore(tmp_path / "s.jsonl", fsync=False)
    res = run_grid(synthetic_backend(constant_chooser(1)), DEFAULT_LEXICON[:2], DEFAULT_TEMPLATES, grid, 4, 7,
                   store=store, progress=no_progress)
    assert len(res.cells) == 2 * 2 * 3
    assert len(res.trials) == 48
    assert all(c.chsh.s_literal == 2.0 for c in res.cells.values())
    assert len(store.load().trials) == 48


def test_run_grid_resume_is_idempotent(tmp_path):
    store = TrialStore(tmp_path / "s.jsonl", fsync=False)
    args = (DEFAULT_LEXICON[:1], DEFAULT_TEMPLATES, default_grid()[:2], 3, 5)
    first = run_grid(synthetic_backend(hidden_variable_chooser()), *args, store=store, progress=no_progress)
    events = []
    again = run_grid(synthetic_backend(hidden_variable_chooser()), *args, store=store,
                     progress=lambda e, **f: events.append((e, f)))
    assert len(store.load().trials) == 12
    assert events[0] == ("sweep_start", {"model": "synthetic", "pending": 0, "skipped": 12})
    assert [t.to_dict() for t in again.trials] == [t.to_dict() for t in first.trials]


def test_run_grid_workers_same_outcomes(tmp_path):
    args = (DEFAULT_LEXICON[:1], DEFAULT_TEMPLATES, default_grid()[:3], 3, 9)
    serial = run_grid(synthetic_backend(hidden_variable_chooser()), *args, progress=no_progress)
    threaded = run_grid(synthetic_backend(hidden_variable_chooser()), *args, workers=4, progress=no_progress)
    assert [t.values for t in serial.trials] == [t.values for t in threaded.trials]
    assert [t.trial_id for t in serial.trials] == [t.trial_id for t in threaded.trials]


@pytest.mark.parametrize("grid,pairs,n", [([], DEFAULT_LEXICON, 1), (default_grid(), [], 1), (default_grid(), DEFAULT_LEXICON, 0)])
def test_run_grid_config_errors(grid, pairs, n):
    with pytest.raises(ConfigError):
        run_grid(synthetic_backend(constant_chooser(1)), pairs, DEFAULT_TEMPLATES, grid, n, 0, progress=no_progress)


def test_grid_results_from_trials(bank_bat):
    backend = synthetic_backend(constant_chooser(0))
    rec = run_trial(backend, bank_bat, DEFAULT_TEMPLATES[0], WordOrder.ORIGINAL, SAMPLING, trial_id="z")
    res = GridResults.from_trials([rec])
    (cell,) = res.cells.values()
    assert cell.chsh is None and "zero product vectors" in cell.error
    assert res.valid() == {} and res.s_values() == []
