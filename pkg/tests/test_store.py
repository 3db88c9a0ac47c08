import threading

import pytest

from semantic_bell.core import SamplingConfig, WordOrder
from semantic_bell.store import ParseError, StorageError, TrialStore, append_trial, load_trials

from conftest import make_trials


def test_roundtrip(tmp_path):
    store = TrialStore(tmp_path / "nested" / "trials.jsonl")
    trials = make_trials([(1, -1, 0, 1), (1, 1, 1, 1)])
    for t in trials:
        append_trial(store, t)
    loaded = load_trials(store)
    assert [t.to_dict() for t in loaded] == [t.to_dict() for t in trials]
    assert len(loaded) == 2


def test_missing_file_is_empty(tmp_path):
    assert len(TrialStore(tmp_path / "absent.jsonl").load()) == 0


def test_concurrent_appends(tmp_path):
    store = TrialStore(tmp_path / "t.jsonl", fsync=False)
    trials = make_trials([(1, 1, 1, 1)] * 200)

    def worker(chunk):
        for t in chunk:
            store.append_trial(t)

    threads = [threading.Thread(target=worker, args=(trials[i::8],)) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    loaded = store.load()
    assert sorted(t.trial_id for t in loaded) == sorted(t.trial_id for t in trials)


def test_unwritable_path_raises_storage_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(StorageError):
        TrialStore(blocker / "t.jsonl").append_trial(make_trials([(1, 1, 1, 1)])[0])


def test_corrupt_line_strict_and_lenient(tmp_path):
    path = tmp_path / "t.jsonl"
    store = TrialStore(path)
    for t in make_trials([(1, 1, 1, 1)] * 9):
        store.append_trial(t)
    lines = path.read_text().splitlines()
    lines[6] = lines[6][: len(lines[6]) // 2]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        store.load()
    assert info.value.line_no == 7
    lenient = store.load(strict=False)
    assert (len(lenient), lenient.skipped, lenient.skipped_lines) == (8, 1, [7])


def test_unknown_kind_is_parse_error(tmp_path):
    path = tmp_path / "t.jsonl"
    path.write_text('{"kind": "mystery"}\n')
    with pytest.raises(ParseError):
        TrialStore(path).load()


def test_filters(tmp_path):
    store = TrialStore(tmp_path / "t.jsonl")
    s1, s2 = SamplingConfig(1.0, 0.9, 50), SamplingConfig(0.2)
    batches = [
        make_trials([(1, 1, 1, 1)] * 2, model_id="m1", sampling=s1),
        make_trials([(1, 1, 1, 1)] * 3, model_id="m1", sampling=s2, order=WordOrder.FLIPPED),
        make_trials([(1, 1, 1, 1)] * 4, model_id="m2", sampling=s1),
    ]
    for batch in batches:
        for t in batch:
            store.append_trial(t)
    assert len(store.load_trials(model_id="m1")) == 5
    assert len(store.load_trials(sampling=s1)) == 6
    assert len(store.load_trials(order="flipped")) == 3
    assert len(store.load_trials(pair="bank/bat", model_id="m2")) == 4
    assert len(store.load_trials(pair="bat/bank")) == 0
    assert store.known_ids("m2") == {f"m2-{i}" for i in range(4)}
