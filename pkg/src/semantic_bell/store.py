"""Append-only JSONL trial store.

Each line is one JSON object with a ``kind`` of ``"trial"`` (a serialized
TrialRecord) or ``"attempt"`` (a trial that produced no record because every
interpretation call failed). Lines are never rewritten.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping

from .core import SamplingConfig, TrialRecord, WordOrder, WordPair


class StorageError(OSError):
    pass


class ParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


@dataclass
class LoadResult:
    trials: list[TrialRecord] = field(default_factory=list)
    attempts: list[dict[str, Any]] = field(default_factory=list)
    skipped: int = 0
    skipped_lines: list[int] = field(default_factory=list)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self.trials)

    def __len__(self) -> int:
        return len(self.trials)


class TrialStore:
    def __init__(self, path: str | os.PathLike, fsync: bool = True):
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()

    def _append(self, obj: Mapping[str, Any]) -> None:
        line = json.dumps(obj, sort_keys=True, ensure_ascii=False) + "\n"
        with self._lock:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    if self.fsync:
                        os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"cannot append to {self.path}: {exc}") from exc

    def append_trial(self, record: TrialRecord) -> str:
        self._append({"kind": "trial", "trial": record.to_dict()})
        return record.trial_id

    def append_attempt(self, attempt: Mapping[str, Any]) -> str:
        self._append({"kind": "attempt", **attempt})
        return attempt["trial_id"]

    def load(
        self,
        *,
        strict: bool = True,
        predicate: Callable[[TrialRecord], bool] | None = None,
    ) -> LoadResult:
        result = LoadResult()
        if not self.path.exists():
            return result
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    kind = obj["kind"]
                    if kind == "trial":
                        record = TrialRecord.from_dict(obj["trial"])
                    elif kind == "attempt":
                        record = None
                    else:
                        raise ValueError(f"unknown record kind {kind!r}")
                except (ValueError, KeyError, TypeError) as exc:
                    if strict:
                        raise ParseError(line_no, str(exc)) from exc
                    result.skipped += 1
                    result.skipped_lines.append(line_no)
                    continue
                if record is None:
                    result.attempts.append(obj)
                elif predicate is None or predicate(record):
                    result.trials.append(record)
        return result

    def load_trials(
        self,
        *,
        model_id: str | None = None,
        pair: WordPair | str | None = None,
        order: WordOrder | str | None = None,
        sampling: SamplingConfig | None = None,
        strict: bool = True,
    ) -> LoadResult:
        pair_key = pair.key if isinstance(pair, WordPair) else pair
        order = WordOrder(order) if order is not None else None

        def keep(r: TrialRecord) -> bool:
            return (
                (model_id is None or r.model_id == model_id)
                and (pair_key is None or r.pair.key == pair_key)
                and (order is None or r.order == order)
                and (sampling is None or r.sampling == sampling)
            )

        return self.load(strict=strict, predicate=keep)

    def known_ids(self, model_id: str | None = None) -> set[str]:
        """Trial ids already attempted (successful or not), for resume."""
        loaded = self.load(strict=False)
        ids = {t.trial_id for t in loaded.trials if model_id is None or t.model_id == model_id}
        ids.update(a["trial_id"] for a in loaded.attempts if model_id is None or a.get("model_id") == model_id)
        return ids


def append_trial(store: TrialStore, record: TrialRecord) -> str:
    return store.append_trial(record)


def load_trials(store: TrialStore, **filters) -> LoadResult:
    return store.load_trials(**filters)
