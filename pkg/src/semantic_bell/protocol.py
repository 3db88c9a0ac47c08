"""Trial and sweep orchestration."""

from __future__ import annotations

import hashlib
import json
import logging
import sys
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .agents import (
    AuthError,
    Backend,
    BackendUnavailable,
    classify_with_log,
    interpretation_prompt,
)
from .chsh import CHSHResult, EmptyEnsemble, chsh_literal, product_vector
from .core import (
    SETTING_LABELS,
    AgentCall,
    ConfigError,
    MeasurementSetting,
    Outcome,
    SamplingConfig,
    SentenceTemplate,
    TrialRecord,
    WordOrder,
    WordPair,
    check_settings,
    default_settings,
    render_sentence,
)
from .store import TrialStore

log = logging.getLogger(__name__)

ORDERS = (WordOrder.ORIGINAL, WordOrder.FLIPPED)


class TrialError(RuntimeError):
    pass


def emit_progress(event: str, **fields: Any) -> None:
    """One JSON object per line on stderr."""
    sys.stderr.write(json.dumps({"event": event, **fields}, sort_keys=True) + "\n")


@dataclass(frozen=True)
class GridPoint:
    pair: WordPair
    order: WordOrder
    sampling: SamplingConfig

    @property
    def key(self) -> str:
        return f"{self.pair.key}|{self.order.value}|{self.sampling.key}"


def _digest_int(*parts: Any) -> int:
    payload = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


def trial_seed(seed: int, point: GridPoint, index: int) -> int:
    return _digest_int(seed, point.key, index) % 2**63


def trial_id(model_id: str, seed: int, point: GridPoint, index: int) -> str:
    return f"{_digest_int(model_id, seed, point.key, index):016x}"


def run_trial(
    backend: Backend,
    pair: WordPair,
    template: SentenceTemplate,
    order: WordOrder,
    sampling: SamplingConfig,
    settings: Sequence[MeasurementSetting] | None = None,
    seed: int = 0,
    *,
    store: TrialStore | None = None,
    trial_id: str | None = None,
    cell_index: int = 0,
    classifier_retries: int = 2,
    classifier_sampling: SamplingConfig | None = None,
    parallel: bool = True,
) -> TrialRecord:
    """Run the four persona-framed agents on one rendered sentence.

    Alice's settings are classified on ``pair.word1`` and Bob's on
    ``pair.word2`` regardless of word order. A failed interpretation or
    classification yields outcome 0; only when all four interpretations fail
    is a TrialError raised (after logging the attempt to ``store``).
    """
    settings = tuple(settings) if settings is not None else default_settings()
    check_settings(settings)
    sentence = render_sentence(pair, template, order)
    prompt = interpretation_prompt(sentence, pair)
    trial_id = trial_id or f"{_digest_int(backend.model_id, seed, time.time_ns()):016x}"

    def measure(setting: MeasurementSetting) -> tuple[Outcome, tuple[AgentCall, ...], bool]:
        idx = SETTING_LABELS.index(setting.label)
        rng = np.random.default_rng([seed, idx])
        try:
            call = backend.call(setting.persona, prompt, sampling, role="interpret", rng=rng)
        except AuthError:
            raise
        except BackendUnavailable as exc:
            return Outcome(0, "", "INTERPRET_FAILED"), (exc.call,), False
        word = pair.word1 if setting.label.party.value == "alice" else pair.word2
        if not call.response or not call.response.strip():
            return Outcome(0, call.response or "", "EMPTY"), (call,), True
        try:
            result = classify_with_log(
                backend,
                word,
                call.response,
                pair.senses_for(word),
                retries=classifier_retries,
                sampling=classifier_sampling,
                rng=rng,
            )
        except AuthError:
            raise
        except BackendUnavailable as exc:
            return Outcome(0, call.response, "CLASSIFY_FAILED"), (call, exc.call), True
        return result.outcome, (call, *result.calls), True

    if parallel:
        with ThreadPoolExecutor(max_workers=len(settings)) as pool:
            measured = list(pool.map(measure, settings))
    else:
        measured = [measure(s) for s in settings]

    by_label = {s.label: m for s, m in zip(settings, measured)}
    calls = {label: by_label[label][1] for label in SETTING_LABELS}
    if not any(m[2] for m in measured):
        if store is not None:
            store.append_attempt(
                {
                    "trial_id": trial_id,
                    "model_id": backend.model_id,
                    "pair": pair.to_dict(),
                    "order": order.value,
                    "sampling": sampling.to_dict(),
                    "template": template.pattern,
                    "seed": seed,
                    "cell_index": cell_index,
                    "error": "all four interpretation calls failed",
                    "calls": {l.value: [c.to_dict() for c in cs if c is not None] for l, cs in calls.items()},
                }
            )
        raise TrialError(f"trial {trial_id}: all four interpretation calls failed")

    record = TrialRecord(
        trial_id=trial_id,
        model_id=backend.model_id,
        pair=pair,
        template=template,
        order=order,
        sampling=sampling,
        outcomes={label: by_label[label][0] for label in SETTING_LABELS},
        seed=seed,
        sentence=sentence,
        cell_index=cell_index,
        calls=calls,
    )
    if store is not None:
        store.append_trial(record)
    return record


@dataclass
class CellResult:
    trials: list[TrialRecord] = field(default_factory=list)
    failed: int = 0
    chsh: CHSHResult | None = None
    error: str | None = None

    def compute(self) -> "CellResult":
        try:
            self.chsh = chsh_literal(self.trials) if self.trials else None
            self.error = None if self.trials else "no trials"
        except EmptyEnsemble as exc:
            self.chsh, self.error = None, str(exc)
        return self


@dataclass
class GridResults:
    """Per grid-point trials and CHSH results for a single model."""

    model_id: str
    cells: dict[GridPoint, CellResult] = field(default_factory=dict)

    @classmethod
    def from_trials(cls, trials: Iterable[TrialRecord], model_id: str | None = None) -> "GridResults":
        trials = list(trials)
        if model_id is None:
            ids = {t.model_id for t in trials}
            if len(ids) > 1:
                raise ValueError(f"trials span several models {sorted(ids)}; pass model_id")
            model_id = ids.pop() if ids else ""
        cells: dict[GridPoint, CellResult] = defaultdict(CellResult)
        for t in trials:
            if t.model_id == model_id:
                cells[GridPoint(t.pair, t.order, t.sampling)].trials.append(t)
        for cell in cells.values():
            cell.trials.sort(key=lambda t: (t.cell_index, t.trial_id))
            cell.compute()
        return cls(model_id, dict(sorted(cells.items(), key=lambda kv: _point_sort_key(kv[0]))))

    @property
    def trials(self) -> list[TrialRecord]:
        return [t for cell in self.cells.values() for t in cell.trials]

    def valid(self) -> dict[GridPoint, CHSHResult]:
        return {p: c.chsh for p, c in self.cells.items() if c.chsh is not None}

    def s_values(self) -> list[float]:
        return [r.s_literal for r in self.valid().values()]


def _point_sort_key(p: GridPoint):
    s = p.sampling
    inf = float("inf")
    return (
        p.pair.word1,
        p.pair.word2,
        ORDERS.index(p.order),
        inf if s.temperature is None else s.temperature,
        inf if s.top_p is None else s.top_p,
        inf if s.top_k is None else s.top_k,
    )


def grid_points(
    pairs: Sequence[WordPair],
    grid: Sequence[SamplingConfig],
    orders: Sequence[WordOrder] = ORDERS,
) -> list[GridPoint]:
    return [GridPoint(pair, order, s) for pair in pairs for order in orders for s in grid]


def run_grid(
    backend: Backend,
    pairs: Sequence[WordPair],
    templates: Sequence[SentenceTemplate],
    grid: Sequence[SamplingConfig],
    trials_per_point: int,
    seed: int,
    *,
    settings: Sequence[MeasurementSetting] | None = None,
    orders: Sequence[WordOrder] = ORDERS,
    store: TrialStore | None = None,
    workers: int = 1,
    classifier_retries: int = 2,
    classifier_sampling: SamplingConfig | None = None,
    progress: Callable[..., None] | None = emit_progress,
) -> GridResults:
    """Sweep every (pair, order, sampling) cell with ``trials_per_point`` trials.

    Trial ids and seeds are derived from (seed, cell, index), so a sweep
    resumed against the same store skips what is already there. Templates are
    drawn per trial from the trial's own seed.
    """
    if trials_per_point < 1:
        raise ConfigError("trials_per_point must be >= 1")
    if not grid:
        raise ConfigError("empty sampling grid")
    if not pairs:
        raise ConfigError("no word pairs")
    if not templates:
        raise ConfigError("no sentence templates")
    for t in templates:
        t.check()
    settings = tuple(settings) if settings is not None else default_settings()
    check_settings(settings)
    progress = progress or (lambda *a, **k: None)

    done = store.known_ids(backend.model_id) if store is not None else set()
    jobs = []
    for point in grid_points(pairs, grid, orders):
        for index in range(trials_per_point):
            tid = trial_id(backend.model_id, seed, point, index)
            if tid not in done:
                jobs.append((point, index, tid))
    progress("sweep_start", model=backend.model_id, pending=len(jobs), skipped=len(done))

    new_trials: list[TrialRecord] = []
    failed: dict[GridPoint, int] = defaultdict(int)

    def one(job):
        point, index, tid = job
        tseed = trial_seed(seed, point, index)
        template = templates[int(np.random.default_rng(tseed).integers(len(templates)))]
        try:
            record = run_trial(
                backend,
                point.pair,
                template,
                point.order,
                point.sampling,
                settings,
                tseed,
                store=store,
                trial_id=tid,
                cell_index=index,
                classifier_retries=classifier_retries,
                classifier_sampling=classifier_sampling,
            )
        except TrialError as exc:
            progress("trial_failed", trial_id=tid, cell=point.key, error=str(exc))
            return point, None
        progress("trial_done", trial_id=tid, cell=point.key, values=list(record.values))
        return point, record

    if workers <= 1:
        outcomes = map(one, jobs)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        outcomes = pool.map(one, jobs)
    try:
        for point, record in outcomes:
            if record is None:
                failed[point] += 1
            else:
                new_trials.append(record)
    finally:
        if workers > 1:
            pool.shutdown()

    if store is not None:
        wanted = set(grid_points(pairs, grid, orders))
        trials = [
            t
            for t in store.load_trials(model_id=backend.model_id, strict=False).trials
            if GridPoint(t.pair, t.order, t.sampling) in wanted
        ]
    else:
        trials = new_trials
    results = GridResults.from_trials(trials, backend.model_id)
    for point, count in failed.items():
        results.cells.setdefault(point, CellResult()).failed += count
    progress("sweep_done", model=backend.model_id, trials=len(new_trials), failed=sum(failed.values()))
    return results


__all__ = [
    "CellResult",
    "GridPoint",
    "GridResults",
    "ORDERS",
    "TrialError",
    "emit_progress",
    "grid_points",
    "product_vector",
    "run_grid",
    "run_trial",
    "trial_id",
    "trial_seed",
]
