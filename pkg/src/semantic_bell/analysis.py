"""Statistics over per-grid-point S values, word-order effects, benchmark correlation."""

from __future__ import annotations

import enum
import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .chsh import CLASSICAL_BOUND
from .core import SETTING_LABELS, SamplingConfig, SettingLabel, TrialRecord, WordOrder
from .protocol import GridResults

EXACT_PERMUTATION_MAX_N = 8
ORDER_EFFECT_THRESHOLD = 0.5


class Marker(enum.Enum):
    DEGENERATE_VARIANCE = "degenerate_variance"

    def __repr__(self) -> str:
        return self.value


DEGENERATE_VARIANCE = Marker.DEGENERATE_VARIANCE


class EmptyResults(ValueError):
    pass


class NoValidOutcomes(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class DistributionStats:
    n: int
    mean: float
    std: float
    skewness: float | Marker
    excess_kurtosis: float | Marker
    q1: float
    q3: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def distribution_stats(values: Sequence[float]) -> DistributionStats:
    """Population moments and linearly interpolated quartiles.

    sigma = sqrt(m2), skewness = m3 / m2**1.5, excess kurtosis = m4 / m2**2 - 3,
    quantile q at fractional rank q*(n-1) of the sorted values.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyResults("need at least one value")
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev**2))
    if m2 <= 1e-14 * max(1.0, mean * mean):
        skew = kurt = DEGENERATE_VARIANCE
        m2 = 0.0
    else:
        skew = float(np.mean(dev**3) / m2**1.5)
        kurt = float(np.mean(dev**4) / m2**2 - 3.0)
    q1, q3 = np.quantile(x, [0.25, 0.75], method="linear")
    return DistributionStats(int(x.size), mean, math.sqrt(m2), skew, kurt, float(q1), float(q3))


def violation_rate(values: Sequence[float], bound: float = CLASSICAL_BOUND) -> float:
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise EmptyResults("need at least one value")
    return float(np.count_nonzero(np.abs(x) > bound) / x.size)


@dataclass(frozen=True)
class ModelDistributionSummary:
    model_id: str
    n: int
    mean: float
    std: float
    skewness: float | Marker
    excess_kurtosis: float | Marker
    iqr: float
    violation_rate: float

    def row(self) -> dict:
        def fmt(v):
            return v.value if isinstance(v, Marker) else v

        return {
            "model": self.model_id,
            "n": self.n,
            "mean": self.mean,
            "sigma": self.std,
            "gamma1": fmt(self.skewness),
            "kappa": fmt(self.excess_kurtosis),
            "IQR": self.iqr,
            "viol": self.violation_rate,
        }


def summarize_values(model_id: str, values: Sequence[float]) -> ModelDistributionSummary:
    d = distribution_stats(values)
    return ModelDistributionSummary(
        model_id, d.n, d.mean, d.std, d.skewness, d.excess_kurtosis, d.iqr, violation_rate(values)
    )


def summarize_model(results: GridResults) -> ModelDistributionSummary:
    values = results.s_values()
    if not values:
        raise EmptyResults(f"{results.model_id}: no grid point has a valid CHSH result")
    return summarize_values(results.model_id, values)


# word-order effects --------------------------------------------------------


def meaning_probability(trials: Iterable[TrialRecord], word: str, lens: SettingLabel | str) -> float:
    """Share of +1 among nonzero outcomes of ``word`` under setting ``lens``."""
    lens = SettingLabel(lens)
    values = [
        t.outcomes[lens].value for t in trials if t.word_for(lens) == word and t.outcomes[lens].value != 0
    ]
    if not values:
        raise NoValidOutcomes(f"no nonzero outcomes for {word!r} under {lens.value}")
    return values.count(1) / len(values)


@dataclass(frozen=True)
class OrderEffectRecord:
    word: str
    lens: SettingLabel
    sampling: SamplingConfig
    p_original: float
    p_flipped: float
    model_id: str = ""

    @property
    def delta(self) -> float:
        return abs(self.p_original - self.p_flipped)


@dataclass
class OrderEffects:
    records: list[OrderEffectRecord] = field(default_factory=list)
    skipped: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def count_above(self, threshold: float = ORDER_EFFECT_THRESHOLD) -> int:
        return sum(r.delta > threshold for r in self.records)

    def summary(self, threshold: float = ORDER_EFFECT_THRESHOLD) -> dict:
        n = len(self.records)
        above = self.count_above(threshold)
        return {
            "cells": n,
            "skipped": self.skipped,
            "threshold": threshold,
            "above_threshold": above,
            "fraction_above": above / n if n else 0.0,
        }


def order_effects(results: GridResults | Iterable[TrialRecord]) -> OrderEffects:
    """Pair P(meaning A) across word orders for every (word, lens, sampling) cell.

    Probabilities pool all trials (any template) of a cell and order. Cells
    seen in only one order, or without nonzero outcomes, are counted in
    ``skipped``.
    """
    if isinstance(results, GridResults):
        trials, model_id = results.trials, results.model_id
    else:
        trials = list(results)
        ids = {t.model_id for t in trials}
        model_id = ids.pop() if len(ids) == 1 else ""
    buckets: dict[tuple, dict[WordOrder, list[TrialRecord]]] = defaultdict(lambda: defaultdict(list))
    for t in trials:
        for lens in SETTING_LABELS:
            buckets[(t.word_for(lens), lens, t.sampling)][t.order].append(t)

    out = OrderEffects()
    for (word, lens, sampling), by_order in sorted(buckets.items(), key=lambda kv: _cell_key(kv[0])):
        try:
            p_orig = meaning_probability(by_order.get(WordOrder.ORIGINAL, []), word, lens)
            p_flip = meaning_probability(by_order.get(WordOrder.FLIPPED, []), word, lens)
        except NoValidOutcomes:
            out.skipped += 1
            continue
        out.records.append(OrderEffectRecord(word, lens, sampling, p_orig, p_flip, model_id))
    return out


def _cell_key(key):
    word, lens, s = key
    big = float("inf")
    return (
        word,
        SETTING_LABELS.index(lens),
        big if s.temperature is None else s.temperature,
        big if s.top_p is None else s.top_p,
        big if s.top_k is None else s.top_k,
    )


# rank correlation ----------------------------------------------------------


def average_ranks(values: Sequence[float]) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        # tied block gets the mean of 1-based ranks i+1..j+1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        raise InsufficientData("correlation undefined for constant input")
    return max(-1.0, min(1.0, float(dx @ dy) / denom))


def _check_pairs(x, y) -> tuple[np.ndarray, np.ndarray]:
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} != {len(y)}")
    if len(x) < 3:
        raise InsufficientData(f"need at least 3 pairs, got {len(x)}")
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rho (average ranks for ties) and two-sided p-value.

    The p-value is exact over all n! permutations for n <= 8, otherwise from
    the t approximation with n - 2 degrees of freedom.
    """
    x, y = _check_pairs(x, y)
    rx, ry = average_ranks(x), average_ranks(y)
    rho = _pearson(rx, ry)
    n = len(x)
    if n <= EXACT_PERMUTATION_MAX_N:
        dx = rx - rx.mean()
        dy = ry - ry.mean()
        scale = math.sqrt(float(dx @ dx) * float(dy @ dy))
        observed = abs(rho) - 1e-12
        hits = total = 0
        for perm in itertools.permutations(range(n)):
            total += 1
            if abs(float(dx @ dy[list(perm)]) / scale) >= observed:
                hits += 1
        return rho, hits / total
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(min(1.0, 2.0 * stats.t.sf(abs(t), n - 2)))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x, y = _check_pairs(x, y)
    r = _pearson(x, y)
    n = len(x)
    if abs(r) >= 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(min(1.0, 2.0 * stats.t.sf(abs(t), n - 2)))


BENCHMARK_NAMES = ("mmlu", "hallucination", "pushback")
STATISTIC_NAMES = ("IQR", "viol")


@dataclass(frozen=True)
class BenchmarkScores:
    mmlu: float | None = None
    hallucination: float | None = None
    pushback: float | None = None

    def __post_init__(self):
        present = [v for v in (self.mmlu, self.hallucination, self.pushback) if v is not None]
        if not present:
            raise ValueError("at least one benchmark value is required")
        if not all(math.isfinite(v) for v in present):
            raise ValueError("benchmark values must be finite")


BenchmarkTable = Mapping[str, BenchmarkScores]


@dataclass(frozen=True)
class CorrelationRecord:
    statistic: str
    benchmark: str
    rho: float
    p_value: float
    n: int
    pearson_r: float
    pearson_p: float
    models: tuple[str, ...] = ()


@dataclass
class BenchmarkCorrelations:
    records: list[CorrelationRecord] = field(default_factory=list)
    insufficient: dict[str, str] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _statistic(summary: ModelDistributionSummary, name: str) -> float:
    return summary.iqr if name == "IQR" else summary.violation_rate


def correlate_benchmarks(
    summaries: Sequence[ModelDistributionSummary], benchmarks: BenchmarkTable
) -> BenchmarkCorrelations:
    """Spearman (and Pearson) of IQR and violation rate against each benchmark.

    Only models present in both inputs with a value for the benchmark count;
    a benchmark with fewer than 3 such models is reported in ``insufficient``.
    """
    by_model = {s.model_id: s for s in summaries}
    out = BenchmarkCorrelations()
    for bench in BENCHMARK_NAMES:
        models = sorted(
            m for m in by_model if m in benchmarks and getattr(benchmarks[m], bench) is not None
        )
        if len(models) < 3:
            out.insufficient[bench] = f"InsufficientData: {len(models)} models with {bench} scores"
            continue
        scores = [getattr(benchmarks[m], bench) for m in models]
        for stat in STATISTIC_NAMES:
            values = [_statistic(by_model[m], stat) for m in models]
            try:
                rho, p = spearman(values, scores)
                r, rp = pearson(values, scores)
            except InsufficientData as exc:
                out.insufficient[f"{stat}/{bench}"] = f"InsufficientData: {exc}"
                continue
            out.records.append(CorrelationRecord(stat, bench, rho, p, len(models), r, rp, tuple(models)))
    return out


# sampling-grid table -------------------------------------------------------


@dataclass(frozen=True)
class GridCellSummary:
    sampling: SamplingConfig
    mean: float
    std: float
    n: int

    @property
    def bold(self) -> bool:
        return abs(self.mean) > CLASSICAL_BOUND


def sampling_table(results: GridResults) -> list[GridCellSummary]:
    """Mean and population std of S per sampling config, pooled over pairs and orders."""
    pooled: dict[SamplingConfig, list[float]] = defaultdict(list)
    for point, res in results.valid().items():
        pooled[point.sampling].append(res.s_literal)
    rows = []
    for sampling, values in pooled.items():
        x = np.asarray(values)
        rows.append(GridCellSummary(sampling, float(x.mean()), float(x.std()), len(values)))
    return sorted(rows, key=lambda r: _cell_key(("", SettingLabel.A, r.sampling)))
