"""Estimator comparisons on synthetic sources with known CHSH values."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .agents import (
    ALL_STRATEGIES,
    CANONICAL_ANGLES,
    hidden_variable_outcomes,
    local_mixture_samples,
    pr_box_samples,
    signed_combination,
    singlet_samples,
)
from .chsh import (
    ALGEBRAIC_MAXIMUM,
    CLASSICAL_BOUND,
    TSIRELSON_BOUND,
    EstimatorMode,
    chsh_literal,
    chsh_signed,
)
from .core import (
    DEFAULT_LEXICON,
    DEFAULT_TEMPLATES,
    SETTING_LABELS,
    Outcome,
    SamplingConfig,
    TrialRecord,
    WordOrder,
)


def synthetic_trial(
    values: Sequence[int],
    *,
    index: int = 0,
    model_id: str = "synthetic",
    order: WordOrder = WordOrder.ORIGINAL,
    sampling: SamplingConfig = SamplingConfig(),
) -> TrialRecord:
    """A TrialRecord carrying raw outcomes ordered (a, a', b, b')."""
    return TrialRecord(
        trial_id=f"{model_id}-{index}",
        model_id=model_id,
        pair=DEFAULT_LEXICON[0],
        template=DEFAULT_TEMPLATES[0],
        order=order,
        sampling=sampling,
        outcomes={label: Outcome(int(v)) for label, v in zip(SETTING_LABELS, values)},
        seed=index,
        cell_index=index,
    )


def _pairwise_from_arrays(blocks) -> list[tuple[str, int, int]]:
    samples = []
    for name, a, b in blocks:
        samples.extend(zip(itertools.repeat(name), a.tolist(), b.tolist()))
    return samples


@dataclass(frozen=True)
class SuiteRow:
    source: str
    estimator: str
    s: float
    reference: float
    note: str = ""


def run_synthetic_suite(seed: int = 0, n_per_pair: int = 100_000, n_mixture_trials: int = 1_000) -> list[SuiteRow]:
    rng = np.random.default_rng(seed)
    rows = []

    best = max(abs(signed_combination(hidden_variable_outcomes(s))) for s in ALL_STRATEGIES)
    rows.append(SuiteRow("local strategies (16)", "max |per-trial signed|", float(best), CLASSICAL_BOUND))

    picks = rng.integers(len(ALL_STRATEGIES), size=n_mixture_trials)
    trials = [synthetic_trial(hidden_variable_outcomes(ALL_STRATEGIES[k]), index=i) for i, k in enumerate(picks)]
    rows.append(SuiteRow("local mixture", "joint signed", chsh_signed(trials, EstimatorMode.JOINT), CLASSICAL_BOUND))
    rows.append(SuiteRow("local mixture", "joint literal", chsh_literal(trials).s_literal, CLASSICAL_BOUND,
                         "density-matrix estimator collapses to 2 on complete data"))
    weights = dict(zip(ALL_STRATEGIES, np.bincount(picks, minlength=16).tolist()))
    rows.append(SuiteRow("local mixture", "pairwise signed",
                         chsh_signed(local_mixture_samples(weights), EstimatorMode.PAIRWISE), CLASSICAL_BOUND))

    pr = pr_box_samples(n_per_pair // 100 or 1, rng)
    rows.append(SuiteRow("PR box", "pairwise signed", chsh_signed(pr, EstimatorMode.PAIRWISE), ALGEBRAIC_MAXIMUM))

    singlet = _pairwise_from_arrays(singlet_samples(n_per_pair, rng, CANONICAL_ANGLES))
    rows.append(SuiteRow("singlet, canonical angles", "pairwise signed",
                         chsh_signed(singlet, EstimatorMode.PAIRWISE), TSIRELSON_BOUND))
    return rows


def format_suite(rows: Sequence[SuiteRow]) -> str:
    lines = [f"{'source':<28}{'estimator':<26}{'S':>10}{'reference':>11}"]
    for r in rows:
        lines.append(f"{r.source:<28}{r.estimator:<26}{r.s:>10.4f}{r.reference:>11.4f}" + (f"  {r.note}" if r.note else ""))
    return "\n".join(lines)
