"""Domain vocabulary: word pairs, templates, settings, sampling configs, trials."""

from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence


class ConfigError(ValueError):
    pass


class MalformedTemplate(ConfigError):
    pass


class WordOrder(str, enum.Enum):
    ORIGINAL = "original"
    FLIPPED = "flipped"


class Party(str, enum.Enum):
    ALICE = "alice"
    BOB = "bob"


class SettingLabel(str, enum.Enum):
    A = "A"
    A_PRIME = "A'"
    B = "B"
    B_PRIME = "B'"

    @property
    def party(self) -> Party:
        return Party.ALICE if self in (SettingLabel.A, SettingLabel.A_PRIME) else Party.BOB


SETTING_LABELS: tuple[SettingLabel, ...] = tuple(SettingLabel)

DEFAULT_PERSONAS: dict[SettingLabel, str] = {
    SettingLabel.A: "You are a foreign surgeon",
    SettingLabel.A_PRIME: "You are a bus driver",
    SettingLabel.B: "You are haunted by past mistakes",
    SettingLabel.B_PRIME: "You are a sales rep",
}


@dataclass(frozen=True)
class WordPair:
    """Two ambiguous words, each with a (plus, minus) pair of sense labels.

    The first sense of each word is encoded as +1, the second as -1.
    """

    word1: str
    word2: str
    senses1: tuple[str, str]
    senses2: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "senses1", tuple(self.senses1))
        object.__setattr__(self, "senses2", tuple(self.senses2))

    @property
    def key(self) -> str:
        return f"{self.word1}/{self.word2}"

    def senses_for(self, word: str) -> tuple[str, str]:
        if word == self.word1:
            return self.senses1
        if word == self.word2:
            return self.senses2
        raise KeyError(word)

    def violations(self) -> list[str]:
        problems = []
        if not self.word1 or not self.word2:
            problems.append("empty word")
        if self.word1 == self.word2:
            problems.append("identical words")
        for senses in (self.senses1, self.senses2):
            if len(senses) != 2 or not all(isinstance(s, str) and s.strip() for s in senses):
                problems.append("empty sense label")
            elif senses[0].strip().lower() == senses[1].strip().lower():
                problems.append("duplicate senses")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "word1": self.word1,
            "word2": self.word2,
            "senses1": list(self.senses1),
            "senses2": list(self.senses2),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "WordPair":
        return cls(d["word1"], d["word2"], tuple(d["senses1"]), tuple(d["senses2"]))


_SLOT_RE = re.compile(r"\{(word1|word2)\}")


@dataclass(frozen=True)
class SentenceTemplate:
    pattern: str

    def check(self) -> None:
        for slot in ("{word1}", "{word2}"):
            count = self.pattern.count(slot)
            if count != 1:
                raise MalformedTemplate(f"slot {slot} appears {count} times in {self.pattern!r}")


def render_sentence(pair: WordPair, template: SentenceTemplate, order: WordOrder) -> str:
    template.check()
    first, second = (pair.word1, pair.word2) if order == WordOrder.ORIGINAL else (pair.word2, pair.word1)
    fill = {"word1": first, "word2": second}
    # single pass so a word containing "{word2}" cannot be re-substituted
    return _SLOT_RE.sub(lambda m: fill[m.group(1)], template.pattern)


@dataclass(frozen=True)
class MeasurementSetting:
    party: Party
    label: SettingLabel
    persona: str

    def __post_init__(self):
        if self.label.party != self.party:
            raise ConfigError(f"setting {self.label.value} cannot belong to {self.party.value}")


def default_settings(personas: Mapping[SettingLabel, str] | None = None) -> tuple[MeasurementSetting, ...]:
    personas = {**DEFAULT_PERSONAS, **(personas or {})}
    return tuple(MeasurementSetting(label.party, label, personas[label]) for label in SETTING_LABELS)


def check_settings(settings: Sequence[MeasurementSetting]) -> None:
    labels = [s.label for s in settings]
    if sorted(labels) != sorted(SETTING_LABELS):
        raise ConfigError(f"settings must cover exactly A, A', B, B'; got {[l.value for l in labels]}")


SAMPLING_FIELDS = ("temperature", "top_p", "top_k")


@dataclass(frozen=True)
class SamplingConfig:
    """Sampling parameters; ``None`` means the backend default."""

    temperature: float | None = None
    top_p: float | None = None
    top_k: int | None = None

    def __post_init__(self):
        if self.temperature is not None and not self.temperature >= 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.top_p is not None and not 0 < self.top_p <= 1:
            raise ConfigError(f"top_p must lie in (0, 1], got {self.top_p}")
        if self.top_k is not None and (int(self.top_k) != self.top_k or self.top_k < 1):
            raise ConfigError(f"top_k must be a positive integer, got {self.top_k}")

    def fields(self) -> dict[str, float | int]:
        return {k: getattr(self, k) for k in SAMPLING_FIELDS if getattr(self, k) is not None}

    @property
    def key(self) -> str:
        return ",".join(f"{k}={getattr(self, k)}" for k in SAMPLING_FIELDS)

    def to_dict(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in SAMPLING_FIELDS}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SamplingConfig":
        return cls(d.get("temperature"), d.get("top_p"), d.get("top_k"))


GRID_TEMPERATURES = (0.2, 1.0, 1.8)
GRID_TOP_P = (0.7, 0.9, 1.0)
GRID_TOP_K = (10, 50, 100)


def default_grid() -> list[SamplingConfig]:
    """The 3x3x3 sweep, temperature-major then top_p then top_k."""
    return [
        SamplingConfig(t, p, k)
        for t, p, k in itertools.product(GRID_TEMPERATURES, GRID_TOP_P, GRID_TOP_K)
    ]


@dataclass(frozen=True)
class Outcome:
    value: int
    raw_interpretation: str = ""
    classification_label: str = ""

    def __post_init__(self):
        if self.value not in (1, -1, 0):
            raise ValueError(f"outcome must be +1, -1 or 0, got {self.value}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "raw_interpretation": self.raw_interpretation,
            "classification_label": self.classification_label,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Outcome":
        return cls(int(d["value"]), d.get("raw_interpretation", ""), d.get("classification_label", ""))


@dataclass(frozen=True)
class AgentCall:
    """One logged request/response exchange with a backend."""

    role: str  # "interpret" or "classify"
    system: str
    user: str
    sent_sampling: Mapping[str, Any]
    response: str | None
    started: float
    finished: float
    error: str | None = None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "role": self.role,
            "system": self.system,
            "user": self.user,
            "sent_sampling": dict(self.sent_sampling),
            "response": self.response,
            "started": self.started,
            "finished": self.finished,
            "error": self.error,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AgentCall":
        return cls(
            role=d["role"],
            system=d["system"],
            user=d["user"],
            sent_sampling=dict(d.get("sent_sampling", {})),
            response=d.get("response"),
            started=d["started"],
            finished=d["finished"],
            error=d.get("error"),
            warnings=tuple(d.get("warnings", ())),
        )


@dataclass(frozen=True)
class TrialRecord:
    """A complete four-setting trial.

    ``outcomes`` maps every setting label to an Outcome; ``calls`` holds the
    verbatim per-setting exchanges (interpretation first, then classifications).
    """

    trial_id: str
    model_id: str
    pair: WordPair
    template: SentenceTemplate
    order: WordOrder
    sampling: SamplingConfig
    outcomes: Mapping[SettingLabel, Outcome]
    seed: int
    sentence: str = ""
    cell_index: int = 0
    calls: Mapping[SettingLabel, tuple[AgentCall, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.outcomes) != set(SETTING_LABELS):
            raise ValueError("outcomes must have exactly the labels A, A', B, B'")

    @property
    def values(self) -> tuple[int, int, int, int]:
        """(a, a', b, b')"""
        return tuple(self.outcomes[label].value for label in SETTING_LABELS)

    @property
    def complete(self) -> bool:
        return all(v != 0 for v in self.values)

    @property
    def partial(self) -> bool:
        return not self.complete

    def word_for(self, label: SettingLabel) -> str:
        return self.pair.word1 if label.party == Party.ALICE else self.pair.word2

    def to_dict(self) -> dict[str, Any]:
        return {
            "trial_id": self.trial_id,
            "model_id": self.model_id,
            "pair": self.pair.to_dict(),
            "template": self.template.pattern,
            "order": self.order.value,
            "sampling": self.sampling.to_dict(),
            "outcomes": {label.value: self.outcomes[label].to_dict() for label in SETTING_LABELS},
            "seed": self.seed,
            "sentence": self.sentence,
            "cell_index": self.cell_index,
            "calls": {
                label.value: [c.to_dict() for c in calls] for label, calls in self.calls.items()
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "TrialRecord":
        return cls(
            trial_id=d["trial_id"],
            model_id=d["model_id"],
            pair=WordPair.from_dict(d["pair"]),
            template=SentenceTemplate(d["template"]),
            order=WordOrder(d["order"]),
            sampling=SamplingConfig.from_dict(d["sampling"]),
            outcomes={SettingLabel(k): Outcome.from_dict(v) for k, v in d["outcomes"].items()},
            seed=int(d["seed"]),
            sentence=d.get("sentence", ""),
            cell_index=int(d.get("cell_index", 0)),
            calls={
                SettingLabel(k): tuple(AgentCall.from_dict(c) for c in v)
                for k, v in d.get("calls", {}).items()
            },
        )


@dataclass(frozen=True)
class LexiconReport:
    violations: tuple[tuple[int, str], ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"pair {i}: {reason}" for i, reason in self.violations)


def validate_lexicon(lexicon: Sequence[WordPair]) -> LexiconReport:
    violations: list[tuple[int, str]] = []
    seen: dict[tuple[str, str], int] = {}
    for i, pair in enumerate(lexicon):
        violations.extend((i, reason) for reason in pair.violations())
        ident = (pair.word1, pair.word2)
        if ident in seen:
            violations.append((i, f"duplicate pair (same as pair {seen[ident]})"))
        else:
            seen[ident] = i
    return LexiconReport(tuple(violations))


# Senses beyond bank are editable defaults; override them in the config lexicon.
DEFAULT_LEXICON: tuple[WordPair, ...] = (
    WordPair("bank", "bat", ("financial institution", "river bank"), ("flying mammal", "sports club")),
    WordPair("crane", "pen", ("bird", "construction machine"), ("writing instrument", "animal enclosure")),
    WordPair("nail", "mouse", ("fingernail", "metal fastener"), ("rodent", "computer device")),
    WordPair("bulb", "plant", ("light bulb", "flower bulb"), ("living organism", "factory")),
    WordPair("palm", "iris", ("palm of the hand", "palm tree"), ("part of the eye", "flower")),
)

DEFAULT_TEMPLATES: tuple[SentenceTemplate, ...] = (
    SentenceTemplate("The {word1} was settled near the {word2}."),
    SentenceTemplate("Nobody expected the {word1} to end up beside the {word2}."),
    SentenceTemplate("She kept thinking about the {word1} and the {word2}."),
)
