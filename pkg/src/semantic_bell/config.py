"""Run configuration: one YAML (or JSON) file describing backends, lexicon,
templates, personas, sampling grid and sweep parameters."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .agents import (
    Backend,
    BackendDescriptor,
    BackendKind,
    LexicalResponder,
    ReplayScript,
    constant_chooser,
    hidden_variable_chooser,
    noisy_chooser,
)
from .analysis import BenchmarkScores
from .core import (
    DEFAULT_LEXICON,
    DEFAULT_PERSONAS,
    DEFAULT_TEMPLATES,
    ConfigError,
    MeasurementSetting,
    SamplingConfig,
    SentenceTemplate,
    SettingLabel,
    WordPair,
    default_grid,
    default_settings,
    validate_lexicon,
)

_TOP_LEVEL = {
    "backends",
    "lexicon",
    "templates",
    "personas",
    "grid",
    "trials_per_point",
    "seed",
    "benchmarks",
    "outdir",
    "store",
    "classifier",
    "workers",
}


@dataclass
class RunConfig:
    backends: list[BackendDescriptor] = field(default_factory=list)
    backend_extras: dict[str, dict[str, Any]] = field(default_factory=dict)
    lexicon: list[WordPair] = field(default_factory=lambda: list(DEFAULT_LEXICON))
    templates: list[SentenceTemplate] = field(default_factory=lambda: list(DEFAULT_TEMPLATES))
    personas: dict[SettingLabel, str] = field(default_factory=lambda: dict(DEFAULT_PERSONAS))
    grid: list[SamplingConfig] = field(default_factory=default_grid)
    trials_per_point: int = 10
    seed: int = 0
    benchmarks: Path | None = None
    outdir: Path = Path("results")
    store: Path = Path("results/trials.jsonl")
    classifier_retries: int = 2
    classifier_sampling: SamplingConfig | None = None
    workers: int = 1
    source: Path | None = None

    @property
    def settings(self) -> tuple[MeasurementSetting, ...]:
        return default_settings(self.personas)

    def descriptor(self, model_id: str | None = None) -> BackendDescriptor:
        if not self.backends:
            raise ConfigError("no backends configured")
        if model_id is None:
            if len(self.backends) > 1:
                raise ConfigError("several backends configured; choose one with --model")
            return self.backends[0]
        for d in self.backends:
            if d.model_id == model_id:
                return d
        raise ConfigError(f"no backend with model_id {model_id!r}")

    def pair(self, key: str) -> WordPair:
        for p in self.lexicon:
            if p.key == key:
                return p
        raise ConfigError(f"no word pair {key!r} in lexicon")


def _resolve(base: Path | None, value: str | None) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() or base is None else base / p


def parse_grid(spec: Any, base: Path | None = None) -> list[SamplingConfig]:
    if spec is None or spec == "default":
        return default_grid()
    if isinstance(spec, str):
        path = _resolve(base, spec)
        with open(path, encoding="utf-8") as fh:
            spec = yaml.safe_load(fh)
        if isinstance(spec, Mapping):
            spec = spec.get("grid", spec)
    if not isinstance(spec, list) or not spec:
        raise ConfigError("grid must be 'default', a path, or a nonempty list of sampling configs")
    return [SamplingConfig.from_dict(entry) for entry in spec]


def config_from_dict(raw: Mapping[str, Any], base: Path | None = None) -> RunConfig:
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    cfg = RunConfig()
    for entry in raw.get("backends", []):
        entry = dict(entry)
        extras = {k: entry.pop(k) for k in ("replay_script", "responder") if k in entry}
        desc = BackendDescriptor.from_dict(entry)
        cfg.backends.append(desc)
        cfg.backend_extras[desc.model_id] = extras
    if "lexicon" in raw:
        cfg.lexicon = [WordPair.from_dict(p) for p in raw["lexicon"]]
    if "templates" in raw:
        cfg.templates = [SentenceTemplate(t) for t in raw["templates"]]
    if "personas" in raw:
        cfg.personas = {**DEFAULT_PERSONAS, **{SettingLabel(k): v for k, v in raw["personas"].items()}}
    cfg.grid = parse_grid(raw.get("grid"), base)
    cfg.trials_per_point = int(raw.get("trials_per_point", cfg.trials_per_point))
    cfg.seed = int(raw.get("seed", cfg.seed))
    cfg.benchmarks = _resolve(base, raw.get("benchmarks"))
    cfg.outdir = _resolve(base, raw.get("outdir")) or cfg.outdir
    cfg.store = _resolve(base, raw.get("store")) or cfg.outdir / "trials.jsonl"
    classifier = raw.get("classifier", {}) or {}
    cfg.classifier_retries = int(classifier.get("retries", cfg.classifier_retries))
    if classifier.get("sampling"):
        cfg.classifier_sampling = SamplingConfig.from_dict(classifier["sampling"])
    cfg.workers = int(raw.get("workers", cfg.workers))
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    report = validate_lexicon(cfg.lexicon)
    if not report.ok:
        raise ConfigError(f"invalid lexicon:\n{report}")
    if not cfg.templates:
        raise ConfigError("no sentence templates")
    for t in cfg.templates:
        t.check()
    if cfg.trials_per_point < 1:
        raise ConfigError("trials_per_point must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    cfg.settings  # raises on a bad persona mapping


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    cfg = config_from_dict(raw, path.parent)
    cfg.source = path
    return cfg


_CHOOSERS = {
    "constant": lambda opts: constant_chooser(int(opts.get("value", 1))),
    "hidden_variable": lambda opts: hidden_variable_chooser(),
    "noisy": lambda opts: noisy_chooser(float(opts.get("p_plus", 0.5)), float(opts.get("p_zero", 0.0))),
}


def build_backend(cfg: RunConfig, model_id: str | None = None, **kwargs) -> Backend:
    desc = cfg.descriptor(model_id)
    extras = cfg.backend_extras.get(desc.model_id, {})
    if desc.kind == BackendKind.REPLAY:
        script = extras.get("replay_script")
        if not script:
            raise ConfigError(f"replay backend {desc.model_id} needs replay_script")
        kwargs.setdefault("replay", ReplayScript.load(_resolve(cfg.source.parent if cfg.source else None, script)))
    elif desc.kind == BackendKind.SYNTHETIC:
        opts = dict(extras.get("responder") or {"kind": "hidden_variable"})
        kind = opts.pop("kind", "hidden_variable")
        if kind not in _CHOOSERS:
            raise ConfigError(f"unknown synthetic responder {kind!r}; choose from {sorted(_CHOOSERS)}")
        kwargs.setdefault("responder", LexicalResponder(cfg.lexicon, cfg.personas, _CHOOSERS[kind](opts)))
    return Backend(desc, **kwargs)


def load_benchmarks(path: str | Path) -> dict[str, BenchmarkScores]:
    """CSV with columns model, mmlu, hallucination, pushback; blank cells are missing."""
    table = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if "model" not in (reader.fieldnames or []):
                raise ConfigError(f"{path}: benchmark table needs a 'model' column")
            for row in reader:
                values = {k: _score(row, k) for k in ("mmlu", "hallucination", "pushback")}
                if any(v is not None for v in values.values()):
                    table[row["model"].strip()] = BenchmarkScores(**values)
    except OSError as exc:
        raise ConfigError(f"cannot read benchmarks {path}: {exc}") from exc
    return table


def _score(row: Mapping[str, str], key: str) -> float | None:
    v = (row.get(key) or "").strip()
    if not v:
        return None
    try:
        x = float(v)
    except ValueError as exc:
        raise ConfigError(f"bad {key} value {v!r} for {row['model']}") from exc
    if not math.isfinite(x):
        raise ConfigError(f"non-finite {key} for {row['model']}")
    return x
