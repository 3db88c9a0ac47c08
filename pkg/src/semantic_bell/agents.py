"""Agents: chat-completion backends, replay/synthetic backends, classifier, and
outcome-level synthetic sources (local hidden variables, PR box, singlet)."""

from __future__ import annotations

import collections
import enum
import hashlib
import itertools
import json
import logging
import math
import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

import httpx
import numpy as np

from .core import (
    SAMPLING_FIELDS,
    AgentCall,
    ConfigError,
    Outcome,
    SamplingConfig,
    SettingLabel,
    WordOrder,
    WordPair,
)

log = logging.getLogger(__name__)


class BackendUnavailable(RuntimeError):
    def __init__(self, message: str, call: AgentCall | None = None):
        super().__init__(message)
        self.call = call


class AuthError(BackendUnavailable):
    pass


class ReplayExhausted(RuntimeError):
    pass


class BackendKind(str, enum.Enum):
    OPENAI = "openai"
    OLLAMA = "ollama"
    ANTHROPIC = "anthropic"
    GEMINI = "gemini"
    REPLAY = "replay"
    SYNTHETIC = "synthetic"


ALL_CAPABILITIES = frozenset(SAMPLING_FIELDS)

DEFAULT_CAPABILITIES = {
    BackendKind.OPENAI: frozenset({"temperature", "top_p"}),
    BackendKind.OLLAMA: ALL_CAPABILITIES,
    # the Messages API rejects most combinations of sampling fields
    BackendKind.ANTHROPIC: frozenset({"temperature"}),
    BackendKind.GEMINI: ALL_CAPABILITIES,
    BackendKind.REPLAY: ALL_CAPABILITIES,
    BackendKind.SYNTHETIC: ALL_CAPABILITIES,
}


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    model_id: str
    endpoint: str = ""
    auth_env: str | None = None
    capabilities: frozenset[str] | None = None
    rate_limit: float | None = None  # requests per second
    retry_budget: int = 2
    backoff: float = 0.5
    timeout: float = 60.0
    max_tokens: int = 200

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        caps = DEFAULT_CAPABILITIES[self.kind] if self.capabilities is None else frozenset(self.capabilities)
        if not caps <= ALL_CAPABILITIES:
            raise ConfigError(f"unknown capabilities {sorted(caps - ALL_CAPABILITIES)}")
        object.__setattr__(self, "capabilities", caps)
        if self.retry_budget < 0:
            raise ConfigError("retry_budget must be >= 0")
        if self.rate_limit is not None and self.rate_limit <= 0:
            raise ConfigError("rate_limit must be positive")
        if self.kind in (BackendKind.OPENAI, BackendKind.OLLAMA, BackendKind.ANTHROPIC, BackendKind.GEMINI):
            if not self.endpoint:
                raise ConfigError(f"{self.kind.value} backend needs an endpoint")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BackendDescriptor":
        d = dict(d)
        if "capabilities" in d and d["capabilities"] is not None:
            d["capabilities"] = frozenset(d["capabilities"])
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown backend keys {sorted(unknown)}")
        return cls(**d)


def request_digest(system: str, user: str, sampling: Mapping[str, Any]) -> str:
    payload = json.dumps({"system": system, "user": user, "sampling": dict(sampling)}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ReplayScript:
    """Scripted responses keyed by request digest.

    Entries are consumed in order: a request takes the earliest unconsumed
    entry whose digest matches, falling back to the earliest unconsumed
    wildcard (``"*"``) entry. Running out is an error.
    """

    WILDCARD = "*"

    def __init__(self, entries: Iterable[tuple[str, str]] = ()):
        self.entries = [(str(d), str(r)) for d, r in entries]
        self._queues: dict[str, collections.deque[int]] = collections.defaultdict(collections.deque)
        for i, (digest, _) in enumerate(self.entries):
            self._queues[digest].append(i)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def remaining(self) -> int:
        with self._lock:
            return sum(len(q) for q in self._queues.values())

    def next_response(self, digest: str) -> str:
        with self._lock:
            queue = self._queues.get(digest) or self._queues.get(self.WILDCARD)
            if not queue:
                raise ReplayExhausted(f"no scripted response left for digest {digest[:12]}")
            return self.entries[queue.popleft()][1]

    @classmethod
    def from_responses(cls, responses: Iterable[str]) -> "ReplayScript":
        return cls((cls.WILDCARD, r) for r in responses)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ReplayScript":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    entries.append((row["digest"], row["response"]))
        return cls(entries)

    @staticmethod
    def save(recording: Iterable[Mapping[str, Any]], path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in recording:
                fh.write(json.dumps(dict(row), sort_keys=True) + "\n")


Responder = Callable[[str, str, SamplingConfig, np.random.Generator], str]


class _RateLimiter:
    def __init__(self, rate: float | None):
        self.interval = 0.0 if rate is None else 1.0 / rate
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            time.sleep(slot - now)


class Backend:
    """A shareable handle over one model endpoint.

    Safe for concurrent use: rate limiting, replay consumption and recording
    are all lock-protected. ``transport`` is passed to httpx (tests use
    ``httpx.MockTransport``).
    """

    def __init__(
        self,
        descriptor: BackendDescriptor,
        *,
        replay: ReplayScript | None = None,
        responder: Responder | None = None,
        transport: httpx.BaseTransport | None = None,
        record: bool = False,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.descriptor = descriptor
        if descriptor.kind == BackendKind.REPLAY and replay is None:
            raise ConfigError("replay backend needs a ReplayScript")
        if descriptor.kind == BackendKind.SYNTHETIC and responder is None:
            raise ConfigError("synthetic backend needs a responder")
        self.replay = replay
        self.responder = responder
        self._transport = transport
        self._client: httpx.Client | None = None
        self._client_lock = threading.Lock()
        self._limiter = _RateLimiter(descriptor.rate_limit)
        self._sleep = sleep
        self.recording: list[dict[str, Any]] | None = [] if record else None
        self._record_lock = threading.Lock()

    @property
    def model_id(self) -> str:
        return self.descriptor.model_id

    @property
    def kind(self) -> BackendKind:
        return self.descriptor.kind

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def gate(self, sampling: SamplingConfig) -> tuple[dict[str, Any], tuple[str, ...]]:
        """Split sampling fields into those the backend accepts and warnings for the rest."""
        sent, warnings = {}, []
        for name, value in sampling.fields().items():
            if name in self.descriptor.capabilities:
                sent[name] = value
            else:
                warnings.append(f"{name}={value} dropped: unsupported by {self.kind.value} backend")
        for w in warnings:
            log.warning("%s: %s", self.model_id, w)
        return sent, tuple(warnings)

    def call(
        self,
        system: str,
        user: str,
        sampling: SamplingConfig,
        *,
        role: str = "interpret",
        rng: np.random.Generator | None = None,
    ) -> AgentCall:
        sent, warnings = self.gate(sampling)
        started = time.time()
        digest = request_digest(system, user, sent)
        error = None
        response = None
        attempts = self.descriptor.retry_budget + 1
        for attempt in range(attempts):
            try:
                response = self._dispatch(system, user, sent, sampling, digest, rng)
                break
            except AuthError as exc:
                call = AgentCall(role, system, user, sent, None, started, time.time(), f"auth: {exc}", warnings)
                raise AuthError(str(exc), call) from exc
            except _Retryable as exc:
                error = str(exc)
                log.info("%s attempt %d/%d failed: %s", self.model_id, attempt + 1, attempts, error)
                if attempt + 1 < attempts and self.descriptor.backoff:
                    self._sleep(self.descriptor.backoff * 2**attempt)
        if response is None:
            call = AgentCall(role, system, user, sent, None, started, time.time(), error, warnings)
            raise BackendUnavailable(f"{self.model_id}: gave up after {attempts} attempts ({error})", call)
        log.debug("request %s system=%r user=%r sampling=%r -> %r", digest[:12], system, user, sent, response)
        if self.recording is not None:
            with self._record_lock:
                self.recording.append(
                    {"digest": digest, "system": system, "user": user, "sampling": sent, "response": response}
                )
        return AgentCall(role, system, user, sent, response, started, time.time(), None, warnings)

    # dispatch ---------------------------------------------------------------

    def _dispatch(self, system, user, sent, sampling, digest, rng) -> str:
        kind = self.kind
        if kind == BackendKind.REPLAY:
            return self.replay.next_response(digest)
        if kind == BackendKind.SYNTHETIC:
            gated = SamplingConfig(**{k: sent.get(k) for k in SAMPLING_FIELDS})
            return self.responder(system, user, gated, rng if rng is not None else np.random.default_rng())
        self._limiter.wait()
        url, headers, body = _build_request(self.descriptor, system, user, sent)
        try:
            resp = self._http().post(url, headers=headers, json=body)
        except httpx.HTTPError as exc:
            raise _Retryable(f"{type(exc).__name__}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise _Retryable(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise _Retryable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return _extract_text(kind, resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise _Retryable(f"malformed response: {exc}") from exc

    def _http(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                self._client = httpx.Client(timeout=self.descriptor.timeout, transport=self._transport)
            return self._client


class _Retryable(Exception):
    pass


def _credential(desc: BackendDescriptor) -> str | None:
    if not desc.auth_env:
        return None
    value = os.environ.get(desc.auth_env)
    if not value:
        raise AuthError(f"environment variable {desc.auth_env} is not set")
    return value


def _build_request(desc: BackendDescriptor, system: str, user: str, sent: Mapping[str, Any]):
    token = _credential(desc)
    base = desc.endpoint.rstrip("/")
    headers: dict[str, str] = {}
    kind = desc.kind
    if kind == BackendKind.OPENAI:
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": desc.model_id,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
            "max_tokens": desc.max_tokens,
            **sent,
        }
        return f"{base}/chat/completions", headers, body
    if kind == BackendKind.OLLAMA:
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": desc.model_id,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
            "stream": False,
            "options": {**sent, "num_predict": desc.max_tokens},
        }
        return f"{base}/api/chat", headers, body
    if kind == BackendKind.ANTHROPIC:
        headers["anthropic-version"] = "2023-06-01"
        if token:
            headers["x-api-key"] = token
        body = {
            "model": desc.model_id,
            "system": system,
            "messages": [{"role": "user", "content": user}],
            "max_tokens": desc.max_tokens,
            **sent,
        }
        return f"{base}/v1/messages", headers, body
    if kind == BackendKind.GEMINI:
        if token:
            headers["x-goog-api-key"] = token
        gen = {"maxOutputTokens": desc.max_tokens}
        names = {"temperature": "temperature", "top_p": "topP", "top_k": "topK"}
        gen.update({names[k]: v for k, v in sent.items()})
        body = {
            "systemInstruction": {"parts": [{"text": system}]},
            "contents": [{"role": "user", "parts": [{"text": user}]}],
            "generationConfig": gen,
        }
        return f"{base}/v1beta/models/{desc.model_id}:generateContent", headers, body
    raise ConfigError(f"no HTTP wire format for {kind}")


def _extract_text(kind: BackendKind, payload: Mapping[str, Any]) -> str:
    if kind == BackendKind.OPENAI:
        text = payload["choices"][0]["message"]["content"]
    elif kind == BackendKind.OLLAMA:
        text = payload["message"]["content"]
    elif kind == BackendKind.ANTHROPIC:
        text = "".join(block["text"] for block in payload["content"] if block.get("type") == "text")
    elif kind == BackendKind.GEMINI:
        text = "".join(part.get("text", "") for part in payload["candidates"][0]["content"]["parts"])
    else:
        raise ConfigError(f"no HTTP wire format for {kind}")
    if not isinstance(text, str):
        raise TypeError("response text is not a string")
    return text


def complete(
    backend: Backend,
    persona: str,
    prompt: str,
    sampling: SamplingConfig,
    rng: np.random.Generator | None = None,
) -> str:
    return backend.call(persona, prompt, sampling, rng=rng).response


# prompts ------------------------------------------------------------------

INTERPRET_PROMPT = (
    'Read this sentence: "{sentence}"\n'
    'In a few words each, say what "{first}" means and what "{second}" means in it.\n'
    "Answer in exactly two lines:\n"
    "{first}: <meaning>\n"
    "{second}: <meaning>"
)

CLASSIFIER_SYSTEM = "You label word meanings. You answer with a single label and nothing else."

CLASSIFY_PROMPT = (
    'Word: "{word}"\n'
    'Interpretation: "{interpretation}"\n'
    'Which meaning of "{word}" does the interpretation describe?\n'
    "A: {plus}\n"
    "B: {minus}\n"
    "NEITHER: neither of these meanings\n"
    "Reply with exactly one label: A, B, or NEITHER."
)

LABEL_VALUES = {"A": 1, "B": -1, "NEITHER": 0}


def interpretation_prompt(sentence: str, pair: WordPair) -> str:
    first, second = sorted((pair.word1, pair.word2), key=lambda w: _position(sentence, w))
    return INTERPRET_PROMPT.format(sentence=sentence, first=first, second=second)


def _position(text: str, word: str) -> int:
    m = re.search(rf"\b{re.escape(word)}\b", text, re.IGNORECASE)
    return m.start() if m else len(text)


def extract_word_reading(interpretation: str, word: str) -> str:
    """The ``word: meaning`` line of a two-line reply, or the whole reply."""
    m = re.search(rf"^[\W_]*{re.escape(word)}[\W_]*\s*[:\-\u2013\u2014]\s*(.+?)\s*$", interpretation, re.I | re.M)
    return m.group(1) if m else interpretation.strip()


def parse_classification(reply: str, senses: tuple[str, str] = ("", "")) -> tuple[int, str] | None:
    """Map a classifier reply to (value, label), or None when it is unparseable."""
    text = reply.strip()
    token = re.sub(r"[^A-Za-z]", "", text).upper()
    if token in LABEL_VALUES:
        return LABEL_VALUES[token], token
    m = re.match(r"^[\W_]*([A-Za-z]+)", text)
    if m and m.group(1).upper() in LABEL_VALUES:
        # "A: financial institution" is a label, "a place that ..." is prose
        if not re.match(r"[ \t]+[a-z]", text[m.end():]):
            head = m.group(1).upper()
            return LABEL_VALUES[head], head
    lowered = text.lower()
    hits = [label for label, sense in zip(("A", "B"), senses) if sense and sense.lower() in lowered]
    if "neither" in lowered:
        hits.append("NEITHER")
    if len(hits) == 1:
        return LABEL_VALUES[hits[0]], hits[0]
    return None


def most_deterministic(capabilities: Iterable[str]) -> SamplingConfig:
    caps = set(capabilities)
    return SamplingConfig(
        temperature=0.0 if "temperature" in caps else None,
        top_k=1 if "top_k" in caps else None,
    )


@dataclass(frozen=True)
class Classification:
    outcome: Outcome
    calls: tuple[AgentCall, ...]


def classify_with_log(
    backend: Backend,
    word: str,
    interpretation: str,
    senses: tuple[str, str],
    *,
    retries: int = 2,
    sampling: SamplingConfig | None = None,
    rng: np.random.Generator | None = None,
) -> Classification:
    if not interpretation or not interpretation.strip():
        raise ValueError("interpretation must be nonempty")
    sampling = sampling if sampling is not None else most_deterministic(backend.descriptor.capabilities)
    reading = extract_word_reading(interpretation, word)
    prompt = CLASSIFY_PROMPT.format(word=word, interpretation=reading, plus=senses[0], minus=senses[1])
    calls = []
    for _ in range(retries + 1):
        call = backend.call(CLASSIFIER_SYSTEM, prompt, sampling, role="classify", rng=rng)
        calls.append(call)
        parsed = parse_classification(call.response, senses)
        if parsed is not None:
            value, label = parsed
            return Classification(Outcome(value, interpretation, label), tuple(calls))
    return Classification(Outcome(0, interpretation, "UNPARSEABLE"), tuple(calls))


def classify(
    backend: Backend,
    word: str,
    interpretation: str,
    senses: tuple[str, str],
    **kwargs,
) -> Outcome:
    return classify_with_log(backend, word, interpretation, senses, **kwargs).outcome


# text-level synthetic agents ----------------------------------------------


@dataclass(frozen=True)
class Stimulus:
    """What a synthetic agent sees for one interpretation call."""

    label: SettingLabel
    pair: WordPair
    order: WordOrder
    sentence: str
    sampling: SamplingConfig


Chooser = Callable[[Stimulus, str, np.random.Generator], int]

_SENTENCE_RE = re.compile(r'^Read this sentence: "(.*)"$', re.M)
_CLASSIFY_RE = re.compile(r'^Word: "(.*?)"\nInterpretation: "(.*?)"\nWhich meaning', re.S)
_SENSE_RE = re.compile(r"^(A|B): (.*)$", re.M)


class LexicalResponder:
    """Synthetic agent that answers the harness's own prompts.

    Interpretation calls: the persona picks a setting label, ``chooser`` picks
    +1/-1/0 per word, and the reply names the matching sense (or an unrelated
    reading for 0). Classification calls are answered by keyword match, so
    the classifier is exact.
    """

    UNRELATED = "something unrelated to either usual meaning"

    def __init__(self, lexicon: Sequence[WordPair], personas: Mapping[SettingLabel, str], chooser: Chooser):
        self.lexicon = list(lexicon)
        self.labels = {text: label for label, text in personas.items()}
        self.chooser = chooser

    def __call__(self, system: str, user: str, sampling: SamplingConfig, rng: np.random.Generator) -> str:
        if user.startswith("Word: "):
            return self._classify(user)
        m = _SENTENCE_RE.search(user)
        if not m or system not in self.labels:
            return "I am not sure what you mean."
        sentence = m.group(1)
        pair = self._pair_in(sentence)
        if pair is None:
            return "I do not recognise these words."
        first = pair.word1 if _position(sentence, pair.word1) < _position(sentence, pair.word2) else pair.word2
        order = WordOrder.ORIGINAL if first == pair.word1 else WordOrder.FLIPPED
        stim = Stimulus(self.labels[system], pair, order, sentence, sampling)
        lines = []
        for word in sorted((pair.word1, pair.word2), key=lambda w: _position(sentence, w)):
            value = self.chooser(stim, word, rng)
            plus, minus = pair.senses_for(word)
            lines.append(f"{word}: {plus if value == 1 else minus if value == -1 else self.UNRELATED}")
        return "\n".join(lines)

    def _pair_in(self, sentence: str) -> WordPair | None:
        for pair in self.lexicon:
            if _position(sentence, pair.word1) < len(sentence) and _position(sentence, pair.word2) < len(sentence):
                return pair
        return None

    @staticmethod
    def _classify(user: str) -> str:
        m = _CLASSIFY_RE.match(user)
        senses = dict(_SENSE_RE.findall(user))
        if not m:
            return "NEITHER"
        reading = m.group(2).lower()
        hits = [label for label in ("A", "B") if senses.get(label, "").lower() == reading.strip()]
        if not hits:
            hits = [label for label in ("A", "B") if senses.get(label) and senses[label].lower() in reading]
        return hits[0] if len(hits) == 1 else "NEITHER"


def constant_chooser(value: int = 1) -> Chooser:
    return lambda stim, word, rng: value


def hidden_variable_chooser() -> Chooser:
    """Each stimulus deterministically fixes one of the 16 local strategies.

    The outcome depends on the sentence and sampling only, never on the other
    party's setting, so any ensemble built from it is a local model.
    """

    def choose(stim: Stimulus, word: str, rng: np.random.Generator) -> int:
        digest = hashlib.sha256(f"{stim.sentence}|{stim.sampling.key}".encode()).digest()
        strategy = ALL_STRATEGIES[digest[0] % 16]
        return dict(zip(SettingLabel, hidden_variable_outcomes(strategy)))[stim.label]

    return choose


def noisy_chooser(p_plus: float = 0.5, p_zero: float = 0.0) -> Chooser:
    def choose(stim: Stimulus, word: str, rng: np.random.Generator) -> int:
        u = rng.random()
        if u < p_zero:
            return 0
        return 1 if rng.random() < p_plus else -1

    return choose


# outcome-level synthetic sources ------------------------------------------


@dataclass(frozen=True)
class LocalStrategy:
    a: int
    a_prime: int
    b: int
    b_prime: int

    def __post_init__(self):
        for v in (self.a, self.a_prime, self.b, self.b_prime):
            if v not in (1, -1):
                raise ValueError("local strategy outcomes must be +1 or -1")


ALL_STRATEGIES: tuple[LocalStrategy, ...] = tuple(
    LocalStrategy(*signs) for signs in itertools.product((1, -1), repeat=4)
)


def hidden_variable_outcomes(strategy: LocalStrategy) -> tuple[int, int, int, int]:
    """(a, a', b, b') fixed in advance, whatever the co-measured setting."""
    return (strategy.a, strategy.a_prime, strategy.b, strategy.b_prime)


def signed_combination(outcomes: Sequence[int]) -> int:
    a, ap, b, bp = outcomes
    return a * b - a * bp + ap * b + ap * bp


_PAIR_NAMES = {
    (SettingLabel.A, SettingLabel.B): "AB",
    (SettingLabel.A, SettingLabel.B_PRIME): "AB'",
    (SettingLabel.A_PRIME, SettingLabel.B): "A'B",
    (SettingLabel.A_PRIME, SettingLabel.B_PRIME): "A'B'",
}


def _pair_name(pair) -> str:
    if isinstance(pair, str):
        if pair not in _PAIR_NAMES.values():
            raise ValueError(f"unknown setting pair {pair!r}")
        return pair
    x, y = (SettingLabel(p) for p in pair)
    return _PAIR_NAMES[(x, y)]


def pr_box_sample(pair, rng: np.random.Generator) -> tuple[int, int]:
    """PR box aligned to the S sign pattern: anticorrelated only on (A, B')."""
    a = 1 if rng.random() < 0.5 else -1
    return a, (-a if _pair_name(pair) == "AB'" else a)


CANONICAL_ANGLES: dict[SettingLabel, float] = {
    SettingLabel.A: 0.0,
    SettingLabel.A_PRIME: math.pi / 2,
    SettingLabel.B: math.pi / 4,
    SettingLabel.B_PRIME: 3 * math.pi / 4,
}


def singlet_sample(angle_x: float, angle_y: float, rng: np.random.Generator, size: int | None = None):
    """Outcomes with E[ab] = cos(angle_x - angle_y); vectorised when ``size`` is given."""
    p_same = (1.0 + math.cos(angle_x - angle_y)) / 2.0
    n = 1 if size is None else size
    a = np.where(rng.random(n) < 0.5, 1, -1)
    b = np.where(rng.random(n) < p_same, a, -a)
    if size is None:
        return int(a[0]), int(b[0])
    return a, b


def pr_box_samples(n_per_pair: int, rng: np.random.Generator) -> list[tuple[str, int, int]]:
    samples = []
    for x, y in _PAIR_NAMES:
        name = _PAIR_NAMES[(x, y)]
        samples.extend((name, *pr_box_sample(name, rng)) for _ in range(n_per_pair))
    return samples


def singlet_samples(
    n_per_pair: int,
    rng: np.random.Generator,
    angles: Mapping[SettingLabel, float] = CANONICAL_ANGLES,
) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Per setting pair, arrays of ``n_per_pair`` outcomes: [(pair, a, b), ...]."""
    return [
        (name, *singlet_sample(angles[x], angles[y], rng, size=n_per_pair))
        for (x, y), name in _PAIR_NAMES.items()
    ]


def local_mixture_samples(weights: Mapping[LocalStrategy, int]) -> list[tuple[str, int, int]]:
    """Balanced pairwise samples from a mixture of deterministic strategies.

    Every strategy contributes ``weight`` samples to each of the four pairs,
    so the per-pair means equal the mixture's exact correlations.
    """
    samples = []
    for strategy, count in weights.items():
        a, ap, b, bp = hidden_variable_outcomes(strategy)
        values = {SettingLabel.A: a, SettingLabel.A_PRIME: ap, SettingLabel.B: b, SettingLabel.B_PRIME: bp}
        for (x, y), name in _PAIR_NAMES.items():
            samples.extend([(name, values[x], values[y])] * int(count))
    return samples


def make_backend(descriptor: BackendDescriptor, **kwargs) -> Backend:
    return Backend(descriptor, **kwargs)
