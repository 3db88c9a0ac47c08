import numpy as np
import pytest

from semantic_bell.agents import Backend, BackendDescriptor, LexicalResponder, ReplayScript
from semantic_bell.core import DEFAULT_LEXICON, DEFAULT_PERSONAS
from semantic_bell.synthetic import synthetic_trial


@pytest.fixture
def bank_bat():
    return DEFAULT_LEXICON[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_trials(rows, **kwargs):
    """TrialRecords from rows of (a, a', b, b')."""
    return [synthetic_trial(row, index=i, **kwargs) for i, row in enumerate(rows)]


def replay_backend(responses=(), entries=None, **desc):
    script = ReplayScript(entries) if entries is not None else ReplayScript.from_responses(responses)
    return Backend(BackendDescriptor(kind="replay", model_id=desc.pop("model_id", "replay"), **desc), replay=script)


def synthetic_backend(chooser, model_id="synthetic", lexicon=DEFAULT_LEXICON, record=False):
    responder = LexicalResponder(lexicon, DEFAULT_PERSONAS, chooser)
    return Backend(BackendDescriptor(kind="synthetic", model_id=model_id), responder=responder, record=record)


def no_progress(*args, **kwargs):
    pass


# acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str, str]] = {}
LIVE_CRITERION = 11


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.skipped:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        number, title = marker.args
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _CRITERIA[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        verdict, title, detail = _CRITERIA[number]
        line = f"criterion {number:>2} {verdict}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
    if LIVE_CRITERION not in _CRITERIA:
        terminalreporter.write_line(
            f"criterion {LIVE_CRITERION} not run  live smoke test is opt-in: "
            "SEMANTIC_BELL_LIVE_ENDPOINT=... pytest -m live"
        )
