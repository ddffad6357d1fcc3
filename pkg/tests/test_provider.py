from __future__ import annotations

import json

import httpx
import pytest

from evospark.errors import FixtureExhausted, ProviderError
from evospark.providers.base import ProviderSettings, complete_with_retry
from evospark.providers.live import LiveProvider
from evospark.providers.scripted import FixtureEntry, ScriptedProvider, load_fixture
from evospark.util import sha256_text


def two_entry_provider() -> ScriptedProvider:
    return ScriptedProvider(
        [
            FixtureEntry("ROLE_TURN", "first"),
            FixtureEntry("ROLE_TURN", "second"),
            FixtureEntry("DIRECTOR_GUIDANCE", "other-template"),
        ]
    )


def test_scripted_order_within_template_id():
    provider = two_entry_provider()
    assert provider.complete("ROLE_TURN", "p1")[0] == "first"
    assert provider.complete("DIRECTOR_GUIDANCE", "p2")[0] == "other-template"
    assert provider.complete("ROLE_TURN", "p3")[0] == "second"


def test_fixture_exhausted_on_extra_call():
    provider = two_entry_provider()
    provider.complete("ROLE_TURN", "p")
    provider.complete("ROLE_TURN", "p")
    with pytest.raises(FixtureExhausted):
        provider.complete("ROLE_TURN", "p")


def test_call_records_accumulate_with_positive_latency():
    provider = two_entry_provider()
    _, record = provider.complete("ROLE_TURN", "a prompt")
    assert record.call_id == 1
    assert record.latency_seconds > 0
    assert record.prompt_sha256 == sha256_text("a prompt")
    assert provider.records == [record]


def test_replay_yields_identical_records():
    a, b = two_entry_provider(), two_entry_provider()
    for provider in (a, b):
        provider.complete("ROLE_TURN", "same prompt")
        provider.complete("ROLE_TURN", "same prompt 2")
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]


def test_golden_mode_pins_prompt_hash():
    pinned = ScriptedProvider(
        [FixtureEntry("ROLE_TURN", "ok", prompt_sha256=sha256_text("expected prompt"))]
    )
    with pytest.raises(ProviderError, match="golden fixture mismatch"):
        pinned.complete("ROLE_TURN", "some other prompt")
    pinned2 = ScriptedProvider(
        [FixtureEntry("ROLE_TURN", "ok", prompt_sha256=sha256_text("expected prompt"))]
    )
    assert pinned2.complete("ROLE_TURN", "expected prompt")[0] == "ok"


def test_cursor_state_round_trip():
    provider = two_entry_provider()
    provider.complete("ROLE_TURN", "p")
    state = provider.cursor_state()
    fresh = two_entry_provider()
    fresh.restore_cursors(state)
    assert fresh.complete("ROLE_TURN", "p")[0] == "second"
    assert fresh.records[0].call_id == 2  # ids continue across resume


def test_load_fixture_file(tmp_path):
    path = tmp_path / "fixture.json"
    path.write_text(json.dumps([{"template_id": "ROLE_TURN", "response": "hi"}]))
    entries = load_fixture(path)
    assert entries == [FixtureEntry("ROLE_TURN", "hi")]
    bad = tmp_path / "bad.json"
    bad.write_text('{"not": "a list"}')
    with pytest.raises(ProviderError):
        load_fixture(bad)


def test_settings_default_temperature_and_env():
    assert ProviderSettings().temperature == 0.8
    settings = ProviderSettings.from_env(
        {
            "EVOSPARK_API_BASE": "http://backend.local/v1",
            "EVOSPARK_API_KEY": "sk-test",
            "EVOSPARK_MODEL": "demo-model",
        }
    )
    assert settings.endpoint == "http://backend.local/v1"
    assert settings.api_key == "sk-test"
    assert settings.model == "demo-model"
    assert settings.temperature == 0.8


def test_retry_raises_after_attempts():
    class Flaky:
        deterministic = True
        records: list = []

        def __init__(self):
            self.calls = 0

        def complete(self, template_id, prompt, *, temperature=None):
            self.calls += 1
            raise ProviderError("transient")

    flaky = Flaky()
    with pytest.raises(ProviderError, match="failed after 3 attempts"):
        complete_with_retry(flaky, "ROLE_TURN", "p")
    assert flaky.calls == 3


def test_retry_does_not_mask_fixture_exhaustion():
    provider = ScriptedProvider([])
    with pytest.raises(FixtureExhausted):
        complete_with_retry(provider, "ROLE_TURN", "p")


# --- live backend over a mock transport -----------------------------------------


def mock_backend(capture: dict) -> httpx.Client:
    def handler(request: httpx.Request) -> httpx.Response:
        capture["url"] = str(request.url)
        capture["payload"] = json.loads(request.content)
        capture["auth"] = request.headers.get("Authorization")
        return httpx.Response(
            200,
            json={
                "choices": [{"message": {"content": "backend says hi"}}],
                "usage": {"prompt_tokens": 12, "completion_tokens": 5},
            },
        )

    return httpx.Client(transport=httpx.MockTransport(handler))


def test_live_provider_single_request_shape():
    capture: dict = {}
    provider = LiveProvider(
        ProviderSettings(endpoint="http://backend.local/v1", api_key="sk-x", model="demo"),
        client=mock_backend(capture),
    )
    text, record = provider.complete("ROLE_TURN", "hello backend")
    assert text == "backend says hi"
    assert capture["url"] == "http://backend.local/v1/chat/completions"
    assert capture["auth"] == "Bearer sk-x"
    assert capture["payload"]["model"] == "demo"
    assert capture["payload"]["temperature"] == 0.8  # default applied when unset
    assert capture["payload"]["stream"] is False
    assert set(capture["payload"]) == {"model", "messages", "temperature", "stream"}
    assert record.prompt_tokens == 12 and record.completion_tokens == 5
    assert record.latency_seconds >= 0


def test_live_provider_temperature_override():
    capture: dict = {}
    provider = LiveProvider(
        ProviderSettings(endpoint="http://backend.local/v1", model="demo"),
        client=mock_backend(capture),
    )
    provider.complete("ROLE_TURN", "hello", temperature=1.2)
    assert capture["payload"]["temperature"] == 1.2


def test_live_provider_http_error_becomes_provider_error():
    def handler(request: httpx.Request) -> httpx.Response:
        return httpx.Response(500, text="boom")

    provider = LiveProvider(
        ProviderSettings(endpoint="http://backend.local/v1", model="demo"),
        client=httpx.Client(transport=httpx.MockTransport(handler)),
    )
    with pytest.raises(ProviderError):
        provider.complete("ROLE_TURN", "hello")


def test_live_provider_requires_endpoint_and_model():
    with pytest.raises(ProviderError):
        LiveProvider(ProviderSettings(endpoint=None, model=None))
