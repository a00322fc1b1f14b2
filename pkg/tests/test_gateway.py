import json

import httpx
import pytest

from skillrec.errors import MalformedResponse, ProviderError, ProviderTimeout
from skillrec.gateway import (
    CompletionRequest,
    CompletionResult,
    HttpChatProvider,
    MockChatProvider,
    infer_skills_llm,
)
from skillrec.prompts import build_selection_prompt


def selection_request(candidates, want):
    return CompletionRequest(
        model_tag="default",
        system_text="select",
        user_text=build_selection_prompt("ctx", candidates, want),
    )


CANDS = [(f"S{i}", f"skill {i}", f"example {i}") for i in range(1, 6)]


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest(model_tag="m", system_text="s", user_text="")
    with pytest.raises(ValueError):
        CompletionRequest(model_tag="m", system_text="s", user_text="x", temperature=-1)


def test_mock_is_deterministic():
    gw = MockChatProvider()
    req = selection_request(CANDS, 3)
    assert gw.complete(req).text == gw.complete(req).text


def test_mock_echoes_first_wanted_candidates():
    gw = MockChatProvider()
    reply = gw.complete(selection_request(CANDS[:3], 2))
    assert json.loads(reply.text) == ["S1", "S2"]


def test_mock_unknown_task():
    gw = MockChatProvider()
    reply = gw.complete(CompletionRequest(model_tag="m", system_text="s", user_text="hello"))
    assert reply.text == "{}"


def test_infer_first_n_from_mock():
    result = infer_skills_llm("ctx", CANDS, want=3, gateway=MockChatProvider(), model_tag="m")
    assert result.skill_ids == ("S1", "S2", "S3")
    assert not result.degraded


class CannedProvider:
    """Returns a fixed sequence of replies (or raises the given error)."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return CompletionResult(text=reply, provider_tag="canned")


def test_infer_drops_hallucinations_and_pads():
    gw = CannedProvider([json.dumps(["S2", "Hallucinated", "S4"])])
    result = infer_skills_llm("ctx", CANDS, want=3, gateway=gw, model_tag="m")
    assert result.skill_ids == ("S2", "S4", "S1")
    assert set(result.skill_ids) <= {c[0] for c in CANDS}


def test_infer_empty_candidates_rejected():
    with pytest.raises(ValueError):
        infer_skills_llm("ctx", [], want=1, gateway=MockChatProvider(), model_tag="m")


def test_infer_retries_then_falls_back_on_malformed():
    gw = CannedProvider(["no json here at all", "still nothing"])
    result = infer_skills_llm("ctx", CANDS, want=2, gateway=gw, model_tag="m")
    assert result.skill_ids == ("S1", "S2")  # padding-only fallback
    assert result.degraded
    assert len(gw.requests) == 2


def test_infer_recovers_on_retry():
    gw = CannedProvider(["garbage", json.dumps(["S3", "S1"])])
    result = infer_skills_llm("ctx", CANDS, want=2, gateway=gw, model_tag="m")
    assert result.skill_ids == ("S3", "S1")
    assert not result.degraded


def test_infer_propagates_transport_errors():
    gw = CannedProvider([ProviderTimeout("slow")])
    with pytest.raises(ProviderTimeout):
        infer_skills_llm("ctx", CANDS, want=2, gateway=gw, model_tag="m")


def test_infer_output_always_subset():
    nasty = CannedProvider([json.dumps(["S9", "S9", 42, None, "S2", "S2"])])
    result = infer_skills_llm("ctx", CANDS, want=4, gateway=nasty, model_tag="m")
    assert set(result.skill_ids) <= {c[0] for c in CANDS}
    assert len(result.skill_ids) == 4
    assert len(set(result.skill_ids)) == 4


def test_infer_want_capped_at_candidates():
    result = infer_skills_llm("ctx", CANDS[:2], want=10, gateway=MockChatProvider(), model_tag="m")
    assert result.skill_ids == ("S1", "S2")


# ----------------------------------------------------------- http provider


def _patch_post(monkeypatch, handler):
    monkeypatch.setattr(httpx, "post", handler)


def test_http_provider_success(monkeypatch):
    def fake_post(url, json=None, headers=None, timeout=None):
        assert json["model"] == "tag-x"
        assert json["messages"][1]["content"] == "hello"
        request = httpx.Request("POST", url)
        return httpx.Response(200, json={"choices": [{"message": {"content": "world"}}]}, request=request)

    _patch_post(monkeypatch, fake_post)
    provider = HttpChatProvider(endpoint="http://example.test/v1/chat")
    result = provider.complete(CompletionRequest(model_tag="tag-x", system_text="s", user_text="hello"))
    assert result.text == "world"


def test_http_provider_non_2xx(monkeypatch):
    def fake_post(url, **kwargs):
        return httpx.Response(500, json={}, request=httpx.Request("POST", url))

    _patch_post(monkeypatch, fake_post)
    provider = HttpChatProvider(endpoint="http://example.test")
    with pytest.raises(ProviderError):
        provider.complete(CompletionRequest(model_tag="m", system_text="s", user_text="x"))


def test_http_provider_timeout(monkeypatch):
    def fake_post(url, **kwargs):
        raise httpx.ConnectTimeout("too slow")

    _patch_post(monkeypatch, fake_post)
    provider = HttpChatProvider(endpoint="http://example.test", timeout_ms=10)
    with pytest.raises(ProviderTimeout):
        provider.complete(CompletionRequest(model_tag="m", system_text="s", user_text="x"))


def test_http_provider_missing_text_field(monkeypatch):
    def fake_post(url, **kwargs):
        return httpx.Response(200, json={"choices": []}, request=httpx.Request("POST", url))

    _patch_post(monkeypatch, fake_post)
    provider = HttpChatProvider(endpoint="http://example.test")
    with pytest.raises(MalformedResponse):
        provider.complete(CompletionRequest(model_tag="m", system_text="s", user_text="x"))
