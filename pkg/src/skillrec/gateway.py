"""Uniform chat-completion interface: a deterministic offline mock and an
HTTP client for real providers, plus the LLM skill-inference call.

The mock parses the task markers the prompt templates embed and echoes
the top-listed candidates, so the entire pipeline is a pure function of
its inputs under the mock and end-to-end replays are byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Protocol

from . import prompts
from .errors import MalformedResponse, ProviderError, ProviderTimeout


@dataclass(frozen=True)
class CompletionRequest:
    model_tag: str
    system_text: str
    user_text: str
    max_output_chars: int = 8000
    temperature: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    provider_tag: str
    latency_ms: int = 0


class ChatProvider(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResult: ...


class MockChatProvider:
    """Offline provider: a pure function of the request.

    Dispatches on the ``TASK:`` marker. Skill selection returns the first
    WANT candidate ids; suggestion generation returns, for each of the
    first WANT ranked skills, that skill's first listed example prompt;
    judging returns level 2 iff the judged skill appears among the
    conversation's exercised skills, else level 1.
    """

    provider_tag = "mock"

    def complete(self, request: CompletionRequest) -> CompletionResult:
        task = prompts.parse_marker(request.user_text, "TASK")
        if task == prompts.TASK_SELECT_SKILLS:
            text = self._select(request.user_text)
        elif task == prompts.TASK_GENERATE_SUGGESTIONS:
            text = self._generate(request.user_text)
        elif task == prompts.TASK_JUDGE_SUGGESTION:
            text = self._judge(request.user_text)
        else:
            text = "{}"
        return CompletionResult(text=text, provider_tag=self.provider_tag, latency_ms=0)

    def _want(self, user_text: str) -> int:
        raw = prompts.parse_marker(user_text, "WANT")
        try:
            return max(1, int(raw)) if raw else 1
        except ValueError:
            return 1

    def _select(self, user_text: str) -> str:
        ids = prompts.parse_numbered_ids(user_text, "Candidates")
        return json.dumps(ids[: self._want(user_text)])

    def _generate(self, user_text: str) -> str:
        ids = prompts.parse_numbered_ids(user_text, "Skills")
        examples = prompts.parse_example_lines(user_text, "Examples")
        items = []
        for sid in ids[: self._want(user_text)]:
            prompt = examples.get(sid, f"Use {sid}")
            items.append({"prompt": prompt, "skill": sid})
        return json.dumps(items)

    def _judge(self, user_text: str) -> str:
        skill = prompts.parse_marker(user_text, "SKILL") or ""
        invoked: list[str] = []
        in_section = False
        for line in user_text.splitlines():
            if line.startswith("## "):
                in_section = line[3:].strip().startswith("Skills exercised")
                continue
            if in_section and line.strip() and line.strip() != "(none)":
                invoked.extend(s.strip() for s in line.split(","))
        level = 2 if skill in invoked else 1
        return json.dumps({"level": level})


class HttpChatProvider:
    """Chat-completion client for an OpenAI-style JSON endpoint."""

    def __init__(self, endpoint: str, api_key: str | None = None, timeout_ms: int = 30000, provider_tag: str = "http"):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout_ms = timeout_ms
        self.provider_tag = provider_tag

    def complete(self, request: CompletionRequest) -> CompletionResult:
        import httpx

        body = {
            "model": request.model_tag,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
            "temperature": request.temperature,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        try:
            response = httpx.post(self.endpoint, json=body, headers=headers, timeout=self.timeout_ms / 1000.0)
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"provider did not answer within {self.timeout_ms} ms") from exc
        except httpx.HTTPError as exc:
            raise ProviderError(f"provider request failed: {exc}") from exc
        latency_ms = int((time.monotonic() - started) * 1000)
        if response.status_code // 100 != 2:
            raise ProviderError(f"provider returned HTTP {response.status_code}")
        try:
            doc = response.json()
            text = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"provider reply missing text field: {exc}") from exc
        return CompletionResult(text=text or "", provider_tag=self.provider_tag, latency_ms=latency_ms)


@dataclass(frozen=True)
class SkillInference:
    """Outcome of one LLM skill-selection call."""

    skill_ids: tuple[str, ...]
    degraded: bool = False


def infer_skills_llm(
    context_block: str,
    candidates: list[tuple[str, str, str]],
    want: int,
    gateway: ChatProvider,
    model_tag: str,
) -> SkillInference:
    """Ask the LLM to pick ``want`` skills from the candidates.

    Hallucinated ids are dropped and the result is padded from the
    candidates in their given order, so the output is always a subset of
    the candidate ids of length min(want, len(candidates)). One retry on
    a malformed reply, then the padding-only fallback with a degradation
    flag. Gateway transport errors propagate.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    want = min(want, len(candidates))
    candidate_ids = [c[0] for c in candidates]
    request = CompletionRequest(
        model_tag=model_tag,
        system_text=prompts.SYSTEM_SELECT,
        user_text=prompts.build_selection_prompt(context_block, candidates, want),
    )

    def _parse(reply_text: str) -> list[str] | None:
        parsed = prompts.extract_json_array(reply_text)
        if parsed is None:
            return None
        valid: list[str] = []
        for item in parsed:
            if isinstance(item, str) and item in candidate_ids and item not in valid:
                valid.append(item)
        return valid

    degraded = False
    selected: list[str] | None = None
    for attempt in range(2):
        try:
            result = gateway.complete(request)
        except MalformedResponse:
            if attempt == 0:
                continue
            degraded = True
            break
        selected = _parse(result.text)
        if selected is not None:
            break
        if attempt == 1:
            degraded = True
    if selected is None:
        selected = []

    for sid in candidate_ids:  # pad back to want, preserving candidate order
        if len(selected) >= want:
            break
        if sid not in selected:
            selected.append(sid)
    return SkillInference(skill_ids=tuple(selected[:want]), degraded=degraded)
