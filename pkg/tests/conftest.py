from __future__ import annotations

import json
from pathlib import Path

import pytest

from skillrec.catalog import load_catalog
from skillrec.context import ConversationTurn, UserProfile, build_contextual_query
from skillrec.gateway import MockChatProvider
from skillrec.retrieval import Retriever
from skillrec.telemetry import EventLog, TelemetryEvent, build_transition_model, empty_model

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


@pytest.fixture(scope="session")
def registry():
    return load_catalog(FIXTURES / "catalog.json")


@pytest.fixture(scope="session")
def retriever(registry):
    return Retriever(registry)


@pytest.fixture(scope="session")
def fixture_events():
    return EventLog(FIXTURES / "telemetry_events.jsonl").events()


@pytest.fixture(scope="session")
def warm_model(registry, fixture_events):
    return build_transition_model(fixture_events, registry).model


@pytest.fixture(scope="session")
def zero_model(registry):
    return empty_model(list(registry.skills))


@pytest.fixture()
def mock_gateway():
    return MockChatProvider()


@pytest.fixture(scope="session")
def demo_profile():
    return UserProfile(user_id="analyst-7", role_tag="soc_analyst", org_tag="contoso")


@pytest.fixture(scope="session")
def signin_session_turns():
    doc = json.loads((FIXTURES / "session_example.json").read_text(encoding="utf-8"))
    from skillrec.context import parse_session

    turns, _ = parse_session(doc)
    return turns


def make_query(query_text: str, turns=None, profile=None, **kwargs):
    return build_contextual_query(
        list(turns or []),
        profile or UserProfile(user_id="u1"),
        query_text,
        **kwargs,
    )


def make_events(sequences: dict[str, list[str]], start_ts: int = 1_000) -> list[TelemetryEvent]:
    """Per-session invocation sequences into skill_invoked events."""
    events = []
    counter = 0
    for session_id, skills in sequences.items():
        ts = start_ts
        for skill in skills:
            counter += 1
            ts += 10
            events.append(
                TelemetryEvent(
                    event_id=f"e{counter:05d}",
                    session_id=session_id,
                    timestamp_ms=ts,
                    kind="skill_invoked",
                    skill_id=skill,
                )
            )
    return events


def tiny_catalog(skill_ids: list[str], plugin_id: str = "P1") -> dict:
    """Minimal valid catalog document over the given skill ids."""
    return {
        "plugins": [
            {
                "id": plugin_id,
                "name": plugin_id,
                "description": "test plugin",
                "skills": [
                    {
                        "id": sid,
                        "name": sid,
                        "description": f"does {sid}",
                        "example_prompts": [f"run {sid} now"],
                        "consumes_entity_kinds": [],
                        "produces_entity_kinds": [],
                    }
                    for sid in skill_ids
                ],
            }
        ],
        "docs": [],
    }
