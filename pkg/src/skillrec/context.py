"""Contextual query processing: entity extraction and session enrichment.

Entity recognition is deliberately regex-based — one fixed pattern per
entity kind, applied deterministically — so that extraction is offline,
reproducible, and auditable. The patterns are listed in README.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError

DEFAULT_RECENT_TURNS = 4


class EntityKind(str, Enum):
    """Closed enumeration of recognized entity kinds.

    Declaration order is the tie-break priority when two kinds match the
    same span with the same length (e.g. an IPv4 address also looks like
    a domain name).
    """

    IPV4 = "ipv4"
    IPV6 = "ipv6"
    EMAIL = "email"
    GUID = "guid"
    SHA256 = "sha256"
    MD5 = "md5"
    DOMAIN_NAME = "domain_name"
    FILE_PATH = "file_path"
    CVE_ID = "cve_id"
    USER_HANDLE = "user_handle"
    QUOTED_LITERAL = "quoted_literal"


_OCTET = r"(?:25[0-5]|2[0-4][0-9]|[01]?[0-9][0-9]?)"
_H = r"[0-9A-Fa-f]{1,4}"

# One recognizer per kind, keyed in EntityKind declaration order.
RECOGNIZERS: dict[EntityKind, re.Pattern[str]] = {
    EntityKind.IPV4: re.compile(rf"(?<![\d.]){_OCTET}(?:\.{_OCTET}){{3}}(?![\d.])"),
    EntityKind.IPV6: re.compile(
        rf"(?<![\w:])(?:(?:{_H}:){{7}}{_H}|(?:{_H}:)+(?::{_H})+|::{_H}(?::{_H})*|(?:{_H}:){{1,7}}:)(?![\w:])"
    ),
    EntityKind.EMAIL: re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b"),
    EntityKind.GUID: re.compile(
        r"\b[0-9A-Fa-f]{8}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{4}-[0-9A-Fa-f]{12}\b"
    ),
    EntityKind.SHA256: re.compile(r"\b[0-9A-Fa-f]{64}\b"),
    EntityKind.MD5: re.compile(r"\b[0-9A-Fa-f]{32}\b"),
    EntityKind.DOMAIN_NAME: re.compile(
        r"\b(?:[A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?\.)+[A-Za-z]{2,}\b"
    ),
    EntityKind.FILE_PATH: re.compile(
        r"(?:[A-Za-z]:\\(?:[^\\\s\"']+\\)*[^\\\s\"']+|(?:/[\w.+-]+){2,}/?)"
    ),
    EntityKind.CVE_ID: re.compile(r"\bCVE-\d{4}-\d{4,}\b"),
    EntityKind.USER_HANDLE: re.compile(r"(?<![\w@])@[A-Za-z0-9_]{2,32}\b"),
    EntityKind.QUOTED_LITERAL: re.compile(r"\"[^\"\n]+\""),
}

_KIND_PRIORITY = {kind: i for i, kind in enumerate(EntityKind)}

# Value comparison is case-sensitive except for kinds that are
# case-insensitive in practice.
_CASEFOLD_KINDS = frozenset({EntityKind.DOMAIN_NAME, EntityKind.EMAIL})


@dataclass(frozen=True)
class Entity:
    kind: EntityKind
    value: str
    source_turn: int | None = None

    def dedup_key(self) -> tuple[str, str]:
        value = self.value.casefold() if self.kind in _CASEFOLD_KINDS else self.value
        return (self.kind.value, value)


@dataclass(frozen=True)
class ConversationTurn:
    index: int
    role: str  # "user" | "assistant"
    text: str
    invoked_skill: str | None = None
    entities: tuple[Entity, ...] = ()


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    role_tag: str = ""
    org_tag: str = ""
    preferred_plugin_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ContextualQuery:
    """Structured, context-enriched representation of one user turn."""

    query_text: str
    query_entities: tuple[Entity, ...]
    history_entities: tuple[Entity, ...]
    recent_turns: tuple[ConversationTurn, ...]
    last_invoked_skill: str | None
    profile: UserProfile

    def entity_kinds(self) -> set[EntityKind]:
        return {e.kind for e in self.query_entities} | {e.kind for e in self.history_entities}


def extract_entities(text: str, source_turn: int | None = None) -> list[Entity]:
    """Run every recognizer over ``text`` and resolve overlaps.

    Overlapping matches are resolved longest-match-first, then by the
    EntityKind declaration order; the surviving entities are returned in
    left-to-right order of their position in the text.
    """
    candidates: list[tuple[int, int, EntityKind, str]] = []
    for kind, pattern in RECOGNIZERS.items():
        for m in pattern.finditer(text):
            candidates.append((m.start(), m.end(), kind, m.group(0)))
    # longest first, then kind priority, then position
    candidates.sort(key=lambda c: (-(c[1] - c[0]), _KIND_PRIORITY[c[2]], c[0]))
    accepted: list[tuple[int, int, EntityKind, str]] = []
    for start, end, kind, value in candidates:
        if any(start < a_end and end > a_start for a_start, a_end, _, _ in accepted):
            continue
        accepted.append((start, end, kind, value))
    accepted.sort(key=lambda c: (c[0], _KIND_PRIORITY[c[2]]))
    return [Entity(kind=kind, value=value, source_turn=source_turn) for _, _, kind, value in accepted]


def dedup_entities(entities: list[Entity]) -> list[Entity]:
    """Order-preserving dedup by (kind, comparison value)."""
    seen: set[tuple[str, str]] = set()
    out: list[Entity] = []
    for entity in entities:
        key = entity.dedup_key()
        if key not in seen:
            seen.add(key)
            out.append(entity)
    return out


def build_contextual_query(
    session: list[ConversationTurn],
    profile: UserProfile,
    query_text: str,
    recent_window: int = DEFAULT_RECENT_TURNS,
) -> ContextualQuery:
    """Assemble the enriched query that drives retrieval and synthesis."""
    if recent_window < 1:
        raise ValueError("recent_window must be positive")
    recent = tuple(session[-recent_window:])
    history: list[Entity] = []
    for turn in session:
        history.extend(turn.entities)
    last_skill = None
    for turn in reversed(session):
        if turn.invoked_skill:
            last_skill = turn.invoked_skill
            break
    return ContextualQuery(
        query_text=query_text,
        query_entities=tuple(extract_entities(query_text)),
        history_entities=tuple(dedup_entities(history)),
        recent_turns=recent,
        last_invoked_skill=last_skill,
        profile=profile,
    )


def summarize_history(turns: list[ConversationTurn] | tuple[ConversationTurn, ...], max_chars: int) -> str:
    """Render turns as "[i] role: text" lines, newest last.

    If the rendering exceeds ``max_chars``, whole lines are dropped oldest
    first; a line is never truncated mid-way.
    """
    if max_chars < 1:
        raise ValueError("max_chars must be positive")
    lines = [f"[{t.index}] {t.role}: {t.text}" for t in turns]
    while lines and len("\n".join(lines)) > max_chars:
        lines.pop(0)
    return "\n".join(lines)


def parse_session(doc: dict) -> tuple[list[ConversationTurn], UserProfile]:
    """Parse a session transcript document into turns and a profile.

    Turns that arrive without an ``entities`` field get them extracted
    from the turn text, tagged with the turn index.
    """
    turns_raw = doc.get("turns", [])
    if not isinstance(turns_raw, list):
        raise ParseError("'turns' must be an array")
    turns: list[ConversationTurn] = []
    last_index = -1
    for t in turns_raw:
        if not isinstance(t, dict):
            raise ParseError(f"turn entries must be objects: {t!r}")
        try:
            index = int(t["index"])
            role = str(t["role"])
            text = str(t["text"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"turn missing index/role/text: {t!r}") from exc
        if role not in ("user", "assistant"):
            raise ParseError(f"turn role must be 'user' or 'assistant', got {role!r}")
        if index <= last_index:
            raise ParseError(f"turn indices must be strictly increasing, got {index} after {last_index}")
        last_index = index
        if "entities" in t:
            entities = tuple(
                Entity(kind=EntityKind(e["kind"]), value=str(e["value"]), source_turn=index)
                for e in t["entities"]
            )
        else:
            entities = tuple(extract_entities(text, source_turn=index))
        turns.append(
            ConversationTurn(
                index=index,
                role=role,
                text=text,
                invoked_skill=t.get("invoked_skill"),
                entities=entities,
            )
        )
    profile_raw = doc.get("profile") or {}
    profile = UserProfile(
        user_id=str(profile_raw.get("user_id", "anonymous")),
        role_tag=str(profile_raw.get("role_tag", "")),
        org_tag=str(profile_raw.get("org_tag", "")),
        preferred_plugin_ids=tuple(profile_raw.get("preferred_plugin_ids", [])),
    )
    return turns, profile
