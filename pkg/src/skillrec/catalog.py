"""Hierarchical plugin/skill catalog: loading, validation, canonical documents.

The catalog is a single JSON document with top-level keys ``plugins`` and
``docs``. Skills are nested under their plugin; every skill belongs to
exactly one plugin (the hierarchy is a partition). A loaded registry is
immutable and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import CatalogValidationError, ParseError


@dataclass(frozen=True)
class Skill:
    """One executable capability, addressed by id."""

    id: str
    plugin_id: str
    name: str
    description: str
    example_prompts: tuple[str, ...]
    consumes_entity_kinds: tuple[str, ...] = ()
    produces_entity_kinds: tuple[str, ...] = ()


@dataclass(frozen=True)
class Plugin:
    """A thematic group of skills."""

    id: str
    name: str
    description: str
    skill_ids: tuple[str, ...]


@dataclass(frozen=True)
class KnowledgeDoc:
    id: str
    title: str
    body: str
    related_skill_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Violation:
    """One broken catalog invariant, as data rather than an exception."""

    rule: str
    offending_id: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.offending_id}: {self.message}"


@dataclass(frozen=True)
class SkillRegistry:
    """Immutable view over the full catalog.

    ``plugin_order`` / ``skill_order`` preserve document order so that
    iteration (and therefore every downstream ranking tie-break fallback)
    is deterministic across loads.
    """

    plugins: dict[str, Plugin]
    skills: dict[str, Skill]
    docs: dict[str, KnowledgeDoc]
    plugin_order: tuple[str, ...] = field(default=())
    skill_order: tuple[str, ...] = field(default=())

    def plugins_in_order(self) -> list[Plugin]:
        return [self.plugins[pid] for pid in self.plugin_order]

    def skills_in_order(self) -> list[Skill]:
        return [self.skills[sid] for sid in self.skill_order]

    def skills_of(self, plugin_id: str) -> list[Skill]:
        return [self.skills[sid] for sid in self.plugins[plugin_id].skill_ids]


def _as_str_tuple(value: Any, *, what: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ParseError(f"{what} must be a list of strings, got {value!r}")
    return tuple(value)


def _parse_document(source: str | bytes | dict | Path) -> dict:
    if isinstance(source, Path):
        try:
            source = source.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read catalog file: {exc}") from exc
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"catalog is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ParseError("catalog document must be a JSON object")
    return doc


def load_catalog(source: str | bytes | dict | Path) -> SkillRegistry:
    """Parse and validate a catalog document into a registry.

    Accepts a JSON string/bytes, an already-parsed dict, or a file path.
    Raises ParseError on malformed documents and CatalogValidationError
    (carrying every violation) on invariant breaks.
    """
    doc = _parse_document(source)
    plugins_raw = doc.get("plugins")
    if not isinstance(plugins_raw, list):
        raise ParseError("catalog must have a top-level 'plugins' array")
    docs_raw = doc.get("docs", [])
    if not isinstance(docs_raw, list):
        raise ParseError("'docs' must be an array")

    plugins: dict[str, Plugin] = {}
    skills: dict[str, Skill] = {}
    docs: dict[str, KnowledgeDoc] = {}
    plugin_order: list[str] = []
    skill_order: list[str] = []
    violations: list[Violation] = []

    if not plugins_raw:
        violations.append(Violation("empty_catalog", "-", "catalog contains no plugins"))

    for p in plugins_raw:
        if not isinstance(p, dict) or not isinstance(p.get("id"), str):
            raise ParseError(f"plugin entries must be objects with a string id: {p!r}")
        pid = p["id"]
        if pid in plugins:
            violations.append(Violation("duplicate_id", pid, "plugin id appears twice"))
            continue
        skill_entries = p.get("skills")
        if not isinstance(skill_entries, list):
            raise ParseError(f"plugin {pid!r} must have a 'skills' array")
        member_ids: list[str] = []
        for s in skill_entries:
            if not isinstance(s, dict) or not isinstance(s.get("id"), str):
                raise ParseError(f"skill entries must be objects with a string id: {s!r}")
            sid = s["id"]
            skill = Skill(
                id=sid,
                plugin_id=pid,
                name=str(s.get("name", sid)),
                description=str(s.get("description", "")),
                example_prompts=_as_str_tuple(s.get("example_prompts"), what=f"skill {sid} example_prompts"),
                consumes_entity_kinds=_as_str_tuple(s.get("consumes_entity_kinds"), what=f"skill {sid} consumes_entity_kinds"),
                produces_entity_kinds=_as_str_tuple(s.get("produces_entity_kinds"), what=f"skill {sid} produces_entity_kinds"),
            )
            if sid in skills:
                violations.append(
                    Violation("partition_broken", sid, f"skill listed more than once (plugins {skills[sid].plugin_id!r} and {pid!r})")
                )
                continue
            skills[sid] = skill
            skill_order.append(sid)
            member_ids.append(sid)
        plugins[pid] = Plugin(
            id=pid,
            name=str(p.get("name", pid)),
            description=str(p.get("description", "")),
            skill_ids=tuple(member_ids),
        )
        plugin_order.append(pid)

    for d in docs_raw:
        if not isinstance(d, dict) or not isinstance(d.get("id"), str):
            raise ParseError(f"doc entries must be objects with a string id: {d!r}")
        did = d["id"]
        if did in docs:
            violations.append(Violation("duplicate_id", did, "doc id appears twice"))
            continue
        docs[did] = KnowledgeDoc(
            id=did,
            title=str(d.get("title", "")),
            body=str(d.get("body", "")),
            related_skill_ids=_as_str_tuple(d.get("related_skill_ids"), what=f"doc {did} related_skill_ids"),
        )

    registry = SkillRegistry(
        plugins=plugins,
        skills=skills,
        docs=docs,
        plugin_order=tuple(plugin_order),
        skill_order=tuple(skill_order),
    )
    violations.extend(validate(registry))
    if violations:
        # dedup while preserving order; loader and validator can overlap
        seen: set[tuple[str, str, str]] = set()
        unique = []
        for v in violations:
            key = (v.rule, v.offending_id, v.message)
            if key not in seen:
                seen.add(key)
                unique.append(v)
        raise CatalogValidationError(unique)
    return registry


def validate(registry: SkillRegistry) -> list[Violation]:
    """Check every registry invariant; returns [] iff all hold."""
    violations: list[Violation] = []
    if not registry.plugins:
        violations.append(Violation("empty_catalog", "-", "catalog contains no plugins"))

    claimed: dict[str, str] = {}
    for pid, plugin in registry.plugins.items():
        if not pid:
            violations.append(Violation("empty_id", "-", "plugin with empty id"))
        if not plugin.skill_ids:
            violations.append(Violation("empty_plugin", pid, "plugin lists no skills"))
        for sid in plugin.skill_ids:
            if sid in claimed:
                violations.append(
                    Violation("partition_broken", sid, f"skill claimed by plugins {claimed[sid]!r} and {pid!r}")
                )
            else:
                claimed[sid] = pid
            if sid not in registry.skills:
                violations.append(Violation("dangling_reference", sid, f"plugin {pid!r} lists unknown skill {sid!r}"))

    for sid, skill in registry.skills.items():
        if not sid:
            violations.append(Violation("empty_id", "-", "skill with empty id"))
        if skill.plugin_id not in registry.plugins:
            violations.append(
                Violation("dangling_reference", sid, f"skill references unknown plugin {skill.plugin_id!r}")
            )
        elif sid not in registry.plugins[skill.plugin_id].skill_ids:
            violations.append(
                Violation("back_reference", sid, f"plugin {skill.plugin_id!r} does not list this skill back")
            )
        if not skill.example_prompts:
            violations.append(Violation("no_example_prompts", sid, "skill has zero example prompts"))
        if sid not in claimed:
            violations.append(Violation("orphan_skill", sid, "skill not listed by any plugin"))

    for did, doc in registry.docs.items():
        if not doc.body:
            violations.append(Violation("empty_doc_body", did, "knowledge doc has an empty body"))

    return violations


def skill_document(skill: Skill, plugin: Plugin) -> str:
    """Canonical retrieval text for one skill.

    Plugin name, skill name, description, every example prompt, then the
    entity-kind tags, newline-separated. Deterministic for identical input.
    """
    if skill.plugin_id != plugin.id:
        raise ValueError(f"skill {skill.id!r} does not belong to plugin {plugin.id!r}")
    lines = [plugin.name, skill.name, skill.description]
    lines.extend(skill.example_prompts)
    lines.append("consumes: " + " ".join(skill.consumes_entity_kinds))
    lines.append("produces: " + " ".join(skill.produces_entity_kinds))
    return "\n".join(lines)


def serialize_catalog(registry: SkillRegistry) -> dict:
    """Inverse of load_catalog: a plain dict in the catalog file schema."""
    return {
        "plugins": [
            {
                "id": plugin.id,
                "name": plugin.name,
                "description": plugin.description,
                "skills": [
                    {
                        "id": s.id,
                        "name": s.name,
                        "description": s.description,
                        "example_prompts": list(s.example_prompts),
                        "consumes_entity_kinds": list(s.consumes_entity_kinds),
                        "produces_entity_kinds": list(s.produces_entity_kinds),
                    }
                    for s in (registry.skills[sid] for sid in plugin.skill_ids)
                ],
            }
            for plugin in registry.plugins_in_order()
        ],
        "docs": [
            {
                "id": d.id,
                "title": d.title,
                "body": d.body,
                "related_skill_ids": list(d.related_skill_ids),
            }
            for d in registry.docs.values()
        ],
    }
