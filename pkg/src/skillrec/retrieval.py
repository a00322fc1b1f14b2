"""Two-stage catalog retrieval: plugins first, then skills within them.

A plugin scores as the best cosine of any of its member skills, so a
perfectly matching skill can never be hidden by weaker siblings. Small
additive biases make retrieval context-aware: preferred plugins from the
user profile, and skills that consume an entity kind present in the
query or history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import SkillRegistry, skill_document
from .context import ContextualQuery
from .embedding import HashingEmbedder, cosine
from .errors import EmptyRegistryError, UnknownPluginError

PROFILE_BIAS = 0.05
ENTITY_AFFINITY_BIAS = 0.05


@dataclass(frozen=True)
class ScoredItem:
    item_id: str
    score: float


class Retriever:
    """Retrieval over one immutable registry, with cached embeddings.

    The caches are write-once: they are fully populated at construction
    and never mutated, so a retriever is safe to share across threads.
    """

    def __init__(
        self,
        registry: SkillRegistry,
        embedder: HashingEmbedder | None = None,
        profile_bias: float = PROFILE_BIAS,
        entity_bias: float = ENTITY_AFFINITY_BIAS,
    ):
        self.registry = registry
        self.embedder = embedder or HashingEmbedder()
        self.profile_bias = profile_bias
        self.entity_bias = entity_bias
        self._skill_vecs: dict[str, np.ndarray] = {}
        for skill in registry.skills_in_order():
            plugin = registry.plugins[skill.plugin_id]
            self._skill_vecs[skill.id] = self.embedder.embed(skill_document(skill, plugin))
        self._doc_vecs: dict[str, np.ndarray] = {
            doc.id: self.embedder.embed(doc.title + "\n" + doc.body) for doc in registry.docs.values()
        }

    def _skill_cosine(self, query_vec: np.ndarray, skill_id: str) -> float:
        return cosine(query_vec, self._skill_vecs[skill_id])

    def skill_score(self, query: ContextualQuery, query_vec: np.ndarray, skill_id: str) -> float:
        """Cosine plus the entity-affinity bias for one skill."""
        score = self._skill_cosine(query_vec, skill_id)
        consumed = set(self.registry.skills[skill_id].consumes_entity_kinds)
        if consumed and any(k.value in consumed for k in query.entity_kinds()):
            score += self.entity_bias
        return score

    def top_plugins(self, query: ContextualQuery, k: int) -> list[ScoredItem]:
        """Top-k plugins by best member-skill cosine, plus profile bias."""
        if k < 1:
            raise ValueError("k must be positive")
        if not self.registry.plugins:
            raise EmptyRegistryError("registry has no plugins")
        query_vec = self.embedder.embed(query.query_text)
        preferred = set(query.profile.preferred_plugin_ids)
        scored = []
        for plugin in self.registry.plugins_in_order():
            best = max(self._skill_cosine(query_vec, sid) for sid in plugin.skill_ids)
            if plugin.id in preferred:
                best += self.profile_bias
            scored.append(ScoredItem(plugin.id, best))
        scored.sort(key=lambda s: (-s.score, s.item_id))
        return scored[:k]

    def top_skills_within(self, plugin_ids: list[str], query: ContextualQuery, m: int) -> list[ScoredItem]:
        """Top-m skills drawn only from the given plugins."""
        if m < 1:
            raise ValueError("m must be positive")
        for pid in plugin_ids:
            if pid not in self.registry.plugins:
                raise UnknownPluginError(f"unknown plugin {pid!r}")
        query_vec = self.embedder.embed(query.query_text)
        scored = []
        for pid in plugin_ids:
            for sid in self.registry.plugins[pid].skill_ids:
                scored.append(ScoredItem(sid, self.skill_score(query, query_vec, sid)))
        scored.sort(key=lambda s: (-s.score, s.item_id))
        return scored[:m]

    def retrieve_knowledge(self, query: ContextualQuery, k: int) -> list[ScoredItem]:
        """Top-k knowledge docs by cosine over title + body."""
        if k < 0:
            raise ValueError("k must be non-negative")
        if k == 0 or not self.registry.docs:
            return []
        query_vec = self.embedder.embed(query.query_text)
        scored = [ScoredItem(did, cosine(query_vec, vec)) for did, vec in self._doc_vecs.items()]
        scored.sort(key=lambda s: (-s.score, s.item_id))
        return scored[:k]
