"""End-to-end suggestion pipeline: retrieve candidates, rank them by the
configured strategy, synthesize the meta-prompt, call the model, and
enforce the suggestion contract (at most five, distinct skills, entity
references instead of long literals).

Content failures never raise: malformed model output, hallucinated
skills, and provider outages all degrade to weaker-but-valid suggestion
sets, with the degradation visible in the returned flags.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .catalog import SkillRegistry
from .context import ContextualQuery, Entity, EntityKind, summarize_history
from .errors import GatewayError, MalformedResponse
from .gateway import ChatProvider, CompletionRequest, infer_skills_llm
from .markov import RankedSkill, is_cold_start, popularity_prior, rank_next_skills
from .prompts import (
    SYSTEM_SUGGEST,
    TASK_GENERATE_SUGGESTIONS,
    extract_json_array,
)
from .retrieval import Retriever
from .telemetry import TransitionModel

MAX_SUGGESTIONS = 5
MODES = ("full_llm", "mini_hybrid", "markov_hybrid")

FLAG_COLD_START = "cold_start_fallback"
FLAG_LLM_DEGRADED = "llm_degraded"
FLAG_TEMPLATE_FALLBACK = "template_fallback"
FLAG_DUPLICATE_SKILLS = "duplicate_skills"

# Typed short references substituted for long entity literals.
REFERENCE_PHRASES: dict[EntityKind, str] = {
    EntityKind.IPV4: "this IP address",
    EntityKind.IPV6: "this IPv6 address",
    EntityKind.EMAIL: "this email address",
    EntityKind.GUID: "this GUID",
    EntityKind.SHA256: "this file hash",
    EntityKind.MD5: "this MD5 hash",
    EntityKind.DOMAIN_NAME: "this domain",
    EntityKind.FILE_PATH: "this file path",
    EntityKind.CVE_ID: "this CVE",
    EntityKind.USER_HANDLE: "this user",
    EntityKind.QUOTED_LITERAL: "this value",
}

ENTITY_REFERENCE_MIN_CHARS = 20


@dataclass(frozen=True)
class ModelConfig:
    """One of the three compared pipeline configurations."""

    mode: str = "full_llm"
    k_plugins: int = 3
    m_skills: int = 8
    n_suggest: int = 5
    hybrid_weight_markov: float = 0.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= self.n_suggest <= MAX_SUGGESTIONS:
            raise ValueError(f"n_suggest must be in [1, {MAX_SUGGESTIONS}]")
        if self.k_plugins < 1 or self.m_skills < 1:
            raise ValueError("k_plugins and m_skills must be positive")
        if not 0.0 <= self.hybrid_weight_markov <= 1.0:
            raise ValueError("hybrid_weight_markov must be in [0, 1]")


@dataclass(frozen=True)
class Suggestion:
    prompt_text: str
    skill_id: str
    rank_source: str


@dataclass(frozen=True)
class SuggestionSet:
    suggestions: tuple[Suggestion, ...]
    degradation_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetaPrompt:
    """Assembled instruction document for the generation model."""

    system_text: str
    context_block: str
    knowledge_block: str
    skill_block: str
    fewshot_block: str
    format_instruction: str
    skill_ids: tuple[str, ...]
    want: int

    def render_user_text(self) -> str:
        return "\n".join(
            [
                f"TASK: {TASK_GENERATE_SUGGESTIONS}",
                f"WANT: {self.want}",
                "",
                "## Context",
                self.context_block,
                "",
                "## Knowledge",
                self.knowledge_block,
                "",
                "## Skills (ranked)",
                self.skill_block,
                "",
                "## Examples",
                self.fewshot_block,
                "",
                "## Output format",
                self.format_instruction,
            ]
        )


def merge_rankings(markov_ranked: list[RankedSkill], llm_order: list[str], weight_markov: float) -> list[RankedSkill]:
    """Blend a Markov ranking with an LLM ordering of the same candidates.

    Markov scores are normalized by the best candidate score; the LLM
    contributes rank-based scores (n - position) / n. Ties break by
    skill id ascending.
    """
    markov_scores = {r.skill_id: r.score for r in markov_ranked}
    max_score = max(markov_scores.values())
    n = len(llm_order)
    llm_scores = {sid: (n - pos) / n for pos, sid in enumerate(llm_order)}
    merged = [
        RankedSkill(
            skill_id=sid,
            score=weight_markov * (markov_scores[sid] / max_score) + (1.0 - weight_markov) * llm_scores.get(sid, 0.0),
            source="hybrid",
        )
        for sid in markov_scores
    ]
    merged.sort(key=lambda r: (-r.score, r.skill_id))
    return merged


def substitute_entity_references(prompt_text: str, history_entities: list[Entity] | tuple[Entity, ...]) -> str:
    """Replace long history-entity literals with typed references.

    Every verbatim occurrence of a history entity value longer than
    ENTITY_REFERENCE_MIN_CHARS characters becomes its kind-typed phrase
    ("this file hash", "this GUID", ...); shorter values stay verbatim.
    Replacement is a single deterministic left-to-right pass, longest
    value first at each position.
    """
    values: dict[str, str] = {}
    for entity in history_entities:
        if len(entity.value) > ENTITY_REFERENCE_MIN_CHARS and entity.value not in values:
            values[entity.value] = REFERENCE_PHRASES[entity.kind]
    if not values:
        return prompt_text
    ordered = sorted(values, key=len, reverse=True)
    pattern = re.compile("|".join(re.escape(v) for v in ordered))
    return pattern.sub(lambda m: values[m.group(0)], prompt_text)


class SuggestionPipeline:
    """Stateless orchestration over immutable registry/model snapshots."""

    def __init__(
        self,
        registry: SkillRegistry,
        model: TransitionModel,
        gateway: ChatProvider,
        retriever: Retriever | None = None,
        model_tag: str = "default",
        mini_model_tag: str = "default-mini",
        knowledge_k: int = 3,
        context_max_chars: int = 2000,
    ):
        self.registry = registry
        self.model = model
        self.gateway = gateway
        self.retriever = retriever or Retriever(registry)
        self.model_tag = model_tag
        self.mini_model_tag = mini_model_tag
        self.knowledge_k = knowledge_k
        self.context_max_chars = context_max_chars

    # ---------------------------------------------------------------- ranking

    def _context_block(self, query: ContextualQuery) -> str:
        history = summarize_history(query.recent_turns, self.context_max_chars)
        query_line = f"[query] user: {query.query_text}"
        return f"{history}\n{query_line}" if history else query_line

    def _candidates(self, query: ContextualQuery, config: ModelConfig) -> list[str]:
        plugins = self.retriever.top_plugins(query, config.k_plugins)
        skills = self.retriever.top_skills_within([p.item_id for p in plugins], query, config.m_skills)
        return [s.item_id for s in skills]

    def _llm_candidate_rows(self, candidate_ids: list[str]) -> list[tuple[str, str, str]]:
        rows = []
        for sid in candidate_ids:
            skill = self.registry.skills[sid]
            example = skill.example_prompts[0] if skill.example_prompts else ""
            rows.append((sid, skill.description, example))
        return rows

    def _llm_order(self, query: ContextualQuery, candidate_ids: list[str], model_tag: str) -> tuple[list[str], bool]:
        inference = infer_skills_llm(
            context_block=self._context_block(query),
            candidates=self._llm_candidate_rows(candidate_ids),
            want=len(candidate_ids),
            gateway=self.gateway,
            model_tag=model_tag,
        )
        return list(inference.skill_ids), inference.degraded

    def rank_skills(self, config: ModelConfig, query: ContextualQuery) -> tuple[list[RankedSkill], list[str]]:
        """Rank retrieval candidates per the configured strategy.

        Returns the ranked list plus degradation flags. Provider outages
        degrade the ranking (candidate order, popularity, or pure Markov
        depending on mode) instead of raising.
        """
        candidate_ids = self._candidates(query, config)
        flags: list[str] = []
        if not candidate_ids:
            return [], flags

        def llm_ranking(model_tag: str) -> list[RankedSkill]:
            try:
                order, degraded = self._llm_order(query, candidate_ids, model_tag)
            except GatewayError:
                flags.append(FLAG_LLM_DEGRADED)
                order = list(candidate_ids)
            else:
                if degraded:
                    flags.append(FLAG_LLM_DEGRADED)
            n = len(order)
            return [RankedSkill(sid, (n - pos) / n, "llm") for pos, sid in enumerate(order)]

        if config.mode in ("full_llm", "mini_hybrid"):
            tag = self.model_tag if config.mode == "full_llm" else self.mini_model_tag
            return llm_ranking(tag), flags

        # markov_hybrid
        if is_cold_start(self.model, query.last_invoked_skill):
            flags.append(FLAG_COLD_START)
            ranked = llm_ranking(self.model_tag)
            if FLAG_LLM_DEGRADED in flags:
                prior = popularity_prior(self.model)
                ranked = sorted(
                    (RankedSkill(sid, prior[sid], "popularity") for sid in candidate_ids),
                    key=lambda r: (-r.score, r.skill_id),
                )
            return ranked, flags

        markov_ranked = rank_next_skills(self.model, query.last_invoked_skill, candidate_ids, top_n=len(candidate_ids))
        weight = config.hybrid_weight_markov
        if weight >= 1.0:
            return markov_ranked, flags
        try:
            # candidates presented in Markov order; the model refines them
            order, degraded = self._llm_order(query, [r.skill_id for r in markov_ranked], self.model_tag)
            if degraded:
                flags.append(FLAG_LLM_DEGRADED)
        except GatewayError:
            flags.append(FLAG_LLM_DEGRADED)
            return markov_ranked, flags
        if weight <= 0.0:
            n = len(order)
            return [RankedSkill(sid, (n - pos) / n, "llm") for pos, sid in enumerate(order)], flags
        return merge_rankings(markov_ranked, order, weight), flags

    # -------------------------------------------------------------- synthesis

    def synthesize_meta_prompt(
        self,
        query: ContextualQuery,
        knowledge: list[tuple[str, str]],
        ranked: list[RankedSkill],
        config: ModelConfig,
    ) -> MetaPrompt:
        """Deterministic template fill; ``knowledge`` is (title, snippet) pairs."""
        if not ranked:
            raise ValueError("ranked skill list must be non-empty")
        skill_lines = []
        fewshot_lines = []
        for i, r in enumerate(ranked, start=1):
            skill = self.registry.skills[r.skill_id]
            skill_lines.append(f"{i}. {skill.id} :: {skill.name} :: {skill.description}")
            for example in skill.example_prompts[:2]:
                fewshot_lines.append(f"- {skill.id} :: {example}")
        knowledge_block = "\n".join(f"- {title}: {snippet}" for title, snippet in knowledge) or "(none)"
        format_instruction = (
            f"Return only a JSON array of exactly {config.n_suggest} objects, each "
            '{"prompt": string, "skill": string}. Every skill must be one of the '
            "ids listed under Skills, all skills distinct. Refer to long entity "
            'values from the context as short typed references such as "these '
            'sign-ins" or "this file hash" instead of repeating them.'
        )
        return MetaPrompt(
            system_text=SYSTEM_SUGGEST,
            context_block=self._context_block(query),
            knowledge_block=knowledge_block,
            skill_block="\n".join(skill_lines),
            fewshot_block="\n".join(fewshot_lines) or "(none)",
            format_instruction=format_instruction,
            skill_ids=tuple(r.skill_id for r in ranked),
            want=config.n_suggest,
        )

    # ------------------------------------------------------------- generation

    def _template_fallback(self, ranked_ids: tuple[str, ...], sources: dict[str, str], n: int) -> list[Suggestion]:
        out = []
        for sid in ranked_ids[:n]:
            skill = self.registry.skills[sid]
            prompt = skill.example_prompts[0] if skill.example_prompts else f"Use {skill.name}"
            out.append(Suggestion(prompt_text=prompt, skill_id=sid, rank_source=sources.get(sid, "llm")))
        return out

    def generate_suggestions(
        self, meta: MetaPrompt, config: ModelConfig, ranked: list[RankedSkill]
    ) -> SuggestionSet:
        """Call the model on the meta-prompt and enforce the output contract."""
        sources = {r.skill_id: r.source for r in ranked}
        flags: list[str] = []
        request = CompletionRequest(
            model_tag=self.model_tag,
            system_text=meta.system_text,
            user_text=meta.render_user_text(),
        )
        items: list | None = None
        for attempt in range(2):
            try:
                result = self.gateway.complete(request)
            except GatewayError:
                if attempt == 0:
                    continue
                flags.append(FLAG_LLM_DEGRADED)
                break
            items = extract_json_array(result.text)
            if items is not None:
                break
        if items is None:
            flags.append(FLAG_TEMPLATE_FALLBACK)
            suggestions = self._template_fallback(meta.skill_ids, sources, config.n_suggest)
            return SuggestionSet(suggestions=tuple(suggestions), degradation_flags=tuple(dict.fromkeys(flags)))

        allowed = set(meta.skill_ids)
        distinct_ranked = len(allowed)
        allow_duplicate_skills = distinct_ranked < config.n_suggest

        seen_prompts: set[str] = set()
        used_skills: set[str] = set()
        suggestions: list[Suggestion] = []
        for item in items:
            if len(suggestions) >= config.n_suggest:
                break
            if not isinstance(item, dict):
                continue
            prompt = item.get("prompt")
            skill_id = item.get("skill")
            if not isinstance(prompt, str) or not prompt.strip() or not isinstance(skill_id, str):
                continue
            if skill_id not in allowed:
                continue  # hallucination firewall
            prompt = prompt.strip()
            prompt_key = prompt.casefold()
            if prompt_key in seen_prompts:
                continue
            if skill_id in used_skills:
                if not allow_duplicate_skills:
                    continue
                if FLAG_DUPLICATE_SKILLS not in flags:
                    flags.append(FLAG_DUPLICATE_SKILLS)
            seen_prompts.add(prompt_key)
            used_skills.add(skill_id)
            suggestions.append(Suggestion(prompt_text=prompt, skill_id=skill_id, rank_source=sources.get(skill_id, "llm")))

        if not suggestions:
            flags.append(FLAG_TEMPLATE_FALLBACK)
            suggestions = self._template_fallback(meta.skill_ids, sources, config.n_suggest)
        return SuggestionSet(suggestions=tuple(suggestions), degradation_flags=tuple(dict.fromkeys(flags)))

    # ------------------------------------------------------------ end to end

    def recommend(self, query: ContextualQuery, config: ModelConfig) -> SuggestionSet:
        """Full run: rank, synthesize, generate, substitute references."""
        ranked, flags = self.rank_skills(config, query)
        if not ranked:
            return SuggestionSet(suggestions=(), degradation_flags=tuple(flags))
        knowledge = [
            (self.registry.docs[s.item_id].title, self.registry.docs[s.item_id].body[:200].replace("\n", " "))
            for s in self.retriever.retrieve_knowledge(query, self.knowledge_k)
        ]
        meta = self.synthesize_meta_prompt(query, knowledge, ranked, config)
        generated = self.generate_suggestions(meta, config, ranked)
        suggestions = tuple(
            replace(s, prompt_text=substitute_entity_references(s.prompt_text, query.history_entities))
            for s in generated.suggestions
        )
        all_flags = tuple(dict.fromkeys([*flags, *generated.degradation_flags]))
        return SuggestionSet(suggestions=suggestions, degradation_flags=all_flags)
