"""Skill-grounded prompt suggestion engine for domain-specific AI assistants.

Given a user query and session context, retrieves relevant skills from a
hierarchical plugin catalog, ranks them with telemetry-driven Markov
statistics and/or an LLM, and synthesizes up to five actionable
{prompt, skill} suggestions — plus a rubric-based evaluation harness.
"""

from .catalog import KnowledgeDoc, Plugin, Skill, SkillRegistry, load_catalog, serialize_catalog, skill_document, validate
from .context import (
    ContextualQuery,
    ConversationTurn,
    Entity,
    EntityKind,
    UserProfile,
    build_contextual_query,
    extract_entities,
    summarize_history,
)
from .embedding import HashingEmbedder, cosine
from .errors import (
    CatalogValidationError,
    DimensionMismatchError,
    DuplicateEventIdError,
    EmptyRegistryError,
    GatewayError,
    MalformedResponse,
    ParseError,
    ProviderError,
    ProviderTimeout,
    SkillRecError,
    StorageError,
    UnknownPluginError,
    UnknownSkillError,
)
from .evaluation import (
    EvalReport,
    EvalSample,
    Scorecard,
    aggregate,
    score_grounding,
    score_novelty,
    score_rubric_llm,
    skill_alignment,
)
from .gateway import CompletionRequest, CompletionResult, HttpChatProvider, MockChatProvider, infer_skills_llm
from .markov import RankedSkill, popularity_prior, rank_next_skills, transition_prob
from .pipeline import (
    MetaPrompt,
    ModelConfig,
    Suggestion,
    SuggestionPipeline,
    SuggestionSet,
    merge_rankings,
    substitute_entity_references,
)
from .retrieval import Retriever, ScoredItem
from .telemetry import (
    BuildReport,
    EventLog,
    TelemetryEvent,
    TransitionModel,
    build_transition_model,
    empty_model,
    load_snapshot,
    snapshot,
)

__version__ = "0.1.0"
