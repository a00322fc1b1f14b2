"""Rubric-based scoring of suggestion sets and report aggregation.

Novelty, grounding, alignment, and aggregation are pure and need no
model. Usefulness, clarity, and relevance are judged by a (mockable)
completion provider against three-level rubrics; judge failures degrade
to an excluded-but-counted score, never an error.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .context import ConversationTurn, Entity, EntityKind, extract_entities
from .errors import GatewayError, ParseError
from .gateway import ChatProvider, CompletionRequest
from .pipeline import REFERENCE_PHRASES, Suggestion
from .prompts import SYSTEM_JUDGE, build_judge_prompt, extract_json_object

NOVELTY_SIMILARITY_THRESHOLD = 0.6

RUBRIC_METRICS = ("usefulness", "clarity", "relevance")
ALL_METRICS = ("novelty", "grounding", "usefulness", "clarity", "relevance")

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# "this file hash" -> also match "these file hashes" etc. when counting
# reference phrases as grounded mentions.
_PLURAL_REFERENCES = {
    EntityKind.IPV4: "these IP addresses",
    EntityKind.IPV6: "these IPv6 addresses",
    EntityKind.EMAIL: "these email addresses",
    EntityKind.GUID: "these GUIDs",
    EntityKind.SHA256: "these file hashes",
    EntityKind.MD5: "these MD5 hashes",
    EntityKind.DOMAIN_NAME: "these domains",
    EntityKind.FILE_PATH: "these file paths",
    EntityKind.CVE_ID: "these CVEs",
    EntityKind.USER_HANDLE: "these users",
    EntityKind.QUOTED_LITERAL: "these values",
}

_REFERENCE_RE = re.compile(
    "|".join(
        re.escape(p)
        for p in sorted(
            list(REFERENCE_PHRASES.values()) + list(_PLURAL_REFERENCES.values()), key=len, reverse=True
        )
    ),
    re.IGNORECASE,
)


@dataclass(frozen=True)
class EvalSample:
    """One evaluated chat: its turns and the suggestions it received."""

    session_id: str
    turns: tuple[ConversationTurn, ...]
    suggestions: tuple[Suggestion, ...]
    predicted_skills: tuple[str, ...] | None = None
    config_tag: str = ""
    consistent_skill_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.suggestions) > 5:
            raise ValueError("a sample carries at most 5 suggestions")

    def judge_skills(self) -> list[str]:
        """Skills the judge treats as consistent with this conversation."""
        if self.consistent_skill_ids:
            return list(self.consistent_skill_ids)
        return [t.invoked_skill for t in self.turns if t.invoked_skill]


@dataclass
class SuggestionScores:
    novelty: float
    grounding: float
    usefulness: float | None
    clarity: float | None
    relevance: float | None

    def get(self, metric: str) -> float | None:
        return getattr(self, metric)


@dataclass
class Scorecard:
    """Per-suggestion scores and their per-sample means."""

    per_suggestion: list[SuggestionScores]
    n_excluded: dict[str, int] = field(default_factory=dict)

    @property
    def n_suggestions(self) -> int:
        return len(self.per_suggestion)

    def mean(self, metric: str) -> float | None:
        values = [s.get(metric) for s in self.per_suggestion if s.get(metric) is not None]
        return sum(values) / len(values) if values else None


def _normalize(text: str) -> str:
    return " ".join(_TOKEN_RE.findall(text.lower()))


def _trigrams(normalized: str) -> set[str]:
    return {normalized[i : i + 3] for i in range(len(normalized) - 2)}


def trigram_similarity(a: str, b: str) -> float:
    """Jaccard similarity of character trigrams over normalized tokens.

    Texts with fewer than three tokens compare by exact case-folded
    equality (1.0 or 0.0).
    """
    na, nb = _normalize(a), _normalize(b)
    if len(na.split()) < 3 or len(nb.split()) < 3:
        return 1.0 if a.casefold() == b.casefold() else 0.0
    ta, tb = _trigrams(na), _trigrams(nb)
    if not ta or not tb:
        return 1.0 if na == nb else 0.0
    union = ta | tb
    return len(ta & tb) / len(union)


def score_novelty(
    suggestion: Suggestion,
    turns: tuple[ConversationTurn, ...] | list[ConversationTurn],
    threshold: float = NOVELTY_SIMILARITY_THRESHOLD,
) -> float:
    """1 if the suggestion is new to the conversation, else 0.

    Non-novel when it is a near-rephrasing of any prior user prompt, or
    when its text already appears verbatim inside an assistant turn (the
    answer is already on screen).
    """
    text = suggestion.prompt_text
    for turn in turns:
        if turn.role == "user" and trigram_similarity(text, turn.text) >= threshold:
            return 0.0
        if turn.role == "assistant" and text.casefold() in turn.text.casefold():
            return 0.0
    return 1.0


def history_entities_of(turns: tuple[ConversationTurn, ...] | list[ConversationTurn]) -> list[Entity]:
    entities: list[Entity] = []
    for turn in turns:
        entities.extend(turn.entities if turn.entities else extract_entities(turn.text, source_turn=turn.index))
    return entities


def score_grounding(
    suggestion: Suggestion,
    turns: tuple[ConversationTurn, ...] | list[ConversationTurn],
) -> float:
    """Fraction of the prompt's entity mentions that the history grounds.

    Typed reference phrases ("these sign-ins" style, per entity kind)
    count as grounded mentions: substituting a reference for a history
    literal can never lower the score. A prompt with no entity mentions
    at all is fully grounded (1.0).
    """
    history_keys = {e.dedup_key() for e in history_entities_of(turns)}
    extracted = extract_entities(suggestion.prompt_text)
    n_references = len(_REFERENCE_RE.findall(suggestion.prompt_text))
    total = len(extracted) + n_references
    if total == 0:
        return 1.0
    grounded = sum(1 for e in extracted if e.dedup_key() in history_keys) + n_references
    return grounded / total


def _conversation_block(turns) -> str:
    return "\n".join(f"[{t.index}] {t.role}: {t.text}" for t in turns)


def score_rubric_llm(
    metric: str,
    suggestion: Suggestion,
    turns: tuple[ConversationTurn, ...] | list[ConversationTurn],
    gateway: ChatProvider,
    invoked_skills: list[str] | None = None,
    model_tag: str = "default",
) -> float | None:
    """Judge one suggestion on a three-level rubric; level/2 as the score.

    Returns None (excluded from aggregates) after a retry if the judge
    is unreachable or keeps answering off-format.
    """
    if metric not in RUBRIC_METRICS:
        raise ValueError(f"metric must be one of {RUBRIC_METRICS}")
    request = CompletionRequest(
        model_tag=model_tag,
        system_text=SYSTEM_JUDGE,
        user_text=build_judge_prompt(
            metric=metric,
            prompt_text=suggestion.prompt_text,
            skill_id=suggestion.skill_id,
            conversation_block=_conversation_block(turns),
            invoked_skills=invoked_skills or [],
        ),
    )
    for _ in range(2):
        try:
            result = gateway.complete(request)
        except GatewayError:
            continue
        doc = extract_json_object(result.text)
        if doc is not None and doc.get("level") in (0, 1, 2):
            return doc["level"] / 2.0
    return None


def score_sample(sample: EvalSample, gateway: ChatProvider, model_tag: str = "default") -> Scorecard:
    """Score every suggestion of one sample on all five metrics."""
    invoked = sample.judge_skills()
    per_suggestion: list[SuggestionScores] = []
    n_excluded: dict[str, int] = {m: 0 for m in RUBRIC_METRICS}
    for suggestion in sample.suggestions:
        rubric_scores = {}
        for metric in RUBRIC_METRICS:
            score = score_rubric_llm(metric, suggestion, sample.turns, gateway, invoked, model_tag)
            if score is None:
                n_excluded[metric] += 1
            rubric_scores[metric] = score
        per_suggestion.append(
            SuggestionScores(
                novelty=score_novelty(suggestion, sample.turns),
                grounding=score_grounding(suggestion, sample.turns),
                **rubric_scores,
            )
        )
    return Scorecard(per_suggestion=per_suggestion, n_excluded=n_excluded)


def skill_alignment(pairs: list[tuple[str, str]]) -> float | None:
    """Percentage of (suggested, predicted) skill pairs that agree."""
    if not pairs:
        return None
    equal = sum(1 for suggested, predicted in pairs if suggested == predicted)
    return 100.0 * equal / len(pairs)


@dataclass
class ReportRow:
    config_tag: str
    n_suggestions: int
    means: dict[str, float | None]
    n_excluded: dict[str, int]


@dataclass
class EvalReport:
    rows: list[ReportRow]
    overall: ReportRow
    alignment_pct: float | None = None

    def to_dict(self) -> dict:
        def row_dict(row: ReportRow) -> dict:
            return {
                "config_tag": row.config_tag,
                "n_suggestions": row.n_suggestions,
                **{m: row.means[m] for m in ALL_METRICS},
                "n_excluded": dict(row.n_excluded),
            }

        return {
            "rows": [row_dict(r) for r in self.rows],
            "overall": row_dict(self.overall),
            "skill_alignment_pct": self.alignment_pct,
        }

    def render_text(self) -> str:
        headers = ["config", "n", *ALL_METRICS]
        rows = [*self.rows, self.overall]
        table = [headers]
        for row in rows:
            cells = [row.config_tag or "(all)", str(row.n_suggestions)]
            for m in ALL_METRICS:
                v = row.means[m]
                cells.append("-" if v is None else f"{v:.3f}")
            table.append(cells)
        widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in table]
        lines.insert(1, "  ".join("-" * w for w in widths))
        if self.alignment_pct is not None:
            lines.append(f"skill alignment: {self.alignment_pct:.1f}%")
        return "\n".join(lines)


def _aggregate_rows(scored: list[tuple[EvalSample, Scorecard]], tag: str) -> ReportRow:
    all_scores: list[SuggestionScores] = []
    n_excluded: dict[str, int] = {m: 0 for m in RUBRIC_METRICS}
    for sample, card in scored:
        all_scores.extend(card.per_suggestion)
        for m in RUBRIC_METRICS:
            n_excluded[m] += card.n_excluded.get(m, 0)
    means: dict[str, float | None] = {}
    for m in ALL_METRICS:
        values = [s.get(m) for s in all_scores if s.get(m) is not None]
        means[m] = sum(values) / len(values) if values else None
    return ReportRow(config_tag=tag, n_suggestions=len(all_scores), means=means, n_excluded=n_excluded)


def aggregate(scored: list[tuple[EvalSample, Scorecard]]) -> EvalReport:
    """Per-metric means over all scored suggestions, grouped by config tag."""
    tags = sorted({sample.config_tag for sample, _ in scored if sample.config_tag})
    rows = [_aggregate_rows([sc for sc in scored if sc[0].config_tag == tag], tag) for tag in tags]
    overall = _aggregate_rows(scored, "")
    pairs: list[tuple[str, str]] = []
    for sample, _ in scored:
        if sample.predicted_skills is not None:
            pairs.extend(
                (s.skill_id, predicted)
                for s, predicted in zip(sample.suggestions, sample.predicted_skills)
            )
    return EvalReport(rows=rows, overall=overall, alignment_pct=skill_alignment(pairs))


# ------------------------------------------------------------------ datasets


def sample_from_dict(doc: dict) -> EvalSample:
    try:
        turns = tuple(
            ConversationTurn(
                index=int(t["index"]),
                role=str(t["role"]),
                text=str(t["text"]),
                invoked_skill=t.get("invoked_skill"),
                entities=tuple(
                    Entity(kind=EntityKind(e["kind"]), value=str(e["value"]), source_turn=int(t["index"]))
                    for e in t.get("entities", [])
                )
                or tuple(extract_entities(str(t["text"]), source_turn=int(t["index"]))),
            )
            for t in doc["turns"]
        )
        suggestions = tuple(
            Suggestion(
                prompt_text=str(s["prompt"]),
                skill_id=str(s["skill"]),
                rank_source=str(s.get("rank_source", "llm")),
            )
            for s in doc["suggestions"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed eval sample: {exc}") from exc
    predicted = doc.get("predicted_skills")
    return EvalSample(
        session_id=str(doc.get("session_id", "")),
        turns=turns,
        suggestions=suggestions,
        predicted_skills=tuple(predicted) if predicted is not None else None,
        config_tag=str(doc.get("config_tag", "")),
        consistent_skill_ids=tuple(doc.get("consistent_skill_ids", [])),
    )


def load_eval_dataset(path: str | Path) -> list[EvalSample]:
    """One JSON object per line, as written by the service or by hand."""
    samples = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"eval dataset line {line_no} is not valid JSON") from exc
        samples.append(sample_from_dict(doc))
    return samples


# ------------------------------------------------- expert (whole-set) labels

EXPERT_LABELS = ("extremely_useful", "useful", "not_useful")


def aggregate_expert_labels(labels: list[str]) -> dict[str, float]:
    """Whole-set expert labels into the three reported percentages.

    "useful_pct" counts both useful and extremely-useful sets.
    """
    for label in labels:
        if label not in EXPERT_LABELS:
            raise ValueError(f"unknown expert label {label!r}")
    n = len(labels)
    if n == 0:
        return {"useful_pct": 0.0, "extremely_useful_pct": 0.0, "not_useful_pct": 0.0, "n_sets": 0}
    extremely = sum(1 for l in labels if l == "extremely_useful")
    not_useful = sum(1 for l in labels if l == "not_useful")
    return {
        "useful_pct": 100.0 * (n - not_useful) / n,
        "extremely_useful_pct": 100.0 * extremely / n,
        "not_useful_pct": 100.0 * not_useful / n,
        "n_sets": n,
    }
