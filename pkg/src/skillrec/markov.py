"""Next-skill ranking from transition statistics.

Laplace smoothing keeps unseen transitions from zeroing out; rows with
too few observations fall back to a smoothed popularity prior over
global invocation counts (cold start). Candidate-restricted scores are
not renormalized, so they stay comparable with full-set probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnknownSkillError
from .telemetry import TransitionModel

RANK_SOURCES = ("markov", "popularity", "llm", "hybrid")


@dataclass(frozen=True)
class RankedSkill:
    skill_id: str
    score: float
    source: str  # one of RANK_SOURCES


def _require_skill(model: TransitionModel, skill_id: str) -> int:
    try:
        return model.index[skill_id]
    except KeyError:
        raise UnknownSkillError(f"skill {skill_id!r} not in model") from None


def transition_prob(model: TransitionModel, from_skill: str, to_skill: str) -> float:
    """Smoothed P(to | from) = (c + alpha) / (row_total + alpha * |S|)."""
    i = _require_skill(model, from_skill)
    j = _require_skill(model, to_skill)
    n = model.n_skills
    return (model.counts[i, j] + model.alpha) / (model.row_totals[i] + model.alpha * n)


def popularity_prior(model: TransitionModel) -> dict[str, float]:
    """Smoothed global invocation distribution over all skills."""
    n = model.n_skills
    total = float(model.global_counts.sum())
    denom = total + model.alpha * n
    return {
        sid: (model.global_counts[i] + model.alpha) / denom
        for i, sid in enumerate(model.skill_ids)
    }


def is_cold_start(model: TransitionModel, last_skill: str | None) -> bool:
    """True when the last-skill row carries too little signal to trust."""
    if last_skill is None or not model.has_skill(last_skill):
        return True
    return int(model.row_totals[model.index[last_skill]]) < model.min_row_obs


def rank_next_skills(
    model: TransitionModel,
    last_skill: str | None,
    candidates: list[str],
    top_n: int,
) -> list[RankedSkill]:
    """Rank candidate skills for the next turn.

    Warm rows rank by transition probability from ``last_skill``; cold
    contexts rank by the popularity prior. Ties break by skill id
    ascending. Scores are probabilities over the full skill set,
    restricted (not renormalized) to the candidates.
    """
    if top_n < 1:
        raise ValueError("top_n must be positive")
    for sid in candidates:
        _require_skill(model, sid)
    if is_cold_start(model, last_skill):
        prior = popularity_prior(model)
        ranked = [RankedSkill(sid, prior[sid], "popularity") for sid in candidates]
    else:
        ranked = [
            RankedSkill(sid, transition_prob(model, last_skill, sid), "markov")
            for sid in candidates
        ]
    ranked.sort(key=lambda r: (-r.score, r.skill_id))
    return ranked[:top_n]
