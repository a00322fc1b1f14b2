"""HTTP service: suggestion endpoint, telemetry ingestion, catalog and
model introspection, and the static playground.

Registry and transition model are immutable snapshots; a rebuild swaps
the model atomically. The telemetry append is the only serialized write
path.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .catalog import SkillRegistry, load_catalog, serialize_catalog
from .config import ServiceConfig
from .context import build_contextual_query, parse_session
from .errors import DuplicateEventIdError, ParseError, SkillRecError
from .gateway import ChatProvider
from .pipeline import ModelConfig, SuggestionPipeline
from .retrieval import Retriever
from .telemetry import (
    EventLog,
    TelemetryEvent,
    TransitionModel,
    build_transition_model,
    empty_model,
    load_snapshot_file,
    save_snapshot_file,
)


class AppState:
    """Everything a request handler needs, built once at startup."""

    def __init__(self, config: ServiceConfig, gateway: ChatProvider | None = None):
        self.config = config
        self.registry: SkillRegistry = load_catalog(Path(config.catalog_path))
        self.retriever = Retriever(self.registry)
        self.gateway = gateway if gateway is not None else config.provider.build()
        self.event_log = EventLog(config.telemetry_log_path)
        self._write_lock = threading.Lock()
        snapshot_path = Path(config.model_snapshot_path)
        if snapshot_path.exists():
            self.model: TransitionModel = load_snapshot_file(snapshot_path)
        else:
            self.model = empty_model(list(self.registry.skills), config.alpha, config.min_row_obs)

    def pipeline(self) -> SuggestionPipeline:
        return SuggestionPipeline(
            registry=self.registry,
            model=self.model,
            gateway=self.gateway,
            retriever=self.retriever,
            model_tag=self.config.provider.model_tag,
            mini_model_tag=self.config.provider.mini_model_tag,
        )

    def append_event(self, event: TelemetryEvent) -> int:
        with self._write_lock:
            return self.event_log.append(event)

    def rebuild_model(self, alpha: float | None = None, min_row_obs: int | None = None) -> dict:
        report = build_transition_model(
            self.event_log.events(),
            self.registry,
            alpha=alpha if alpha is not None else self.config.alpha,
            min_row_obs=min_row_obs if min_row_obs is not None else self.config.min_row_obs,
        )
        self.model = report.model  # atomic swap
        save_snapshot_file(report.model, self.config.model_snapshot_path)
        return {
            "skill_count": report.model.n_skills,
            "total_transitions": int(report.model.row_totals.sum()),
            "n_invocations": report.n_invocations,
            "n_skipped": report.n_skipped,
        }


def _merge_model_config(base: ModelConfig, overrides: dict | None) -> ModelConfig:
    if not overrides:
        return base
    allowed = {"mode", "k_plugins", "m_skills", "n_suggest", "hybrid_weight_markov"}
    unknown = set(overrides) - allowed
    if unknown:
        raise ParseError(f"unknown config override(s): {sorted(unknown)}")
    return replace(base, **overrides)


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="skillrec", version="0.1.0")
    app.state.skillrec = state

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed request body", "detail": str(exc)})

    @app.exception_handler(ParseError)
    async def _parse_handler(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(DuplicateEventIdError)
    async def _duplicate_handler(request: Request, exc: DuplicateEventIdError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(SkillRecError)
    async def _domain_handler(request: Request, exc: SkillRecError):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "skills": len(state.registry.skills)}

    @app.post("/v1/suggest")
    def suggest(body: dict):
        query_text = body.get("query_text")
        if not isinstance(query_text, str) or not query_text.strip():
            raise ParseError("body must include a non-empty 'query_text'")
        turns, profile = parse_session(body)
        for turn in turns:
            if turn.invoked_skill and turn.invoked_skill not in state.registry.skills:
                raise ParseError(f"turn {turn.index} invokes unknown skill {turn.invoked_skill!r}")
        config = _merge_model_config(state.config.model, body.get("config"))
        query = build_contextual_query(turns, profile, query_text)
        result = state.pipeline().recommend(query, config)

        request_id = uuid.uuid4().hex
        session_id = str(body.get("session_id") or "anonymous")
        now_ms = int(time.time() * 1000)
        for i, suggestion in enumerate(result.suggestions):
            state.append_event(
                TelemetryEvent(
                    event_id=f"{request_id}-s{i}",
                    session_id=session_id,
                    timestamp_ms=now_ms,
                    kind="suggestion_shown",
                    skill_id=suggestion.skill_id,
                    suggestion_text=suggestion.prompt_text,
                )
            )
        return {
            "request_id": request_id,
            "suggestions": [
                {"prompt": s.prompt_text, "skill": s.skill_id, "rank_source": s.rank_source}
                for s in result.suggestions
            ],
            "degradation_flags": list(result.degradation_flags),
        }

    @app.post("/v1/telemetry")
    def telemetry(body: dict):
        try:
            event = TelemetryEvent.from_dict(body)
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        length = state.append_event(event)
        return {"status": "ok", "log_length": length}

    @app.get("/v1/skills")
    def skills():
        return serialize_catalog(state.registry)

    @app.get("/v1/model/stats")
    def model_stats():
        model = state.model
        skills_out = []
        for i, sid in enumerate(model.skill_ids):
            row = model.counts[i]
            transitions = [
                {"to": model.skill_ids[j], "count": int(row[j])}
                for j in range(model.n_skills)
                if row[j] > 0
            ]
            transitions.sort(key=lambda t: (-t["count"], t["to"]))
            row_total = int(model.row_totals[i])
            for t in transitions:
                t["prob"] = (t["count"] + model.alpha) / (row_total + model.alpha * model.n_skills)
            skills_out.append(
                {
                    "skill_id": sid,
                    "row_total": row_total,
                    "global_count": int(model.global_counts[i]),
                    "top_transitions": transitions[:5],
                }
            )
        return {
            "alpha": model.alpha,
            "min_row_obs": model.min_row_obs,
            "total_transitions": int(model.row_totals.sum()),
            "skills": skills_out,
        }

    @app.post("/v1/model/rebuild")
    def model_rebuild(body: dict | None = None):
        body = body or {}
        return state.rebuild_model(alpha=body.get("alpha"), min_row_obs=body.get("min_row_obs"))

    playground = state.config.playground_dir
    if playground and Path(playground).is_dir():
        app.mount("/playground", StaticFiles(directory=playground, html=True), name="playground")

    return app
