"""Command-line interface: serving, batch jobs, and one-off runs.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .catalog import load_catalog
from .config import ServiceConfig
from .context import build_contextual_query, parse_session
from .errors import CatalogValidationError, DuplicateEventIdError, ParseError, SkillRecError
from .evaluation import aggregate, load_eval_dataset, score_sample
from .pipeline import SuggestionPipeline
from .service import AppState, create_app
from .telemetry import (
    EventLog,
    TelemetryEvent,
    build_transition_model,
    empty_model,
    load_snapshot_file,
    save_snapshot_file,
)

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _load_config(config_path: str | None) -> ServiceConfig:
    if config_path is None:
        return ServiceConfig()
    return ServiceConfig.from_file(config_path)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Service config JSON file.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None):
    """Skill-grounded prompt suggestion engine."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["config"] = _load_config(config_path)
    except ParseError as exc:
        _fail(str(exc), EXIT_VALIDATION)


@main.command("validate-catalog")
@click.option("--catalog", "catalog_path", type=click.Path(), default=None, help="Catalog file (defaults to the configured one).")
@click.pass_context
def validate_catalog(ctx: click.Context, catalog_path: str | None):
    """Load and validate the catalog; list every violation."""
    config: ServiceConfig = ctx.obj["config"]
    path = Path(catalog_path or config.catalog_path)
    try:
        registry = load_catalog(path)
    except CatalogValidationError as exc:
        for violation in exc.violations:
            click.echo(str(violation), err=True)
        sys.exit(EXIT_VALIDATION)
    except ParseError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(f"catalog ok: {len(registry.plugins)} plugins, {len(registry.skills)} skills, {len(registry.docs)} docs")


@main.command("suggest")
@click.option("--query", required=True, help="The user's query text.")
@click.option("--session-file", type=click.Path(exists=True), default=None, help="Session transcript JSON.")
@click.option("--mode", type=str, default=None, help="Override the configured pipeline mode.")
@click.pass_context
def suggest(ctx: click.Context, query: str, session_file: str | None, mode: str | None):
    """Run one recommendation and print the suggestion set as JSON."""
    config: ServiceConfig = ctx.obj["config"]
    try:
        registry = load_catalog(Path(config.catalog_path))
        snapshot_path = Path(config.model_snapshot_path)
        if snapshot_path.exists():
            model = load_snapshot_file(snapshot_path)
        else:
            model = empty_model(list(registry.skills), config.alpha, config.min_row_obs)
        if session_file:
            session_doc = json.loads(Path(session_file).read_text(encoding="utf-8"))
        else:
            session_doc = {"turns": []}
        turns, profile = parse_session(session_doc)
        model_config = config.model if mode is None else replace(config.model, mode=mode)
        pipeline = SuggestionPipeline(
            registry=registry,
            model=model,
            gateway=config.provider.build(),
            model_tag=config.provider.model_tag,
            mini_model_tag=config.provider.mini_model_tag,
        )
        contextual = build_contextual_query(turns, profile, query)
        result = pipeline.recommend(contextual, model_config)
    except (ParseError, CatalogValidationError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except SkillRecError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    click.echo(
        json.dumps(
            {
                "suggestions": [
                    {"prompt": s.prompt_text, "skill": s.skill_id, "rank_source": s.rank_source}
                    for s in result.suggestions
                ],
                "degradation_flags": list(result.degradation_flags),
            },
            indent=2,
        )
    )


@main.command("ingest")
@click.option("--events-file", required=True, type=click.Path(exists=True), help="JSONL file of telemetry events.")
@click.pass_context
def ingest(ctx: click.Context, events_file: str):
    """Append events from a JSONL file into the telemetry log."""
    config: ServiceConfig = ctx.obj["config"]
    try:
        log = EventLog(config.telemetry_log_path)
    except (ParseError, SkillRecError) as exc:
        _fail(str(exc), EXIT_RUNTIME)
    ingested = duplicates = invalid = 0
    for line_no, line in enumerate(Path(events_file).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            event = TelemetryEvent.from_dict(json.loads(line))
            log.append(event)
            ingested += 1
        except DuplicateEventIdError:
            duplicates += 1
        except (ParseError, ValueError, json.JSONDecodeError):
            invalid += 1
            click.echo(f"invalid event at line {line_no}", err=True)
    click.echo(json.dumps({"ingested": ingested, "duplicates": duplicates, "invalid": invalid}))
    if invalid:
        sys.exit(EXIT_VALIDATION)


@main.command("build-model")
@click.option("--alpha", type=float, default=None, help="Laplace smoothing constant.")
@click.option("--min-row-obs", type=int, default=None, help="Cold-start row threshold.")
@click.pass_context
def build_model(ctx: click.Context, alpha: float | None, min_row_obs: int | None):
    """Aggregate the telemetry log into a transition-model snapshot."""
    config: ServiceConfig = ctx.obj["config"]
    try:
        registry = load_catalog(Path(config.catalog_path))
        log = EventLog(config.telemetry_log_path)
        report = build_transition_model(
            log.events(),
            registry,
            alpha=alpha if alpha is not None else config.alpha,
            min_row_obs=min_row_obs if min_row_obs is not None else config.min_row_obs,
        )
        save_snapshot_file(report.model, config.model_snapshot_path)
    except (ParseError, CatalogValidationError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except SkillRecError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    click.echo(
        json.dumps(
            {
                "snapshot_path": config.model_snapshot_path,
                "skill_count": report.model.n_skills,
                "n_events": report.n_events,
                "n_invocations": report.n_invocations,
                "n_skipped": report.n_skipped,
                "total_transitions": int(report.model.row_totals.sum()),
            }
        )
    )


@main.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True), help="JSONL eval dataset.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Report JSON destination.")
@click.pass_context
def eval_command(ctx: click.Context, dataset: str, out_path: str | None):
    """Score a dataset with the configured judge and write the report."""
    config: ServiceConfig = ctx.obj["config"]
    try:
        samples = load_eval_dataset(dataset)
        gateway = config.provider.build()
        scored = [(s, score_sample(s, gateway, config.provider.model_tag)) for s in samples]
        report = aggregate(scored)
    except (ParseError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except SkillRecError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    destination = Path(out_path) if out_path else Path(dataset).with_suffix(".report.json")
    destination.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    click.echo(report.render_text())
    click.echo(f"report written to {destination}")


@main.command("serve")
@click.option("--host", default=None, help="Bind host (overrides config).")
@click.option("--port", type=int, default=None, help="Bind port (overrides config).")
@click.option("--playground-dir", type=click.Path(), default=None, help="Static playground directory.")
@click.pass_context
def serve(ctx: click.Context, host: str | None, port: int | None, playground_dir: str | None):
    """Start the HTTP service (fails fast on an invalid catalog)."""
    import uvicorn

    config: ServiceConfig = ctx.obj["config"]
    if playground_dir:
        config.playground_dir = playground_dir
    try:
        state = AppState(config)
    except CatalogValidationError as exc:
        for violation in exc.violations:
            click.echo(str(violation), err=True)
        sys.exit(EXIT_VALIDATION)
    except (ParseError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except SkillRecError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    app = create_app(state)
    uvicorn.run(app, host=host or config.bind_host, port=port or config.bind_port, log_level="info")


if __name__ == "__main__":
    main()
