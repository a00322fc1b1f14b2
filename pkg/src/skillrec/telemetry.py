"""Behavioral telemetry: append-only event log and the batch aggregation
job that turns per-session skill invocations into transition statistics.

Only ``skill_invoked`` events contribute to transition counts. A click on
a suggestion is logged but does not reinforce the chain by itself; the
skill invocation that follows it does. Events that reference skills
unknown to the current catalog are skipped and reported, never fatal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import SkillRegistry
from .errors import DuplicateEventIdError, ParseError, StorageError

EVENT_KINDS = ("skill_invoked", "suggestion_shown", "suggestion_clicked")

DEFAULT_ALPHA = 1.0
DEFAULT_MIN_ROW_OBS = 5


@dataclass(frozen=True)
class TelemetryEvent:
    event_id: str
    session_id: str
    timestamp_ms: int
    kind: str
    skill_id: str | None = None
    suggestion_text: str | None = None

    def validate(self) -> None:
        if not self.event_id:
            raise ValueError("event_id must be non-empty")
        if not self.session_id:
            raise ValueError("session_id must be non-empty")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind in ("skill_invoked", "suggestion_clicked") and not self.skill_id:
            raise ValueError(f"{self.kind} events require a skill_id")

    def to_dict(self) -> dict:
        out = {
            "event_id": self.event_id,
            "session_id": self.session_id,
            "timestamp_ms": self.timestamp_ms,
            "kind": self.kind,
        }
        if self.skill_id is not None:
            out["skill_id"] = self.skill_id
        if self.suggestion_text is not None:
            out["suggestion_text"] = self.suggestion_text
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "TelemetryEvent":
        try:
            event = cls(
                event_id=str(doc["event_id"]),
                session_id=str(doc["session_id"]),
                timestamp_ms=int(doc["timestamp_ms"]),
                kind=str(doc["kind"]),
                skill_id=doc.get("skill_id"),
                suggestion_text=doc.get("suggestion_text"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed telemetry event: {doc!r}") from exc
        event.validate()
        return event


class EventLog:
    """Append-only, line-delimited JSON event log.

    With a path, every append is written through and flushed; without
    one, the log lives in memory (tests, ephemeral services). Appends
    are expected to be serialized by the caller (single-writer).
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._events: list[TelemetryEvent] = []
        self._ids: set[str] = set()
        if self.path is not None and self.path.exists():
            try:
                text = self.path.read_text(encoding="utf-8")
            except OSError as exc:
                raise StorageError(f"cannot read event log: {exc}") from exc
            for line_no, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    doc = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"event log line {line_no} is not valid JSON") from exc
                event = TelemetryEvent.from_dict(doc)
                self._events.append(event)
                self._ids.add(event.event_id)

    def __len__(self) -> int:
        return len(self._events)

    def append(self, event: TelemetryEvent) -> int:
        """Durably append one event; returns the new log length."""
        event.validate()
        if event.event_id in self._ids:
            raise DuplicateEventIdError(f"event_id {event.event_id!r} already logged")
        if self.path is not None:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
                    fh.flush()
            except OSError as exc:
                raise StorageError(f"cannot append to event log: {exc}") from exc
        self._events.append(event)
        self._ids.add(event.event_id)
        return len(self._events)

    def events(self) -> list[TelemetryEvent]:
        """Immutable-by-convention snapshot of the log contents."""
        return list(self._events)


@dataclass(frozen=True)
class TransitionModel:
    """First-order Markov statistics over per-session skill invocations.

    ``skill_ids`` is sorted ascending (canonical index order);
    ``counts[i][j]`` is the number of observed transitions from skill i
    to skill j; ``global_counts`` are total invocations per skill,
    including invocations that formed no transition pair.
    """

    skill_ids: tuple[str, ...]
    counts: np.ndarray
    row_totals: np.ndarray
    global_counts: np.ndarray
    alpha: float = DEFAULT_ALPHA
    min_row_obs: int = DEFAULT_MIN_ROW_OBS
    index: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {sid: i for i, sid in enumerate(self.skill_ids)})
        for arr in (self.counts, self.row_totals, self.global_counts):
            arr.flags.writeable = False

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return (
            self.skill_ids == other.skill_ids
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.row_totals, other.row_totals)
            and np.array_equal(self.global_counts, other.global_counts)
            and self.alpha == other.alpha
            and self.min_row_obs == other.min_row_obs
        )

    @property
    def n_skills(self) -> int:
        return len(self.skill_ids)

    def has_skill(self, skill_id: str) -> bool:
        return skill_id in self.index


def empty_model(
    skill_ids: list[str] | tuple[str, ...],
    alpha: float = DEFAULT_ALPHA,
    min_row_obs: int = DEFAULT_MIN_ROW_OBS,
) -> TransitionModel:
    """All-zero model over the given skills (cold start)."""
    ordered = tuple(sorted(skill_ids))
    n = len(ordered)
    return TransitionModel(
        skill_ids=ordered,
        counts=np.zeros((n, n), dtype=np.int64),
        row_totals=np.zeros(n, dtype=np.int64),
        global_counts=np.zeros(n, dtype=np.int64),
        alpha=alpha,
        min_row_obs=min_row_obs,
    )


@dataclass(frozen=True)
class BuildReport:
    """Outcome of one batch aggregation run."""

    model: TransitionModel
    n_events: int
    n_invocations: int
    n_skipped: int
    skipped_event_ids: tuple[str, ...]


def build_transition_model(
    events: list[TelemetryEvent],
    registry: SkillRegistry,
    alpha: float = DEFAULT_ALPHA,
    min_row_obs: int = DEFAULT_MIN_ROW_OBS,
) -> BuildReport:
    """Aggregate the full event log into a TransitionModel.

    Per session, skill_invoked events are ordered by (timestamp,
    event_id) and every adjacent pair increments one transition count.
    Invocations of skills absent from the registry are skipped and
    reported. Deterministic for a given log.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    skill_ids = tuple(sorted(registry.skills))
    index = {sid: i for i, sid in enumerate(skill_ids)}
    n = len(skill_ids)
    counts = np.zeros((n, n), dtype=np.int64)
    global_counts = np.zeros(n, dtype=np.int64)

    sessions: dict[str, list[TelemetryEvent]] = {}
    skipped: list[str] = []
    n_invocations = 0
    for event in events:
        if event.kind != "skill_invoked":
            continue
        n_invocations += 1
        if event.skill_id not in index:
            skipped.append(event.event_id)
            continue
        sessions.setdefault(event.session_id, []).append(event)

    for session_events in sessions.values():
        session_events.sort(key=lambda e: (e.timestamp_ms, e.event_id))
        for event in session_events:
            global_counts[index[event.skill_id]] += 1
        for prev, nxt in zip(session_events, session_events[1:]):
            counts[index[prev.skill_id], index[nxt.skill_id]] += 1

    model = TransitionModel(
        skill_ids=skill_ids,
        counts=counts,
        row_totals=counts.sum(axis=1),
        global_counts=global_counts,
        alpha=alpha,
        min_row_obs=min_row_obs,
    )
    return BuildReport(
        model=model,
        n_events=len(events),
        n_invocations=n_invocations,
        n_skipped=len(skipped),
        skipped_event_ids=tuple(skipped),
    )


def snapshot(model: TransitionModel) -> dict:
    """Serializable snapshot document for one model.

    ``global_counts`` must travel with the snapshot: invocations that
    never formed a transition pair (single-invocation sessions) are not
    recoverable from the counts matrix. Row totals are recomputed on load.
    """
    return {
        "skill_ids": list(model.skill_ids),
        "counts": model.counts.tolist(),
        "global_counts": model.global_counts.tolist(),
        "alpha": model.alpha,
        "min_row_obs": model.min_row_obs,
    }


def load_snapshot(doc: dict | str | bytes) -> TransitionModel:
    """Inverse of snapshot(); raises ParseError on malformed documents."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"snapshot is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("snapshot must be a JSON object")
    try:
        skill_ids = tuple(str(s) for s in doc["skill_ids"])
        counts = np.asarray(doc["counts"], dtype=np.int64)
        alpha = float(doc["alpha"])
        min_row_obs = int(doc["min_row_obs"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"snapshot missing or malformed field: {exc}") from exc
    n = len(skill_ids)
    if counts.shape != (n, n):
        raise ParseError(f"counts must be a {n}x{n} matrix, got shape {counts.shape}")
    if (counts < 0).any():
        raise ParseError("counts must be non-negative")
    if "global_counts" in doc:
        global_counts = np.asarray(doc["global_counts"], dtype=np.int64)
        if global_counts.shape != (n,):
            raise ParseError("global_counts length must match skill_ids")
    else:
        # older snapshots: best available reconstruction
        global_counts = counts.sum(axis=1)
    return TransitionModel(
        skill_ids=skill_ids,
        counts=counts,
        row_totals=counts.sum(axis=1),
        global_counts=global_counts,
        alpha=alpha,
        min_row_obs=min_row_obs,
    )


def save_snapshot_file(model: TransitionModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(snapshot(model), indent=2) + "\n", encoding="utf-8")


def load_snapshot_file(path: str | Path) -> TransitionModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read snapshot: {exc}") from exc
    return load_snapshot(text)
