"""Service configuration: file paths, pipeline defaults, provider settings."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .gateway import ChatProvider, HttpChatProvider, MockChatProvider
from .pipeline import ModelConfig


@dataclass
class ProviderSettings:
    kind: str = "mock"  # "mock" | "http"
    endpoint: str = ""
    model_tag: str = "default"
    mini_model_tag: str = "default-mini"
    timeout_ms: int = 30000
    api_key_env: str = "SKILLREC_API_KEY"

    def build(self) -> ChatProvider:
        if self.kind == "mock":
            return MockChatProvider()
        if self.kind == "http":
            if not self.endpoint:
                raise ValueError("http provider requires an endpoint")
            return HttpChatProvider(
                endpoint=self.endpoint,
                api_key=os.environ.get(self.api_key_env),
                timeout_ms=self.timeout_ms,
            )
        raise ValueError(f"unknown provider kind {self.kind!r}")


@dataclass
class ServiceConfig:
    catalog_path: str = "fixtures/catalog.json"
    telemetry_log_path: str = "telemetry_events.jsonl"
    model_snapshot_path: str = "model_snapshot.json"
    playground_dir: str | None = None
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    alpha: float = 1.0
    min_row_obs: int = 5
    model: ModelConfig = field(default_factory=ModelConfig)
    provider: ProviderSettings = field(default_factory=ProviderSettings)

    @classmethod
    def from_dict(cls, doc: dict) -> "ServiceConfig":
        model_doc = doc.get("model", {})
        provider_doc = doc.get("provider", {})
        try:
            return cls(
                catalog_path=str(doc.get("catalog_path", cls.catalog_path)),
                telemetry_log_path=str(doc.get("telemetry_log_path", cls.telemetry_log_path)),
                model_snapshot_path=str(doc.get("model_snapshot_path", cls.model_snapshot_path)),
                playground_dir=doc.get("playground_dir"),
                bind_host=str(doc.get("bind_host", cls.bind_host)),
                bind_port=int(doc.get("bind_port", cls.bind_port)),
                alpha=float(doc.get("alpha", 1.0)),
                min_row_obs=int(doc.get("min_row_obs", 5)),
                model=ModelConfig(**model_doc),
                provider=ProviderSettings(**provider_doc),
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(f"invalid service config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParseError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("config file must hold a JSON object")
        return cls.from_dict(doc)
