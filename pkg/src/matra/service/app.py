"""Rate-limited HTTP service over a loaded checkpoint.

Responses are pure functions of (checkpoint, request); the only mutable
pieces are the per-client token buckets and the append-only annotation
store, each guarded by its own lock. Intended for experiments, not
production traffic.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..inference import (
    InvalidRequestError,
    ScriptValidationError,
    TransliterationRequest,
    transliterate_text,
)
from ..languages import Language, UnknownLanguageError
from ..metrics import AnnotationRecord, MetricError, annotation_from_dict, phonetic_accuracy
from ..training import Checkpoint, load_checkpoint
from .schemas import (
    AnnotationsAccepted,
    HealthResponse,
    ModelSummary,
    PhoneticSummaryResponse,
    TransliterateRequest,
    TransliterateResponse,
)


@dataclass
class ServeConfig:
    checkpoint_path: str | Path
    host: str = "127.0.0.1"
    port: int = 8000
    rate_limit_per_minute: int = 60
    max_body_bytes: int = 64 * 1024
    annotation_store: str | Path = "annotations.jsonl"
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self):
        if self.rate_limit_per_minute < 1:
            raise ValueError(f"rate limit must be >= 1 per minute, got {self.rate_limit_per_minute}")


class TokenBucket:
    """Per-client request budget: capacity = rate, refilled at rate/minute."""

    def __init__(self, per_minute: int):
        self.per_minute = per_minute
        self._buckets: dict[str, tuple[float, float]] = {}
        self._lock = threading.Lock()

    def allow(self, client: str, now: float | None = None) -> bool:
        now = time.monotonic() if now is None else now
        with self._lock:
            tokens, last = self._buckets.get(client, (float(self.per_minute), now))
            tokens = min(float(self.per_minute), tokens + (now - last) * self.per_minute / 60.0)
            if tokens < 1.0:
                self._buckets[client] = (tokens, now)
                return False
            self._buckets[client] = (tokens - 1.0, now)
            return True


class AnnotationStore:
    """Append-only JSON-lines file behind an exclusive writer lock."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, records: list[AnnotationRecord]) -> None:
        with self._lock:
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                for r in records:
                    fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")

    def read_all(self) -> list[AnnotationRecord]:
        with self._lock:
            if not self.path.exists():
                return []
            records = []
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        records.append(annotation_from_dict(json.loads(line)))
            return records


@dataclass
class _State:
    checkpoint: Checkpoint
    limiter: TokenBucket
    store: AnnotationStore
    errors: dict[str, int] = field(default_factory=dict)


def create_app(config: ServeConfig, checkpoint: Checkpoint | None = None) -> FastAPI:
    """Build the service; the checkpoint must load before any route exists."""
    ckpt = checkpoint if checkpoint is not None else load_checkpoint(config.checkpoint_path)
    state = _State(ckpt, TokenBucket(config.rate_limit_per_minute), AnnotationStore(config.annotation_store))

    app = FastAPI(title="matra", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def reject_oversized_bodies(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and length.isdigit() and int(length) > config.max_body_bytes:
            return JSONResponse(status_code=413, content={"detail": f"body over {config.max_body_bytes} bytes"})
        return await call_next(request)

    def _error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"detail": message})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        cfg = state.checkpoint.config
        return HealthResponse(
            status="ok",
            model=ModelSummary(
                num_encoder_layers=cfg.num_encoder_layers,
                num_decoder_layers=cfg.num_decoder_layers,
                embed_size=cfg.embed_size,
                heads=cfg.heads,
                hidden_dim=cfg.hidden_dim,
                max_seq_len=cfg.max_seq_len,
                vocab_size=cfg.vocab_size,
                mode=state.checkpoint.meta.mode,
                steps=state.checkpoint.meta.steps,
            ),
        )

    @app.post("/transliterate", response_model=TransliterateResponse, response_model_exclude_none=True)
    def transliterate(payload: TransliterateRequest, request: Request):
        client = request.client.host if request.client else "unknown"
        if not state.limiter.allow(client):
            return _error(429, f"rate limit of {config.rate_limit_per_minute} requests/minute exceeded")
        try:
            source = Language.from_name(payload.source_lang)
            target = Language.from_name(payload.target_lang)
        except UnknownLanguageError as exc:
            return _error(400, str(exc))
        try:
            result = transliterate_text(state.checkpoint, TransliterationRequest(payload.text, source, target))
        except ScriptValidationError as exc:
            return _error(422, str(exc))
        except InvalidRequestError as exc:
            return _error(400, str(exc))
        return TransliterateResponse(
            output=result.output,
            words=list(result.words),
            intermediate=list(result.intermediates) if result.intermediates is not None else None,
            decode_lengths=list(result.decode_lengths),
            flags=list(result.flags),
        )

    @app.post("/annotations", status_code=201, response_model=AnnotationsAccepted)
    async def post_annotations(request: Request):
        raw = await request.body()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            return _error(400, "annotation body must be UTF-8")
        try:
            parsed = json.loads(text)
            dicts = parsed if isinstance(parsed, list) else [parsed]
        except json.JSONDecodeError:
            try:
                dicts = [json.loads(line) for line in text.splitlines() if line.strip()]
            except json.JSONDecodeError as exc:
                return _error(400, f"body is neither a JSON array nor JSON lines: {exc}")
        if not dicts:
            return _error(400, "no annotation records in body")
        try:
            records = [annotation_from_dict(d) for d in dicts]
        except MetricError as exc:
            return _error(422, str(exc))
        state.store.append(records)
        return AnnotationsAccepted(accepted=len(records))

    @app.get("/metrics/phonetic", response_model=PhoneticSummaryResponse)
    def phonetic_summary() -> PhoneticSummaryResponse:
        records = state.store.read_all()
        if not records:
            return PhoneticSummaryResponse(correct_sounding_count=0, total_count=0, phonetic_accuracy=None)
        summary = phonetic_accuracy(records)
        return PhoneticSummaryResponse(
            correct_sounding_count=summary.correct_sounding_count,
            total_count=summary.total_count,
            phonetic_accuracy=summary.phonetic_accuracy,
        )

    return app
