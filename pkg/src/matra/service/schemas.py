"""Request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class ModelSummary(BaseModel):
    num_encoder_layers: int
    num_decoder_layers: int
    embed_size: int
    heads: int
    hidden_dim: int
    max_seq_len: int
    vocab_size: int
    mode: str
    steps: int


class HealthResponse(BaseModel):
    status: str
    model: ModelSummary


class TransliterateRequest(BaseModel):
    text: str
    # Kept as plain strings: unknown names must map to 400, not a schema 422.
    source_lang: str
    target_lang: str


class TransliterateResponse(BaseModel):
    output: str
    words: list[str]
    intermediate: list[str] | None = None
    decode_lengths: list[int]
    flags: list[str] = Field(default_factory=list)


class AnnotationsAccepted(BaseModel):
    accepted: int


class PhoneticSummaryResponse(BaseModel):
    correct_sounding_count: int
    total_count: int
    phonetic_accuracy: float | None = None
