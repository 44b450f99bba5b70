"""Request and response models for the engine service.

Requests carry filesystem paths, not payloads: the service and its clients
share a filesystem (the CLI runs the app in process by default). Every
response echoes the fully resolved configuration for provenance.
"""

from __future__ import annotations

from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_SEED = 42

Alpha = Annotated[float, Field(ge=0.0, le=1.0)]
PositiveK = Annotated[int, Field(ge=1)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(_Strict):
    status: str
    version: str


class ValidateRequest(_Strict):
    bank_path: str


class ValidateResponse(_Strict):
    ok: bool
    n_entries: int
    dim: int
    modality: str
    max_norm_deviation: float
    nan_count: int
    errors: list[str]
    warnings: list[str]
    config: dict


class ComposeRequest(_Strict):
    image_bank: str
    text_bank: str
    pairs_path: str
    out_bank: str
    alpha: Alpha = 0.8


class ComposeResponse(_Strict):
    out_bank: str
    n_queries: int
    config: dict


class SearchRequest(_Strict):
    query_bank: str
    gallery_bank: str
    k: int = Field(default=10, ge=1)
    exclude_path: str | None = None
    shards: int = Field(default=1, ge=1)
    out_path: str | None = None


class SearchResponse(_Strict):
    tsv: str
    n_queries: int
    out_path: str | None
    config: dict


class EvalRequest(_Strict):
    protocol: str = "generic"
    instances_path: str
    image_bank: str
    text_bank: str
    gallery_bank: str
    alpha: Alpha | None = None
    ks: list[PositiveK] | None = None
    exclude_reference: bool = False
    shards: int = Field(default=1, ge=1)
    out_path: str | None = None


class EvalResponse(_Strict):
    report: dict
    table: str
    out_path: str | None
    config: dict


class SweepRequest(_Strict):
    protocol: str = "generic"
    instances_path: str
    image_bank: str
    text_bank: str
    gallery_bank: str
    alphas: list[Alpha] | None = None
    ks: list[PositiveK] | None = None
    exclude_reference: bool = False
    shards: int = Field(default=1, ge=1)
    out_path: str | None = None


class SweepResponse(_Strict):
    tsv: str
    reports: list[dict]
    out_path: str | None
    config: dict


class TrainRequest(_Strict):
    config_path: str | None = None
    config: dict | None = None
    out_blob: str
    out_history: str
    seed: int | None = None


class TrainResponse(_Strict):
    out_blob: str
    out_blob_text_tower: str | None
    out_history: str
    pre_gap: dict
    post_gap: dict
    pre_recall1: float
    post_recall1: float
    initial_loss: float
    final_loss: float
    config: dict


class GapRequest(_Strict):
    image_bank: str
    text_bank: str
    pairs_path: str | None = None
    seed: int = DEFAULT_SEED


class GapResponse(_Strict):
    gap: dict
    config: dict


class ErrorResponse(_Strict):
    error: str
    detail: str
