"""FastAPI application exposing validate/compose/search/eval/sweep/train/gap.

Domain errors map to HTTP 400 and structurally malformed files to 422, so
clients can distinguish "your request names bad data" from "this file is
not parseable". All outputs are byte-deterministic for fixed inputs.
"""

from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bank import EmbeddingBank, load_bank, validate, write_bank
from ..errors import BadConfig, EngineError, IoFailure, MalformedInput, UnknownId
from ..geometry import slerp
from ..instances import load_instances, load_pairs
from ..metrics import alpha_sweep, evaluate, sweep_to_tsv
from ..search import batch_top_k, to_tsv
from ..tat.gap import modality_gap
from ..tat.tower import write_tower
from ..tat.train import AnchorMode, TrainConfig, train
from . import schemas

DEFAULT_SWEEP_ALPHAS = [i / 10 for i in range(11)]


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise IoFailure(f"no such file: {path}") from None
    except IsADirectoryError:
        raise IoFailure(f"not a file: {path}") from None


def _load_bank(path: str) -> EmbeddingBank:
    try:
        return load_bank(path)
    except FileNotFoundError:
        raise IoFailure(f"no such file: {path}") from None
    except IsADirectoryError:
        raise IoFailure(f"not a file: {path}") from None


def _load_instances(path: str):
    try:
        return load_instances(path)
    except FileNotFoundError:
        raise IoFailure(f"no such file: {path}") from None


def _load_pairs(path: str):
    try:
        return load_pairs(path)
    except FileNotFoundError:
        raise IoFailure(f"no such file: {path}") from None


def _provenance_header(command: str, config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return f"# {command} config {blob}\n"


def _write_sidecar(artifact_path: str, command: str, config: dict) -> None:
    payload = json.dumps({"command": command, "config": config}, sort_keys=True, indent=2)
    Path(artifact_path + ".run.json").write_text(payload + "\n", encoding="utf-8")


def create_app() -> FastAPI:
    app = FastAPI(title="cirslerp", version=__version__)

    @app.exception_handler(MalformedInput)
    async def _malformed(request: Request, exc: MalformedInput) -> JSONResponse:
        return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(EngineError)
    async def _domain(request: Request, exc: EngineError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=schemas.ValidateResponse)
    def validate_bank(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
        bank = _load_bank(req.bank_path)
        report = validate(bank)
        return schemas.ValidateResponse(
            ok=report.ok,
            n_entries=report.n_entries,
            dim=report.dim,
            modality=bank.modality.name.lower(),
            max_norm_deviation=report.max_norm_deviation,
            nan_count=report.nan_count,
            errors=report.errors,
            warnings=report.warnings,
            config=req.model_dump(),
        )

    @app.post("/compose", response_model=schemas.ComposeResponse)
    def compose(req: schemas.ComposeRequest) -> schemas.ComposeResponse:
        image_bank = _load_bank(req.image_bank)
        text_bank = _load_bank(req.text_bank)
        pairs = _load_pairs(req.pairs_path)
        vectors = []
        for lineno, query_id, image_id, text_id in pairs:
            if query_id is None:
                raise MalformedInput(
                    f"pairs line {lineno}: compose needs 3 columns (query_id, image_id, text_id)"
                )
            try:
                v = image_bank.get(image_id)
                w = text_bank.get(text_id)
            except UnknownId as e:
                raise UnknownId(f"pairs line {lineno}: {e}") from None
            try:
                composed = slerp(v, w, req.alpha)
            except EngineError as e:
                raise type(e)(f"pairs line {lineno} (query {query_id!r}): {e}") from None
            vectors.append((query_id, composed))
        out = EmbeddingBank.from_vectors(vectors, dim=image_bank.dim)
        config = req.model_dump()
        write_bank(out, req.out_bank)
        _write_sidecar(req.out_bank, "compose", config)
        return schemas.ComposeResponse(out_bank=req.out_bank, n_queries=len(out), config=config)

    @app.post("/search", response_model=schemas.SearchResponse)
    def search(req: schemas.SearchRequest) -> schemas.SearchResponse:
        query_bank = _load_bank(req.query_bank)
        gallery = _load_bank(req.gallery_bank)
        per_query_exclude: dict[str, list[str]] = {}
        if req.exclude_path is not None:
            for lineno, _, query_id, gallery_id in _load_pairs(req.exclude_path):
                per_query_exclude.setdefault(query_id, []).append(gallery_id)
        queries = [(qid, query_bank.get(qid)) for qid in query_bank.ids]
        ranked = batch_top_k(queries, gallery, req.k, per_query_exclude=per_query_exclude, shards=req.shards)
        config = req.model_dump()
        tsv = _provenance_header("search", config) + to_tsv(ranked)
        if req.out_path is not None:
            Path(req.out_path).write_text(tsv, encoding="utf-8")
        return schemas.SearchResponse(tsv=tsv, n_queries=len(ranked), out_path=req.out_path, config=config)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def eval_benchmark(req: schemas.EvalRequest) -> schemas.EvalResponse:
        instances = _load_instances(req.instances_path)
        image_bank = _load_bank(req.image_bank)
        text_bank = _load_bank(req.text_bank)
        gallery = _load_bank(req.gallery_bank)
        try:
            report = evaluate(
                instances, image_bank, text_bank, gallery,
                protocol=req.protocol, alpha=req.alpha, ks=req.ks,
                exclude_reference=req.exclude_reference, shards=req.shards,
            )
        except ValueError as e:
            raise BadConfig(str(e)) from None
        config = req.model_dump()
        config["alpha"] = report.alpha
        config["ks"] = sorted(report.per_k_scores)
        payload = {"config": config, "report": report.to_dict()}
        if req.out_path is not None:
            Path(req.out_path).write_text(
                json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
        return schemas.EvalResponse(
            report=report.to_dict(), table=report.render_table(), out_path=req.out_path, config=config,
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
        instances = _load_instances(req.instances_path)
        image_bank = _load_bank(req.image_bank)
        text_bank = _load_bank(req.text_bank)
        gallery = _load_bank(req.gallery_bank)
        alphas = req.alphas if req.alphas is not None else DEFAULT_SWEEP_ALPHAS
        try:
            reports = alpha_sweep(
                instances, image_bank, text_bank, gallery, alphas,
                protocol=req.protocol, ks=req.ks,
                exclude_reference=req.exclude_reference, shards=req.shards,
            )
        except ValueError as e:
            raise BadConfig(str(e)) from None
        config = req.model_dump()
        config["alphas"] = list(alphas)
        config["ks"] = sorted(reports[0].per_k_scores)
        tsv = _provenance_header("sweep-alpha", config) + sweep_to_tsv(reports)
        if req.out_path is not None:
            Path(req.out_path).write_text(tsv, encoding="utf-8")
        return schemas.SweepResponse(
            tsv=tsv, reports=[r.to_dict() for r in reports], out_path=req.out_path, config=config,
        )

    @app.post("/train-tat", response_model=schemas.TrainResponse)
    def train_tat(req: schemas.TrainRequest) -> schemas.TrainResponse:
        if (req.config_path is None) == (req.config is None):
            raise BadConfig("give exactly one of config_path or config")
        if req.config_path is not None:
            cfg = TrainConfig.from_text(_read_text(req.config_path))
        else:
            cfg = TrainConfig.from_mapping(req.config)
        if req.seed is not None:
            cfg = replace(cfg, seed=req.seed)
        result = train(cfg)
        config = cfg.to_dict()

        primary = result.image_tower if cfg.anchoring in (AnchorMode.TEXT, AnchorMode.NONE) else result.text_tower
        write_tower(primary, req.out_blob)
        _write_sidecar(req.out_blob, "train-tat", config)
        text_blob: str | None = None
        if cfg.anchoring is AnchorMode.NONE:
            out = Path(req.out_blob)
            text_blob = str(out.with_name(out.stem + "-text" + out.suffix))
            write_tower(result.text_tower, text_blob)
            _write_sidecar(text_blob, "train-tat", config)

        lines = [json.dumps({"config": config}, sort_keys=True)]
        lines += [json.dumps(row, sort_keys=True) for row in result.history]
        Path(req.out_history).write_text("\n".join(lines) + "\n", encoding="utf-8")

        return schemas.TrainResponse(
            out_blob=req.out_blob,
            out_blob_text_tower=text_blob,
            out_history=req.out_history,
            pre_gap=result.pre_gap.to_dict(),
            post_gap=result.post_gap.to_dict(),
            pre_recall1=result.pre_recall1,
            post_recall1=result.post_recall1,
            initial_loss=result.history[0]["loss"],
            final_loss=result.history[-1]["loss"],
            config=config,
        )

    @app.post("/gap", response_model=schemas.GapResponse)
    def gap(req: schemas.GapRequest) -> schemas.GapResponse:
        image_bank = _load_bank(req.image_bank)
        text_bank = _load_bank(req.text_bank)
        pairs = None
        if req.pairs_path is not None:
            pairs = []
            for lineno, _, image_id, text_id in _load_pairs(req.pairs_path):
                if image_id not in image_bank:
                    raise UnknownId(f"pairs line {lineno}: image id {image_id!r} not found")
                if text_id not in text_bank:
                    raise UnknownId(f"pairs line {lineno}: text id {text_id!r} not found")
                pairs.append((image_id, text_id))
        stats = modality_gap(image_bank, text_bank, pairs=pairs, seed=req.seed)
        return schemas.GapResponse(gap=stats.to_dict(), config=req.model_dump())

    return app
