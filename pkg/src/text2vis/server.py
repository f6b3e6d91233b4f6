"""HTTP service over an immutable model snapshot.

Endpoints:
    GET  /schemas             -> [db_id]
    GET  /schemas/{db_id}     -> schema JSON
    POST /predict {question, db_id, k} -> ranked candidates with specs
    POST /compile {vql, db_id} -> {spec}

Per-request failures come back as {stage, message} with 4xx/5xx; startup
fails loudly if the checkpoint, schemas, or table CSVs are missing.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .compiler import StageError, emit_spec, evaluate_query, load_database
from .dataset import load_schemas
from .ngrams import load_lexicon
from .schema import ResolutionError
from .vql import SemanticError, VqlSyntaxError, canonicalize, parse_vql


class PredictRequest(BaseModel):
    question: str
    db_id: str
    k: int = Field(default=5, ge=1, le=10)


class CompileRequest(BaseModel):
    vql: str
    db_id: str


def _stage_error(status: int, stage: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"stage": stage, "message": message})


def build_app(model_path: str | Path, data_dir: str | Path,
              cors_origins: list[str] | None = None) -> FastAPI:
    from .neural import beam_search, load_checkpoint

    data_dir = Path(data_dir)
    params, config = load_checkpoint(model_path)  # fail loudly at startup
    lexicon = load_lexicon(Path(model_path).with_suffix(".lexicon"))
    schemas = load_schemas(data_dir / "schemas.json")
    databases = {db_id: load_database(schema, data_dir)
                 for db_id, schema in schemas.items()}

    app = FastAPI(title="Chinese Text-to-Vis")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["*"], allow_headers=["*"])

    def compile_vql(vql_text: str, db_id: str) -> dict:
        schema = schemas[db_id]
        q = canonicalize(parse_vql(vql_text), schema)
        result = evaluate_query(q, databases[db_id])
        return emit_spec(q, result)

    @app.get("/schemas")
    def list_schemas() -> list[str]:
        return sorted(schemas)

    @app.get("/schemas/{db_id}")
    def get_schema(db_id: str):
        schema = schemas.get(db_id)
        if schema is None:
            return _stage_error(404, "load", f"unknown db_id {db_id!r}")
        return schema.to_json()

    @app.post("/predict")
    def predict(req: PredictRequest):
        schema = schemas.get(req.db_id)
        if schema is None:
            return _stage_error(404, "load", f"unknown db_id {req.db_id!r}")
        if not req.question.strip():
            return _stage_error(400, "input", "question is empty")
        try:
            candidates = beam_search(req.question, schema, lexicon, params,
                                     config, width=max(req.k, 5), k=req.k)
        except Exception as exc:
            return _stage_error(500, "decode", str(exc))
        out = []
        for cand in candidates:
            spec = None
            if cand.valid:
                try:
                    spec = compile_vql(cand.vql_text, req.db_id)
                except Exception:
                    spec = None
            out.append({"vql": cand.vql_text, "score": cand.score,
                        "valid": cand.valid and spec is not None, "spec": spec})
        return {"candidates": out}

    @app.post("/compile")
    def compile_endpoint(req: CompileRequest):
        if req.db_id not in schemas:
            return _stage_error(404, "load", f"unknown db_id {req.db_id!r}")
        try:
            spec = compile_vql(req.vql, req.db_id)
        except StageError as exc:
            return _stage_error(400, exc.stage, str(exc.cause))
        except VqlSyntaxError as exc:
            return _stage_error(400, "parse", str(exc))
        except (ResolutionError, SemanticError) as exc:
            return _stage_error(400, "resolve", str(exc))
        except Exception as exc:
            return _stage_error(400, "evaluate", str(exc))
        return {"spec": spec}

    return app
