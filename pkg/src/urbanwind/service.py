"""HTTP inference service consumed by the design UI.

Endpoints: POST /infer, GET /health, GET /model/info.  Error contract:
400 for malformed requests (with field-level diagnostics), 422 for
out-of-range parameters, 503 until the checkpoint is loaded.  Grids cross
the wire as base64-wrapped field-file payloads inside the JSON envelope, so
the browser and the CLI read one binary layout.
"""

from __future__ import annotations

import base64
import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import dataio, inference, metrics
from .checkpoint import Surrogate


class InferBody(BaseModel):
    scene: dict | None = None
    encoded_b64: str | None = None
    direction: str = "W"
    slice_height: float = 1.5
    inlet_speed: float = 5.0
    mc_samples: int = Field(default=30)
    dropout_p: float = Field(default=0.5)
    seed: int | None = None


def create_app(checkpoint_path: str | None = None,
               comfort: metrics.ComfortSpec = metrics.ComfortSpec()) -> FastAPI:
    """Build the service; the checkpoint loads on startup when a path is given.

    ``app.state.load_checkpoint(path)`` loads explicitly (the /health
    lifecycle is observable by probing before and after).
    """
    app = FastAPI(title="urbanwind inference service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.surrogate = None
    app.state.comfort = comfort
    app.state.lock = threading.Lock()

    def load_checkpoint(path: str) -> None:
        surrogate = Surrogate.from_checkpoint(path)
        app.state.surrogate = surrogate

    app.state.load_checkpoint = load_checkpoint

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "malformed request", "fields": exc.errors()},
        )

    @app.on_event("startup")
    def startup() -> None:
        if checkpoint_path is not None and app.state.surrogate is None:
            load_checkpoint(checkpoint_path)

    @app.get("/health")
    def health():
        if app.state.surrogate is None:
            raise HTTPException(status_code=503, detail="checkpoint not loaded")
        return {"status": "ready", "checkpoint_id": app.state.surrogate.meta.get("checkpoint_id")}

    @app.get("/model/info")
    def info():
        if app.state.surrogate is None:
            raise HTTPException(status_code=503, detail="checkpoint not loaded")
        out = inference.model_info(app.state.surrogate)
        out["comfort_bands"] = [list(b) for b in app.state.comfort.bands]
        return out

    @app.post("/infer")
    def infer(body: InferBody):
        surrogate = app.state.surrogate
        if surrogate is None:
            raise HTTPException(status_code=503, detail="checkpoint not loaded")
        encoded = None
        if body.encoded_b64 is not None:
            try:
                ff = dataio.field_from_bytes(base64.b64decode(body.encoded_b64))
            except (dataio.FieldFormatError, ValueError) as exc:
                return JSONResponse(
                    status_code=400,
                    content={"error": "malformed request",
                             "fields": [{"loc": ["encoded_b64"], "msg": str(exc)}]},
                )
            encoded = ff.channels
        req = inference.InferenceRequest(
            scene=body.scene,
            encoded=encoded,
            direction=body.direction,
            slice_height=body.slice_height,
            inlet_speed=body.inlet_speed,
            mc_samples=body.mc_samples,
            dropout_p=body.dropout_p,
            seed=body.seed,
        )
        try:
            # one inference at a time: the surrogate itself is immutable but
            # this keeps per-request latency predictable on small hosts
            with app.state.lock:
                res = inference.run_inference(surrogate, req, app.state.comfort)
        except inference.InferenceError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {
            "seed": res.seed,
            "timing_ms": res.timing_ms,
            "grid": int(res.mean.shape[0]),
            "model": res.model_info,
            "comfort_bands": [list(b) for b in app.state.comfort.bands],
            "fields": inference.fields_b64(res),
        }

    return app


def serve(checkpoint_path: str, host: str = "127.0.0.1", port: int = 8151,
          comfort: metrics.ComfortSpec = metrics.ComfortSpec(),
          ui_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(checkpoint_path, comfort)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="info")
