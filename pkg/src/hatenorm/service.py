"""HTTP service exposing the analysis pipeline.

Wire contract (version-prefixed):
  POST /v1/analyze  {"text": "..."} ->
      {"intensity", "band", "spans": [{"start","end","text"}],
       "suggestion": {"text","intensity","reward"} | null,
       "flag", "latency_ms"}
  GET  /v1/health -> {"status": "ok", "bundle_version": "..."}
Errors are 400 with {"error": "..."} for empty or oversized input and 503
while no bundle is loaded. Requests read an immutable bundle snapshot;
reloads swap the snapshot atomically.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .corpus import tokenize
from .pipeline import NormalizationOutcome, PipelineConfig, TrainedBundle, analyze


class ServiceState:
    """Holds the current bundle snapshot; assignment is atomic so readers
    never observe a partially loaded bundle."""

    def __init__(self, bundle: Optional[TrainedBundle],
                 config: PipelineConfig):
        self.bundle = bundle
        self.config = config

    def swap(self, bundle: TrainedBundle) -> None:
        self.bundle = bundle


def outcome_to_json(outcome: NormalizationOutcome, latency_ms: float) -> dict:
    suggestion = None
    if outcome.suggestion is not None:
        suggestion = {
            "text": outcome.suggestion.normalized_text,
            "intensity": outcome.suggestion.intensity,
            "reward": outcome.suggestion.reward,
        }
    return {
        "intensity": outcome.intensity,
        "band": outcome.band,
        "spans": [
            {"start": s, "end": e, "text": text} for s, e, text in outcome.spans
        ],
        "suggestion": suggestion,
        "flag": outcome.flag,
        "latency_ms": latency_ms,
    }


def create_app(state: ServiceState, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="hatenorm", version="1.0")

    @app.post("/v1/analyze")
    async def analyze_endpoint(request: Request):
        bundle = state.bundle
        if bundle is None:
            return JSONResponse({"error": "no bundle loaded"}, status_code=503)
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body must be JSON"}, status_code=400)
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str) or not tokenize(text):
            return JSONResponse({"error": "empty text"}, status_code=400)
        if len(tokenize(text)) > state.config.max_tokens:
            return JSONResponse(
                {"error": f"input exceeds {state.config.max_tokens} tokens"},
                status_code=400,
            )
        started = time.perf_counter()
        outcome = analyze(bundle, text, state.config)
        latency_ms = (time.perf_counter() - started) * 1000.0
        return outcome_to_json(outcome, latency_ms)

    @app.get("/v1/health")
    async def health():
        bundle = state.bundle
        if bundle is None:
            return JSONResponse({"error": "no bundle loaded"}, status_code=503)
        return {
            "status": "ok",
            "bundle_version": bundle.manifest.get("bundle_version", "unknown"),
        }

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app


def serve(model_dir: str, config: PipelineConfig,
          static_dir: Optional[str] = None) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    state = ServiceState(TrainedBundle.load(model_dir), config)
    app = create_app(state, static_dir=static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
