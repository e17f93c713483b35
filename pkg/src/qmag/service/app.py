"""HTTP service exposing the sweep operations.

Every sweep endpoint POSTs a sparse SweepRequest and returns either JSON
(default) or the exact CSV the command-line client writes
(``?format=csv``). The handler functions are plain and importable: the CLI
calls them in-process by default so both front ends run identical code.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import PlainTextResponse

from .. import __version__
from ..linalg import ContractViolationError, ConvergenceError
from ..protocol import Source, probability_trace, probability_trace_csv_text, TRACE_COLUMNS
from ..sweeps import PRESETS, SweepKind, SweepResult, run_sweep, sweep_csv_text
from .schemas import (
    DEFAULT_PRESET,
    SweepRequest,
    SweepResponse,
    TraceRequest,
    TraceResponse,
    resolve_params,
    resolve_spec,
    sweep_response,
    _json_value,
)
from ..model import SystemParams
import numpy as np

__all__ = ["create_app", "handle_sweep", "handle_trace", "SWEEP_KINDS"]

SWEEP_KINDS = (
    SweepKind.QFI_CURVE,
    SweepKind.SENSITIVITY_CURVE,
    SweepKind.HEATMAP_TC,
    SweepKind.HEATMAP_TJ,
    SweepKind.DECOHERENCE_COMPARE,
    SweepKind.SNR_CURVE,
    SweepKind.VALIDATE,
)


def handle_sweep(kind: SweepKind, request: SweepRequest) -> SweepResult:
    return run_sweep(resolve_spec(kind, request))


def handle_trace(request: TraceRequest):
    params = resolve_params(
        SystemParams(),
        request.params.overrides() if request.params is not None else {})
    lo, hi, points = request.t_range.as_tuple()
    times = np.linspace(lo, hi, points)
    source = Source(request.source)
    return params, times, source


def create_app() -> FastAPI:
    app = FastAPI(title="qmag", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/presets")
    def presets() -> dict:
        return {
            "presets": {name: spec.kind.value for name, spec in PRESETS.items()},
            "defaults": {kind.value: name for kind, name in DEFAULT_PRESET.items()},
        }

    def _register(kind: SweepKind) -> None:
        @app.post(f"/v1/{kind.value}", response_model=None)
        def endpoint(request: SweepRequest,
                     format: str = Query("json", pattern="^(json|csv)$")):
            try:
                result = handle_sweep(kind, request)
            except ContractViolationError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            except ConvergenceError as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from exc
            if format == "csv":
                return PlainTextResponse(sweep_csv_text(result),
                                         media_type="text/csv")
            return sweep_response(result)

        endpoint.__name__ = kind.value.replace("-", "_")

    for kind in SWEEP_KINDS:
        _register(kind)

    @app.post("/v1/probability-trace", response_model=None)
    def trace(request: TraceRequest,
              format: str = Query("json", pattern="^(json|csv)$")):
        try:
            params, times, source = handle_trace(request)
            if format == "csv":
                return PlainTextResponse(
                    probability_trace_csv_text(params, times, source),
                    media_type="text/csv")
            rows = probability_trace(params, times, source)
        except (ContractViolationError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ConvergenceError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return TraceResponse(columns=list(TRACE_COLUMNS),
                             rows=[[_json_value(v) for v in row] for row in rows])

    return app


app = create_app()
