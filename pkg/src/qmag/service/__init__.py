"""HTTP layer: pydantic schemas and the FastAPI application factory."""
from .app import create_app, handle_sweep, handle_trace
from .schemas import (
    ParamsModel,
    RangeModel,
    SweepRequest,
    SweepResponse,
    TraceRequest,
    TraceResponse,
    resolve_spec,
    sweep_response,
)

__all__ = [
    "create_app",
    "handle_sweep",
    "handle_trace",
    "ParamsModel",
    "RangeModel",
    "SweepRequest",
    "SweepResponse",
    "TraceRequest",
    "TraceResponse",
    "resolve_spec",
    "sweep_response",
]
