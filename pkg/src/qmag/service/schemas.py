"""Request and response models for the HTTP service.

Requests are sparse: any field left unset falls back to the preset backing
the endpoint (each sweep endpoint has a canonical figure preset), so an empty
body reproduces that preset's curve. Responses carry the same columns, rows
and metadata as the CSV export; non-finite floats are rendered as the strings
"inf", "-inf" or "nan" because JSON has no encoding for them.
"""
from __future__ import annotations

import dataclasses
import math

from pydantic import BaseModel, ConfigDict, Field

from ..linalg import ContractViolationError
from ..model import SystemParams
from ..sweeps import SweepKind, SweepResult, SweepSpec, preset_spec

__all__ = [
    "ParamsModel",
    "RangeModel",
    "SweepRequest",
    "SweepResponse",
    "TraceRequest",
    "TraceResponse",
    "DEFAULT_PRESET",
    "resolve_params",
    "resolve_spec",
    "sweep_response",
]

DEFAULT_PRESET = {
    SweepKind.QFI_CURVE: "fig1",
    SweepKind.SENSITIVITY_CURVE: "fig2",
    SweepKind.HEATMAP_TC: "fig3a",
    SweepKind.HEATMAP_TJ: "fig3b",
    SweepKind.DECOHERENCE_COMPARE: "fig5",
    SweepKind.SNR_CURVE: "fig6",
    SweepKind.VALIDATE: "validate",
}


class ParamsModel(BaseModel):
    """Sparse physical-parameter override block.

    Follows the same rules as the JSON object form of SystemParams: either
    (b_z, gamma_phi) or the single effective coefficient c may be given;
    c together with gamma_phi is rejected as ambiguous.
    """

    model_config = ConfigDict(extra="forbid")

    gamma: float | None = None
    b_z: float | None = None
    j: float | None = None
    gamma_phi: float | None = None
    omega_x: float | None = None
    omega_y: float | None = None
    omega: float | None = None
    alpha: float | None = None
    c: float | None = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump(exclude_unset=True).items()
                if v is not None}


class RangeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lo: float
    hi: float
    points: int = Field(ge=2)

    def as_tuple(self) -> tuple[float, float, int]:
        return (self.lo, self.hi, self.points)


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: str | None = None
    params: ParamsModel | None = None
    t_range: RangeModel | None = None
    axis2_range: RangeModel | None = None
    n_shots: int | None = Field(default=None, ge=1)
    seed: int | None = Field(default=None, ge=0)
    alphas: list[float] | None = None
    draws: int | None = Field(default=None, ge=0)


class SweepResponse(BaseModel):
    kind: str
    preset: str | None
    columns: list[str]
    rows: list[list]
    metadata: dict


class TraceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    params: ParamsModel | None = None
    t_range: RangeModel
    source: str = "closed_form"


class TraceResponse(BaseModel):
    columns: list[str]
    rows: list[list]


def resolve_params(base: SystemParams, overrides: dict) -> SystemParams:
    """Merge sparse overrides onto base params with the c-key rules."""
    if not overrides:
        return base
    merged = base.to_dict()
    if "c" in overrides:
        # the stored pair would shadow the requested effective coefficient
        merged.pop("gamma_phi", None)
        if "b_z" not in overrides:
            merged.pop("b_z", None)
    merged.update(overrides)
    return SystemParams.from_dict(merged)


def resolve_spec(kind: SweepKind, req: SweepRequest) -> SweepSpec:
    """Fill a SweepSpec from a sparse request, defaulting to the figure preset."""
    if req.preset is not None:
        base = preset_spec(req.preset)
        if base.kind is not kind:
            raise ContractViolationError(
                f"preset {req.preset!r} is a {base.kind.value} sweep, not {kind.value}")
    else:
        base = preset_spec(DEFAULT_PRESET[kind])
    changes: dict = {}
    params_overrides = req.params.overrides() if req.params is not None else {}
    params = resolve_params(base.params, params_overrides)
    if params != base.params:
        changes["params"] = params
    if req.t_range is not None:
        changes["t_range"] = req.t_range.as_tuple()
    if req.axis2_range is not None:
        changes["secondary_range"] = req.axis2_range.as_tuple()
    if req.n_shots is not None:
        changes["n_shots"] = req.n_shots
    if req.seed is not None:
        changes["seed"] = req.seed
    if req.alphas is not None:
        changes["alphas"] = tuple(req.alphas)
    if req.draws is not None:
        changes["draws"] = req.draws
    if changes and req.preset is None:
        # defaults were seeded from the kind's preset, but the caller never
        # asked for it by name and has diverged from it: drop the label
        changes["preset"] = None
    return dataclasses.replace(base, **changes) if changes else base


def _json_value(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
    return v


def sweep_response(result: SweepResult) -> SweepResponse:
    return SweepResponse(
        kind=result.spec.kind.value,
        preset=result.spec.preset,
        columns=list(result.columns),
        rows=[[_json_value(v) for v in row] for row in result.rows],
        metadata={k: _json_value(v) for k, v in result.metadata.items()},
    )
