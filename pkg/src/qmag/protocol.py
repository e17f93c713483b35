"""Four-step sensing protocol: prepare, evolve, un-prepare, measure.

The sequence is a Hadamard sandwich: (H2 (x) H2) U(t) (H2 (x) H2) |00>, so
phases accumulated during the evolution land in computational-basis
populations. Probabilities are computed three ways that the test suite holds
against each other:

* the matrix pipeline through the first-order propagator (NUMERIC_DYSON),
* closed-form expressions in the shorthand quantities (CLOSED_FORM),
* the matrix pipeline through the step-doubled oracle (NUMERIC_EXACT).

A "printed variant" of the closed forms is kept alongside for diagnostic
reporting only; it uses a sign-flipped denominator in three of the four
outcomes and swaps two numerators, which breaks normalization and the qubit
exchange symmetry, and the validation suite demonstrates exactly that.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .linalg import ContractViolationError, HADAMARD_2, tensor_product
from .model import SystemParams, derived_quantities, margin_profile
from .evolution import dyson1_propagator, exact_propagator

__all__ = [
    "Source",
    "PropagatorMethod",
    "ProbabilityQuad",
    "MeasurementRecord",
    "BASIS_LABELS",
    "FLOAT_FMT",
    "prepare_initial",
    "readout_state",
    "dyson_readout_amplitudes",
    "probabilities",
    "closed_form_probabilities",
    "closed_form_table",
    "printed_variant_closed_form",
    "simulate_counts",
    "probability_trace",
    "probability_trace_csv_text",
    "write_probability_trace",
    "TRACE_COLUMNS",
]

BASIS_LABELS = ("00", "01", "10", "11")
FLOAT_FMT = "%.17g"

HADAMARD_PAIR = tensor_product(HADAMARD_2, HADAMARD_2)


class Source(enum.Enum):
    """Where a probability quad came from."""

    NUMERIC_DYSON = "numeric_dyson"
    CLOSED_FORM = "closed_form"
    NUMERIC_EXACT = "numeric_exact"


class PropagatorMethod(enum.Enum):
    DYSON = "dyson"
    EXACT = "exact"


@dataclass(frozen=True)
class ProbabilityQuad:
    """The four readout probabilities; always sums to one within 1e-12."""

    p00: float
    p01: float
    p10: float
    p11: float
    source: Source

    def __post_init__(self) -> None:
        vals = (self.p00, self.p01, self.p10, self.p11)
        for label, v in zip(BASIS_LABELS, vals):
            if not math.isfinite(v) or v < -1e-12 or v > 1.0 + 1e-12:
                raise ContractViolationError(f"p{label} = {v!r} outside [0, 1]")
        if abs(sum(vals) - 1.0) > 1e-12:
            raise ContractViolationError(f"probabilities sum to {sum(vals)!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p00, self.p01, self.p10, self.p11])

    @property
    def total(self) -> float:
        return self.p00 + self.p01 + self.p10 + self.p11


@dataclass(frozen=True)
class MeasurementRecord:
    """Counts from repeated single-shot readouts."""

    counts: tuple[int, int, int, int]
    shots: int
    seed: int

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if any(c < 0 for c in counts):
            raise ContractViolationError("counts must be non-negative")
        if self.shots < 1:
            raise ContractViolationError("shots must be positive")
        if sum(counts) != self.shots:
            raise ContractViolationError("counts must sum to shots")

    def frequencies(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.shots


def prepare_initial() -> np.ndarray:
    """(H2 (x) H2)|00> — the equal superposition over all four basis states."""
    zero = np.zeros(4, dtype=complex)
    zero[0] = 1.0
    return HADAMARD_PAIR @ zero


def readout_state(p: SystemParams, t: float,
                  method: PropagatorMethod = PropagatorMethod.DYSON) -> np.ndarray:
    """(H2 (x) H2) U(t) applied to the prepared state.

    With the first-order propagator the result is unnormalized (its squared
    norm is the M factor plus drive terms); probabilities() divides that out.
    """
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    if method is PropagatorMethod.DYSON:
        u = dyson1_propagator(p, t)
    elif method is PropagatorMethod.EXACT:
        u = exact_propagator(p, t)
    else:
        raise ContractViolationError(f"unknown propagator method {method!r}")
    return HADAMARD_PAIR @ (u @ prepare_initial())


def dyson_readout_amplitudes(p: SystemParams, t: float) -> np.ndarray:
    """Closed-form amplitudes of the first-order readout state (unnormalized).

    a00 = 1 - i (j t + 2 omega_x delta_x / omega)
    a01 = a10 = i c t / 2 + omega_y delta_alpha / omega
    a11 = -i j t

    These are the hand-derived counterparts of readout_state(..., DYSON); the
    two agree to 1e-12 and the tests enforce it.
    """
    q = derived_quantities(p, t)
    a00 = 1.0 - 1j * (p.j * t + 2.0 * p.omega_x * q.delta_x / p.omega)
    a01 = 1j * q.c * t / 2.0 + p.omega_y * q.delta_alpha / p.omega
    a11 = -1j * p.j * t
    return np.array([a00, a01, a01, a11])


def probabilities(p: SystemParams, t: float,
                  method: PropagatorMethod = PropagatorMethod.DYSON) -> ProbabilityQuad:
    """Squared readout amplitudes, renormalized by the state's squared norm.

    The renormalization is mandatory for the first-order route (the propagator
    is not unitary) and harmless for the exact one.
    """
    amps = readout_state(p, t, method)
    weights = np.abs(amps) ** 2
    total = float(np.sum(weights))
    probs = weights / total
    source = Source.NUMERIC_DYSON if method is PropagatorMethod.DYSON else Source.NUMERIC_EXACT
    return ProbabilityQuad(*(float(v) for v in probs), source=source)


def _closed_form_pieces(p: SystemParams, t, c=None):
    """Vectorized closed-form ingredients over broadcastable t (and optional c)."""
    t = np.asarray(t, dtype=float)
    c = p.c if c is None else np.asarray(c, dtype=float)
    delta = p.omega * t
    dx = 1.0 - np.cos(delta)
    da = np.sin(p.alpha) - np.sin(p.alpha + delta)
    m = 1.0 + 2.0 * p.j**2 * t**2 + 0.5 * t**2 * c**2
    return delta, dx, da, m, c


def closed_form_table(p: SystemParams, t, c=None) -> np.ndarray:
    """Closed-form probabilities for an array of times; shape (..., 4).

    ``c`` optionally overrides the effective z coefficient (broadcast against
    t), which is how field sweeps and likelihood scans reuse the kernel.
    """
    delta, dx, da, m, c = _closed_form_pieces(p, t, c)
    w2 = p.omega**2
    denom = w2 * m + 4.0 * p.omega_x * dx * (p.omega_x * dx + p.j * delta) \
        + 2.0 * p.omega_y**2 * da**2
    p00 = (w2 + (p.j * delta + 2.0 * p.omega_x * dx) ** 2) / denom
    p01 = (delta**2 * c**2 / 4.0 + p.omega_y**2 * da**2) / denom
    p11 = p.j**2 * delta**2 / denom
    return np.stack(np.broadcast_arrays(p00, p01, p01, p11), axis=-1)


def closed_form_probabilities(p: SystemParams, t: float) -> ProbabilityQuad:
    """The four readout probabilities in closed form.

    All four outcomes share the denominator
    D = omega^2 M + 4 omega_x delta_x (omega_x delta_x + j Delta)
        + 2 omega_y^2 delta_alpha^2,
    which equals omega^2 times the squared norm of the first-order state, so
    the quad is exactly normalized and matches probabilities(..., DYSON).
    """
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    vals = closed_form_table(p, float(t))
    return ProbabilityQuad(*(float(v) for v in vals), source=Source.CLOSED_FORM)


def printed_variant_closed_form(p: SystemParams, t: float) -> np.ndarray:
    """Diagnostic only: the sign-flipped/swapped variant of the closed forms.

    Relative to closed_form_probabilities, the 01/10/11 outcomes use the
    denominator with -j Delta instead of +j Delta, and the 10 outcome carries
    the j^2 Delta^2 numerator while 11 duplicates 01. The result does not sum
    to one and is not exchange-symmetric whenever j Delta delta_x is nonzero;
    the validation suite reports the size of that violation. Returns a plain
    array because the values are not a probability distribution.
    """
    delta, dx, da, m, c = _closed_form_pieces(p, float(t))
    w2 = p.omega**2
    denom_plus = w2 * m + 4.0 * p.omega_x * dx * (p.omega_x * dx + p.j * delta) \
        + 2.0 * p.omega_y**2 * da**2
    denom_minus = w2 * m + 4.0 * p.omega_x * dx * (p.omega_x * dx - p.j * delta) \
        + 2.0 * p.omega_y**2 * da**2
    p00 = (w2 + (p.j * delta + 2.0 * p.omega_x * dx) ** 2) / denom_plus
    p01 = (delta**2 * c**2 / 4.0 + p.omega_y**2 * da**2) / denom_minus
    p10 = p.j**2 * delta**2 / denom_minus
    p11 = (delta**2 * c**2 / 4.0 + p.omega_y**2 * da**2) / denom_minus
    return np.array([p00, p01, p10, p11])


_SAMPLE_BLOCK = 1 << 20


def simulate_counts(p: SystemParams, t: float, shots: int, seed: int) -> MeasurementRecord:
    """Multinomial draw over the closed-form probabilities.

    Sampling is fully pinned down so records reproduce across platforms and
    library versions: uniforms come from the Philox counter-based generator
    keyed by ``seed`` (each double is (next_uint64 >> 11) * 2**-53, in draw
    order), and each shot's outcome is the right-bisection index of its
    uniform in the cumulative distribution [p00, p00+p01, ...].
    """
    if shots < 1:
        raise ContractViolationError("shots must be positive")
    if seed < 0 or seed >= 1 << 64:
        raise ContractViolationError("seed must fit in 64 unsigned bits")
    quad = closed_form_probabilities(p, t)
    cdf = np.cumsum(quad.as_array())
    gen = np.random.Generator(np.random.Philox(key=seed))
    counts = np.zeros(4, dtype=np.int64)
    remaining = shots
    while remaining > 0:
        block = min(remaining, _SAMPLE_BLOCK)
        uniforms = gen.random(block)
        idx = np.searchsorted(cdf, uniforms, side="right")
        counts += np.bincount(np.minimum(idx, 3), minlength=4)
        remaining -= block
    return MeasurementRecord(counts=tuple(int(c) for c in counts), shots=shots, seed=seed)


def probability_trace(p: SystemParams, times,
                      source: Source = Source.CLOSED_FORM) -> list[tuple]:
    """Rows (t, p00, p01, p10, p11, source, margin) over a time grid.

    The margin column is the trust gate value H_max(t) t for each row, shared
    across the trace from one running-maximum profile.
    """
    times = np.asarray(times, dtype=float)
    margins = margin_profile(p, times)
    rows = []
    for t, margin in zip(times, margins):
        if source is Source.CLOSED_FORM:
            vals = closed_form_probabilities(p, float(t))
        elif source is Source.NUMERIC_DYSON:
            vals = probabilities(p, float(t), PropagatorMethod.DYSON)
        elif source is Source.NUMERIC_EXACT:
            vals = probabilities(p, float(t), PropagatorMethod.EXACT)
        else:
            raise ContractViolationError(f"unknown source {source!r}")
        rows.append((float(t), vals.p00, vals.p01, vals.p10, vals.p11,
                     source.value, float(margin)))
    return rows


TRACE_COLUMNS = ("t", "p00", "p01", "p10", "p11", "source", "margin")


def probability_trace_csv_text(p: SystemParams, times,
                               source: Source = Source.CLOSED_FORM) -> str:
    """CSV rendering of probability_trace with 17-significant-digit floats."""
    rows = probability_trace(p, times, source)
    lines = [",".join(TRACE_COLUMNS)]
    for row in rows:
        cells = [FLOAT_FMT % v for v in row[:5]] + [row[5], FLOAT_FMT % row[6]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_probability_trace(path, p: SystemParams, times,
                            source: Source = Source.CLOSED_FORM) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(probability_trace_csv_text(p, times, source))
