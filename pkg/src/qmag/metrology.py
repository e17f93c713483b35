"""Fisher-information sensitivity analysis and field estimation.

The central quantity is the pure-state Fisher information of the normalized
first-order state with respect to the static field b_z (dephasing held
fixed, so dC/db_z = gamma). It is available in closed form and as a
gauge-safe finite-difference evaluation of the defining expression
F = 4(<dpsi|dpsi> - |<psi|dpsi>|^2); the two agree to relative 1e-6 and the
suite enforces that. On top of it sit the shot-noise sensitivity bound, the
contrast-based minimum detectable field, their ratio xi >= 1, and a
maximum-likelihood estimator for b_z from measured counts.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import ContractViolationError
from .model import SystemParams
from .protocol import MeasurementRecord, PropagatorMethod, closed_form_table, readout_state

__all__ = [
    "DegenerateLimitError",
    "UnidentifiableParameterError",
    "QfiPoint",
    "SnrPoint",
    "qfi_closed_form",
    "qfi_closed_form_batch",
    "qfi_numeric",
    "qfi_long_time_limit",
    "qfi_long_time_limit_printed_variant",
    "optimal_time",
    "sensitivity_bound",
    "signal_contrast",
    "signal_to_noise",
    "snr_point",
    "estimate_field",
]

_FLAT_SIGNAL_TOL = 1e-14


class DegenerateLimitError(ValueError):
    """The long-time limit is undefined for the requested parameters."""


class UnidentifiableParameterError(ValueError):
    """The likelihood carries no information about the parameter."""


@dataclass(frozen=True)
class QfiPoint:
    """Fisher information at one time, with the matching sensitivity 1/sqrt(F)."""

    t: float
    f_q: float
    sensitivity: float


@dataclass(frozen=True)
class SnrPoint:
    """Contrast-readout performance at one time.

    delta_b_min is the field shift at unit signal-to-noise given shot-noise
    variance of the contrast; delta_b_qfi is the Fisher bound; xi is their
    ratio (at least 1 wherever both are finite). snr carries the raw
    signal-to-noise value for the probe perturbation passed in, when one was.
    """

    t: float
    signal: float
    d_signal_d_bz: float
    delta_b_min: float
    delta_b_qfi: float
    xi: float
    snr: float | None = None
    flat_signal: bool = False


def qfi_closed_form_batch(p: SystemParams, times) -> np.ndarray:
    """Closed-form Fisher information over an array of times."""
    t = np.asarray(times, dtype=float)
    delta = p.omega * t
    dx = 1.0 - np.cos(delta)
    da = np.sin(p.alpha) - np.sin(p.alpha + delta)
    c = p.c
    m = 1.0 + 2.0 * p.j**2 * t**2 + 0.5 * t**2 * c**2
    w2 = p.omega**2
    num = 2.0 * p.gamma**2 * delta**2 * (
        w2 + 2.0 * p.j**2 * delta**2 + 4.0 * p.j * delta * dx * p.omega_x
        + 4.0 * dx**2 * p.omega_x**2
    )
    den = (m * w2 + 4.0 * p.j * delta * dx * p.omega_x + 4.0 * dx**2 * p.omega_x**2
           + 2.0 * da**2 * p.omega_y**2) ** 2
    return num / den


def qfi_closed_form(p: SystemParams, t: float) -> float:
    """Closed-form Fisher information of the normalized first-order state."""
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    return float(qfi_closed_form_batch(p, float(t)))


def _aligned_state(p: SystemParams, t: float, b_z: float) -> np.ndarray:
    # normalized first-order state with its largest amplitude made real
    # positive, so finite differences carry no spurious global-phase drift
    psi = readout_state(p.replace(b_z=b_z), t, PropagatorMethod.DYSON)
    psi = psi / np.linalg.norm(psi)
    k = int(np.argmax(np.abs(psi)))
    phase = psi[k] / abs(psi[k])
    return psi * phase.conjugate()


def qfi_numeric(p: SystemParams, t: float, h: float | None = None) -> float:
    """Finite-difference evaluation of F = 4(<dpsi|dpsi> - |<psi|dpsi>|^2).

    States at b_z +- h are normalized and phase-aligned before the central
    difference; dephasing is held fixed so the derivative is taken at
    dC/db_z = gamma. Emits a UserWarning when the state difference sits below
    the 1e-12 rounding floor (result then dominated by noise).
    """
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    if h is None:
        h = 1e-5 * max(1.0, abs(p.b_z))
    if h <= 0.0:
        raise ContractViolationError("h must be positive")
    plus = _aligned_state(p, t, p.b_z + h)
    minus = _aligned_state(p, t, p.b_z - h)
    center = _aligned_state(p, t, p.b_z)
    spread = float(np.max(np.abs(plus - minus)))
    if 0.0 < spread < 1e-12:
        warnings.warn("field step too small: state difference below rounding floor",
                      UserWarning, stacklevel=2)
    dpsi = (plus - minus) / (2.0 * h)
    value = 4.0 * (float(np.vdot(dpsi, dpsi).real) - abs(np.vdot(center, dpsi)) ** 2)
    return max(value, 0.0)


def qfi_long_time_limit(p: SystemParams) -> float:
    """Limit of the Fisher information as t grows: 16 gamma^2 j^2 / (c^2 + 4 j^2)^2.

    Obtained from the leading t^4 balance of the closed form (numerator to
    4 gamma^2 j^2 Delta^4 / omega^2 ... denominator to (omega^2 t^2 (2 j^2 +
    c^2/2))^2) and verified against direct evaluation at t = 1e6 / omega.
    """
    c = p.c
    if p.j == 0.0 and c == 0.0:
        raise DegenerateLimitError("limit undefined when both j and c vanish")
    return 16.0 * p.gamma**2 * p.j**2 / (c**2 + 4.0 * p.j**2) ** 2


def qfi_long_time_limit_printed_variant(p: SystemParams) -> float:
    """Diagnostic only: the variant with j^2 instead of 4 j^2 in the denominator.

    Inconsistent with the closed form's own large-t behaviour; kept so the
    validation report can quantify the discrepancy.
    """
    c = p.c
    if p.j == 0.0 and c == 0.0:
        raise DegenerateLimitError("limit undefined when both j and c vanish")
    return 16.0 * p.gamma**2 * p.j**2 / (c**2 + p.j**2) ** 2


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    # ties collapse toward the smaller argument: the left interval is kept
    # whenever the two probes compare equal
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return a


def optimal_time(p: SystemParams, t_lo: float, t_hi: float) -> tuple[float, float]:
    """Global maximum of the closed-form Fisher information on [t_lo, t_hi].

    A 2048-point grid brackets the maximum, golden-section refines it to a
    time tolerance of 1e-6, and ties break toward smaller t. A flat-zero
    curve returns (t_lo, 0).
    """
    if not (0.0 <= t_lo < t_hi) or not math.isfinite(t_hi):
        raise ContractViolationError("need 0 <= t_lo < t_hi, finite")
    grid = np.linspace(t_lo, t_hi, 2048)
    values = qfi_closed_form_batch(p, grid)
    k = int(np.argmax(values))
    if values[k] == 0.0:
        return t_lo, 0.0
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    t_star = _golden_max(lambda t: float(qfi_closed_form_batch(p, t)), float(lo),
                         float(hi), 1e-6)
    return t_star, qfi_closed_form(p, t_star)


def sensitivity_bound(f_q: float, n_shots: int) -> float:
    """Shot-limited field resolution 1 / sqrt(n_shots f_q)."""
    if n_shots < 1:
        raise ContractViolationError("n_shots must be positive")
    if f_q < 0.0:
        raise ContractViolationError("f_q must be non-negative")
    if f_q == 0.0:
        return math.inf
    return 1.0 / math.sqrt(n_shots * f_q)


def signal_contrast(p: SystemParams, t: float) -> float:
    """Population contrast S = p11 - p00 from the closed forms."""
    table = closed_form_table(p, float(t))
    return float(table[..., 3] - table[..., 0])


def _contrast_derivative(p: SystemParams, t: float) -> float:
    # central difference in b_z at fixed dephasing, Richardson-extrapolated
    # from steps h and h/2
    h = 1e-5 * max(1.0, abs(p.b_z))
    c0 = p.c
    g = p.gamma
    cs = np.array([c0 - g * h, c0 + g * h, c0 - g * h / 2.0, c0 + g * h / 2.0])
    table = closed_form_table(p, float(t), c=cs)
    s = table[:, 3] - table[:, 0]
    d_h = (s[1] - s[0]) / (2.0 * h)
    d_half = (s[3] - s[2]) / h
    return float((4.0 * d_half - d_h) / 3.0)


def signal_to_noise(p: SystemParams, t: float, n_shots: int, delta_b: float) -> float:
    """Raw signal-to-noise of a contrast readout for a probe shift delta_b."""
    if delta_b <= 0.0:
        raise ContractViolationError("delta_b must be positive")
    point = snr_point(p, t, n_shots=n_shots, delta_b=delta_b)
    if point.snr is None:
        raise AssertionError("snr_point must populate snr for delta_b > 0")
    return point.snr


def snr_point(p: SystemParams, t: float, n_shots: int = 1,
              delta_b: float = 0.0) -> SnrPoint:
    """Contrast, its field derivative, and the derived detection limits at t.

    delta_b only feeds the raw snr field; delta_b_min, delta_b_qfi and xi are
    defined from the unit signal-to-noise condition and do not depend on it.
    A derivative below 1e-14 flags the point as flat-signal and returns
    infinite sentinels instead of NaNs.
    """
    if n_shots < 1:
        raise ContractViolationError("n_shots must be positive")
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    table = closed_form_table(p, float(t))
    p00 = float(table[..., 0])
    p11 = float(table[..., 3])
    signal = p11 - p00
    derivative = _contrast_derivative(p, t)
    variance = (p00 * (1.0 - p00) + p11 * (1.0 - p11)) / n_shots
    noise = math.sqrt(max(variance, 0.0))
    flat = abs(derivative) < _FLAT_SIGNAL_TOL
    if flat:
        delta_b_min = math.inf
    elif noise == 0.0:
        delta_b_min = 0.0
    else:
        delta_b_min = noise / abs(derivative)
    delta_b_qfi = sensitivity_bound(qfi_closed_form(p, t), n_shots)
    if math.isfinite(delta_b_min) and math.isfinite(delta_b_qfi) and delta_b_qfi > 0.0:
        xi = delta_b_min / delta_b_qfi
    else:
        xi = math.inf
    snr = None
    if delta_b > 0.0:
        snr = math.inf if noise == 0.0 else abs(derivative) * delta_b / noise
    return SnrPoint(
        t=float(t),
        signal=signal,
        d_signal_d_bz=derivative,
        delta_b_min=delta_b_min,
        delta_b_qfi=delta_b_qfi,
        xi=xi,
        snr=snr,
        flat_signal=flat,
    )


def _counts_array(record) -> np.ndarray:
    if isinstance(record, MeasurementRecord):
        return np.array(record.counts, dtype=float)
    counts = np.asarray(record, dtype=float)
    if counts.shape != (4,) or np.any(counts < 0.0) or not np.all(np.isfinite(counts)):
        raise ContractViolationError("counts must be four non-negative numbers")
    return counts


def estimate_field(record, p_template: SystemParams, t: float,
                   b_lo: float, b_hi: float) -> float:
    """Maximum-likelihood estimate of b_z from readout counts.

    Maximizes the multinomial log-likelihood sum n_ij log p_ij(b_z) over
    [b_lo, b_hi] with dephasing held at the template value: a 1024-point grid
    brackets the optimum and golden-section refines it to 1e-8, ties toward
    the smaller field. ``record`` may be a MeasurementRecord or any four
    non-negative numbers; fractional counts support infinite-shot analyses.
    Raises UnidentifiableParameterError when the likelihood is flat across
    the window (for example at t = 0).
    """
    if not (b_lo < b_hi) or not (math.isfinite(b_lo) and math.isfinite(b_hi)):
        raise ContractViolationError("need finite b_lo < b_hi")
    counts = _counts_array(record)
    total = float(np.sum(counts))
    if total <= 0.0:
        raise ContractViolationError("counts are all zero")

    g = p_template.gamma
    base_shift = 2.0 * p_template.gamma_phi

    def log_likelihood(b):
        b = np.asarray(b, dtype=float)
        table = closed_form_table(p_template, float(t), c=g * b - base_shift)
        return np.log(np.clip(table, 1e-300, None)) @ counts

    grid = np.linspace(b_lo, b_hi, 1024)
    values = log_likelihood(grid)
    spread = float(np.max(values) - np.min(values))
    if spread <= 1e-12 * max(1.0, float(np.max(np.abs(values)))):
        raise UnidentifiableParameterError("likelihood carries no field dependence")
    k = int(np.argmax(values))
    lo = float(grid[max(k - 1, 0)])
    hi = float(grid[min(k + 1, len(grid) - 1)])
    return _golden_max(lambda b: float(log_likelihood(b)), lo, hi, 1e-8)
