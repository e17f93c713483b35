"""Driven two-qubit sensor model.

The system is a pair of exchange-coupled qubits in a static z field with a
shared dephasing shift and two harmonic drives:

    H(t) = -(gamma b_z / 2) (s1z + s2z) + j (s1z s2z + s1x s2x)
           + gamma_phi (s1z + s2z)
           + omega_x sin(omega t) (s1x + s2x)
           + omega_y cos(omega t + alpha) (s1y + s2y)

with hbar = 1 throughout. The first-order propagator I - i Int H dt' has a
closed-form generator because the drive integrals are elementary; this module
provides that generator, the shorthand quantities the closed-form readout
expressions are written in, and the bound H_max t that gates when the
first-order truncation can be trusted.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import (
    ContractViolationError,
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    spectral_norm_batch,
    tensor_product,
)

__all__ = [
    "SystemParams",
    "DerivedQuantities",
    "SIGMA_SUM_X",
    "SIGMA_SUM_Y",
    "SIGMA_SUM_Z",
    "EXCHANGE_ZZXX",
    "derived_quantities",
    "hamiltonian_at",
    "hamiltonian_batch",
    "integrated_hamiltonian",
    "h_max",
    "convergence_margin",
    "truncation_error_bound",
    "margin_profile",
]

# collective operators, fixed |00>,|01>,|10>,|11> ordering
SIGMA_SUM_X = tensor_product(SIGMA_X, IDENTITY_2) + tensor_product(IDENTITY_2, SIGMA_X)
SIGMA_SUM_Y = tensor_product(SIGMA_Y, IDENTITY_2) + tensor_product(IDENTITY_2, SIGMA_Y)
SIGMA_SUM_Z = tensor_product(SIGMA_Z, IDENTITY_2) + tensor_product(IDENTITY_2, SIGMA_Z)
EXCHANGE_ZZXX = tensor_product(SIGMA_Z, SIGMA_Z) + tensor_product(SIGMA_X, SIGMA_X)

_PARAM_KEYS = ("gamma", "b_z", "j", "gamma_phi", "omega_x", "omega_y", "omega", "alpha")

DEFAULT_GRID_POINTS = 1024


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the sensor Hamiltonian (hbar = 1 units).

    omega must be positive: the closed-form expressions divide by it, and the
    static-drive limit is deliberately not supported. gamma_phi is a dephasing
    rate and must be non-negative.
    """

    gamma: float = 1.0
    b_z: float = 0.1
    j: float = 0.2
    gamma_phi: float = 0.0
    omega_x: float = 0.5
    omega_y: float = 0.5
    omega: float = 1.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        for key in _PARAM_KEYS:
            value = getattr(self, key)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ContractViolationError(f"{key} must be a real number")
            if not math.isfinite(value):
                raise ContractViolationError(f"{key} must be finite")
            object.__setattr__(self, key, float(value))
        if self.omega <= 0.0:
            raise ContractViolationError("omega must be positive")
        if self.gamma_phi < 0.0:
            raise ContractViolationError("gamma_phi must be non-negative")

    @property
    def c(self) -> float:
        """Effective z-axis phase coefficient C = gamma b_z - 2 gamma_phi."""
        return self.gamma * self.b_z - 2.0 * self.gamma_phi

    @classmethod
    def from_c(cls, c: float, *, gamma: float = 1.0, b_z: float | None = None,
               **kwargs) -> "SystemParams":
        """Build params from the effective coefficient C instead of (b_z, gamma_phi).

        With b_z omitted, the pair is fixed as b_z = c / gamma, gamma_phi = 0,
        so any requested C (of either sign) is reachable. With b_z given,
        gamma_phi = (gamma b_z - c) / 2, which must come out non-negative.
        """
        if b_z is None:
            b_z = c / gamma
            gamma_phi = 0.0
        else:
            gamma_phi = (gamma * b_z - c) / 2.0
        return cls(gamma=gamma, b_z=b_z, gamma_phi=gamma_phi, **kwargs)

    def replace(self, **changes) -> "SystemParams":
        fields = asdict(self)
        fields.update(changes)
        return SystemParams(**fields)

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in _PARAM_KEYS}

    @classmethod
    def from_dict(cls, data: dict) -> "SystemParams":
        """Parse the flat JSON object form.

        Either the full (b_z, gamma_phi) pair or the single alternative key
        "c" may be given; "c" together with gamma_phi is ambiguous and
        rejected.
        """
        data = dict(data)
        unknown = set(data) - set(_PARAM_KEYS) - {"c"}
        if unknown:
            raise ContractViolationError(f"unknown parameter keys: {sorted(unknown)}")
        if "c" in data:
            if "gamma_phi" in data:
                raise ContractViolationError("give either c or gamma_phi, not both")
            c = data.pop("c")
            gamma = data.pop("gamma", 1.0)
            b_z = data.pop("b_z", None)
            return cls.from_c(c, gamma=gamma, b_z=b_z, **data)
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SystemParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DerivedQuantities:
    """Shorthand symbols the closed-form readout expressions are written in.

    delta = omega t is the accumulated drive angle, delta_x = 1 - cos(delta)
    the x-quadrature deviation, delta_alpha = sin(alpha) - sin(alpha + delta)
    the net y-quadrature change, c the effective z coefficient, and
    m = 1 + 2 j^2 t^2 + t^2 c^2 / 2 the squared norm of the first-order state.
    """

    delta: float
    delta_x: float
    delta_alpha: float
    c: float
    m: float


def derived_quantities(p: SystemParams, t: float) -> DerivedQuantities:
    if not math.isfinite(t):
        raise ContractViolationError("t must be finite")
    delta = p.omega * t
    c = p.c
    return DerivedQuantities(
        delta=delta,
        delta_x=1.0 - math.cos(delta),
        delta_alpha=math.sin(p.alpha) - math.sin(p.alpha + delta),
        c=c,
        m=1.0 + 2.0 * p.j**2 * t**2 + 0.5 * t**2 * c**2,
    )


def hamiltonian_batch(p: SystemParams, times) -> np.ndarray:
    """H(t) evaluated on an array of times; shape (..., 4, 4)."""
    times = np.asarray(times, dtype=float)
    static = -0.5 * p.c * SIGMA_SUM_Z + p.j * EXCHANGE_ZZXX
    out = np.broadcast_to(static, times.shape + (4, 4)).copy()
    out += (p.omega_x * np.sin(p.omega * times))[..., None, None] * SIGMA_SUM_X
    out += (p.omega_y * np.cos(p.omega * times + p.alpha))[..., None, None] * SIGMA_SUM_Y
    return out


def hamiltonian_at(p: SystemParams, t: float) -> np.ndarray:
    """The 4x4 Hamiltonian at one instant. Always Hermitian."""
    if not math.isfinite(t):
        raise ContractViolationError("t must be finite")
    return hamiltonian_batch(p, np.float64(t))


def integrated_hamiltonian(p: SystemParams, t: float) -> np.ndarray:
    """Closed form of Int_0^t H(t') dt'.

    The drive integrals are elementary: Int sin(w t') = delta_x / w and
    Int cos(w t' + alpha) = -delta_alpha / w, so the generator is
    -(C t / 2) Sz + j t (ZZ+XX) + (omega_x delta_x / omega) Sx
    - (omega_y delta_alpha / omega) Sy.
    """
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    q = derived_quantities(p, t)
    return (
        -(q.c * t / 2.0) * SIGMA_SUM_Z
        + p.j * t * EXCHANGE_ZZXX
        + (p.omega_x * q.delta_x / p.omega) * SIGMA_SUM_X
        - (p.omega_y * q.delta_alpha / p.omega) * SIGMA_SUM_Y
    )


def _lipschitz_inflation(p: SystemParams, dt_grid: float) -> float:
    # |dH/dt| <= 2 omega (omega_x + omega_y); doubled grid spacing over-bounds
    # the worst deviation between samples.
    return p.omega * (p.omega_x + p.omega_y) * 2.0 * dt_grid


def h_max(p: SystemParams, t: float, grid_points: int = DEFAULT_GRID_POINTS) -> float:
    """Certified upper bound on sup ||H(t')|| over [0, t].

    Grid maximum of the spectral norm over grid_points+1 uniform samples,
    inflated by a Lipschitz safety term so the true supremum is covered.
    """
    if grid_points < 64:
        raise ContractViolationError("grid_points must be at least 64")
    if t < 0.0:
        raise ContractViolationError("t must be non-negative")
    samples = np.linspace(0.0, t, grid_points + 1)
    grid_max = float(np.max(spectral_norm_batch(hamiltonian_batch(p, samples))))
    if t == 0.0:
        return grid_max
    return grid_max + _lipschitz_inflation(p, t / grid_points)


def convergence_margin(p: SystemParams, t: float,
                       grid_points: int = DEFAULT_GRID_POINTS) -> float:
    """H_max t. Values below 1 mean the first-order propagator is trusted."""
    return h_max(p, t, grid_points) * t


def truncation_error_bound(p: SystemParams, t: float,
                           grid_points: int = DEFAULT_GRID_POINTS) -> float:
    """Upper bound (H_max t)^2 / 2 on the first-order truncation error."""
    return 0.5 * convergence_margin(p, t, grid_points) ** 2


def margin_profile(p: SystemParams, times,
                   grid_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Convergence margins H_max(t) t for a whole grid of times in one pass.

    Uses a single shared sample grid over [0, max(times)] with a running
    maximum, plus the same Lipschitz inflation as h_max, so each returned
    margin is a valid bound for its own interval. Cheaper than calling h_max
    per point and used by the sweep operations.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros(0)
    if np.any(times < 0.0):
        raise ContractViolationError("times must be non-negative")
    t_top = float(np.max(times))
    if t_top == 0.0:
        return np.zeros(times.shape)
    samples = np.linspace(0.0, t_top, grid_points + 1)
    norms = spectral_norm_batch(hamiltonian_batch(p, samples))
    running = np.maximum.accumulate(norms)
    idx = np.searchsorted(samples, times, side="right") - 1
    bound = running[idx] + _lipschitz_inflation(p, t_top / grid_points)
    return np.where(times == 0.0, 0.0, bound * times)
