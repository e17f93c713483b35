"""Dense complex linear algebra for two-qubit operators.

Everything here works on 2x2 and 4x4 complex matrices represented as numpy
arrays, with the four-dimensional basis ordered |00>, |01>, |10>, |11> and
qubit 1 as the left tensor factor. The eigensolver and the matrix exponential
are self-contained (cyclic Jacobi, scaling-and-squaring Taylor) so their
numerical behaviour is pinned by this module rather than by a LAPACK build.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = [
    "ContractViolationError",
    "ConvergenceError",
    "IDENTITY_2",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "HADAMARD_2",
    "tensor_product",
    "hermitian_eigenvalues",
    "hermitian_eigenvalues_batch",
    "spectral_norm",
    "spectral_norm_batch",
    "largest_singular_value",
    "matrix_exponential",
    "matrix_exponential_batch",
]


class ContractViolationError(ValueError):
    """An argument violates a documented precondition."""


class ConvergenceError(RuntimeError):
    """An iterative kernel failed to reach its stated tolerance."""


IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD_2 = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)

_HERMITICITY_TOL = 1e-10
_OFFDIAG_TOL = 1e-14  # off-diagonal Frobenius mass, relative to matrix scale
_MAX_SWEEPS = 40


def _as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] not in (2, 4):
        raise ContractViolationError(f"{name} must be 2x2 or 4x4, got {a.shape[0]}x{a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return a


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two single-qubit operators.

    The left factor acts on qubit 1, so (a (x) b)[2i+k, 2j+l] = a[i,j] b[k,l]
    and the result is indexed by the |00>, |01>, |10>, |11> ordering.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[0] != 2 or b.shape[0] != 2:
        raise ContractViolationError("tensor_product expects two 2x2 factors")
    return np.kron(a, b)


def _check_hermitian(a: np.ndarray) -> None:
    defect = np.linalg.norm(a - a.conj().swapaxes(-1, -2))
    scale = max(1.0, float(np.linalg.norm(a)))
    if defect > _HERMITICITY_TOL * scale:
        raise ContractViolationError(
            f"matrix is not Hermitian (defect {defect:.3e} exceeds {_HERMITICITY_TOL:.0e})"
        )


def hermitian_eigenvalues_batch(ms) -> np.ndarray:
    """Eigenvalues of a stack of Hermitian matrices, ascending along the last axis.

    Cyclic Jacobi with complex plane rotations: each (p, q) rotation zeroes one
    off-diagonal pair simultaneously across the whole stack, and full sweeps
    repeat until the off-diagonal Frobenius mass of every matrix falls below
    1e-14 of its scale. Hermiticity of the inputs is the caller's business;
    the public single-matrix wrapper checks it.
    """
    a = np.array(ms, dtype=complex)
    if a.ndim == 2:
        a = a[None]
    n, d = a.shape[0], a.shape[-1]
    if n == 0:
        return np.empty((0, d))
    scale = np.sqrt(np.einsum("nij,nij->n", a, a.conj()).real)
    safe = np.where(scale > 0.0, scale, 1.0)
    a = a / safe[:, None, None]
    pairs = [(p, q) for p in range(d) for q in range(p + 1, d)]
    for _ in range(_MAX_SWEEPS):
        total = np.einsum("nij,nij->n", a, a.conj()).real
        diag = np.einsum("nii->n", (a * a.conj()).real)
        if np.all(total - diag <= _OFFDIAG_TOL**2):
            break
        for p, q in pairs:
            apq = a[:, p, q]
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            phase = np.where(active, apq / np.where(active, mag, 1.0), 1.0)
            tau = (a[:, q, q].real - a[:, p, p].real) / np.where(active, 2.0 * mag, 1.0)
            sign = np.where(tau >= 0.0, 1.0, -1.0)
            t_rot = np.where(active, sign / (np.abs(tau) + np.sqrt(1.0 + tau * tau)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t_rot * t_rot)
            s = t_rot * c
            col_p = a[:, :, p].copy()
            col_q = a[:, :, q].copy()
            a[:, :, p] = c[:, None] * col_p - (s * phase.conj())[:, None] * col_q
            a[:, :, q] = (s * phase)[:, None] * col_p + c[:, None] * col_q
            row_p = a[:, p, :].copy()
            row_q = a[:, q, :].copy()
            a[:, p, :] = c[:, None] * row_p - (s * phase)[:, None] * row_q
            a[:, q, :] = (s * phase.conj())[:, None] * row_p + c[:, None] * row_q
    else:
        raise ConvergenceError("Jacobi eigensolver did not converge in 40 sweeps")
    vals = np.sort(np.diagonal(a, axis1=-2, axis2=-1).real, axis=-1)
    return vals * scale[:, None]


def hermitian_eigenvalues(m) -> np.ndarray:
    """Real eigenvalues of a Hermitian 2x2 or 4x4 matrix, sorted ascending."""
    a = _as_matrix(m)
    _check_hermitian(a)
    return hermitian_eigenvalues_batch(a[None])[0]


def spectral_norm(m) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    vals = hermitian_eigenvalues(m)
    return float(np.max(np.abs(vals)))


def spectral_norm_batch(ms) -> np.ndarray:
    """spectral_norm over a stack of Hermitian matrices (no hermiticity check)."""
    vals = hermitian_eigenvalues_batch(ms)
    return np.max(np.abs(vals), axis=-1)


def largest_singular_value(m) -> float:
    """Operator (spectral) norm of a general, not necessarily Hermitian, matrix.

    Computed as sqrt of the top eigenvalue of m^dagger m, which is Hermitian
    positive semi-definite by construction.
    """
    a = _as_matrix(m)
    gram = a.conj().T @ a
    top = hermitian_eigenvalues_batch(gram[None])[0][-1]
    return float(math.sqrt(max(top, 0.0)))


def matrix_exponential_batch(ms) -> np.ndarray:
    """exp() of a stack of small complex matrices.

    Scaling-and-squaring with a truncated Taylor kernel: the whole stack is
    scaled by a common power of two chosen from the largest Frobenius norm,
    the series is summed until the analytic remainder bound drops below 1e-18,
    and the result is squared back up. Accurate to ~1e-13 relative for the
    norms this package produces.
    """
    a = np.array(ms, dtype=complex)
    single = a.ndim == 2
    if single:
        a = a[None]
    if not np.all(np.isfinite(a)):
        raise ContractViolationError("matrix_exponential requires finite entries")
    d = a.shape[-1]
    norms = np.sqrt(np.einsum("nij,nij->n", a, a.conj()).real)
    theta = float(np.max(norms)) if a.shape[0] else 0.0
    squarings = max(0, int(math.ceil(math.log2(theta / 0.25)))) if theta > 0.25 else 0
    a = a / (2.0**squarings)
    theta /= 2.0**squarings
    # smallest K with theta^(K+1)/(K+1)! below 1e-18
    terms, bound = 1, theta
    while bound > 1e-18 and terms < 40:
        terms += 1
        bound *= theta / terms
    eye = np.broadcast_to(np.eye(d, dtype=complex), a.shape)
    out = eye.copy()
    power = eye.copy()
    for k in range(1, terms + 1):
        power = power @ a / k
        out += power
    for _ in range(squarings):
        out = out @ out
    return out[0] if single else out


def matrix_exponential(m) -> np.ndarray:
    """exp() of a single 2x2 or 4x4 complex matrix."""
    return matrix_exponential_batch(_as_matrix(m))
