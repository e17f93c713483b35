import json
import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import draw_params
from qmag import ContractViolationError, SystemParams, derived_quantities
from qmag.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, spectral_norm
from qmag.model import (
    convergence_margin,
    h_max,
    hamiltonian_at,
    integrated_hamiltonian,
    margin_profile,
    truncation_error_bound,
)

I2 = np.eye(2, dtype=complex)


def reference_hamiltonian(p: SystemParams, t: float) -> np.ndarray:
    """Independent assembly straight from the definition via np.kron."""
    sum_z = np.kron(SIGMA_Z, I2) + np.kron(I2, SIGMA_Z)
    sum_x = np.kron(SIGMA_X, I2) + np.kron(I2, SIGMA_X)
    sum_y = np.kron(SIGMA_Y, I2) + np.kron(I2, SIGMA_Y)
    zz_xx = np.kron(SIGMA_Z, SIGMA_Z) + np.kron(SIGMA_X, SIGMA_X)
    return (-0.5 * p.gamma * p.b_z * sum_z + p.j * zz_xx + p.gamma_phi * sum_z
            + p.omega_x * np.sin(p.omega * t) * sum_x
            + p.omega_y * np.cos(p.omega * t + p.alpha) * sum_y)


def test_params_defaults_give_base_regime(base_params):
    assert base_params.gamma == 1.0
    assert base_params.b_z == pytest.approx(0.1)
    assert base_params.gamma_phi == 0.0
    assert base_params.c == pytest.approx(0.1)


@pytest.mark.parametrize("bad", [
    {"omega": 0.0},
    {"omega": -1.0},
    {"gamma_phi": -0.1},
    {"b_z": math.inf},
    {"alpha": math.nan},
])
def test_params_validation(bad):
    with pytest.raises(ContractViolationError):
        SystemParams(**bad)


def test_effective_coefficient():
    p = SystemParams(gamma=1.0, b_z=0.5, gamma_phi=0.2)
    assert p.c == pytest.approx(0.1)


def test_from_c_without_field():
    p = SystemParams.from_c(0.3, gamma=2.0)
    assert p.c == pytest.approx(0.3)
    assert p.b_z == pytest.approx(0.15)
    assert p.gamma_phi == 0.0


def test_from_c_with_field():
    p = SystemParams.from_c(0.3, gamma=2.0, b_z=0.5)
    assert p.gamma_phi == pytest.approx((2.0 * 0.5 - 0.3) / 2.0)
    assert p.c == pytest.approx(0.3)


def test_from_c_negative_dephasing_rejected():
    with pytest.raises(ContractViolationError):
        SystemParams.from_c(0.5, b_z=0.1)


def test_json_round_trip():
    p = SystemParams.from_c(0.25, gamma=1.5, j=0.4, omega=2.0, alpha=0.3)
    q = SystemParams.from_json(p.to_json())
    assert q == p
    keys = set(json.loads(p.to_json()))
    assert keys == {"gamma", "b_z", "j", "gamma_phi", "omega_x", "omega_y",
                    "omega", "alpha"}


def test_from_dict_c_key():
    p = SystemParams.from_dict({"c": 0.2, "j": 0.3})
    assert p.c == pytest.approx(0.2)
    assert p.j == 0.3


def test_from_dict_rejects_ambiguous_and_unknown():
    with pytest.raises(ContractViolationError):
        SystemParams.from_dict({"c": 0.2, "gamma_phi": 0.1})
    with pytest.raises(ContractViolationError):
        SystemParams.from_dict({"jj": 0.2})


def test_derived_at_zero(base_params):
    d = derived_quantities(base_params, 0.0)
    assert (d.delta, d.delta_x, d.delta_alpha, d.m) == (0.0, 0.0, 0.0, 1.0)


def test_derived_periodicity():
    p = SystemParams.from_c(0.0, j=0.0, omega=1.0, alpha=0.0)
    d = derived_quantities(p, 2.0 * math.pi)
    assert d.delta == pytest.approx(2.0 * math.pi)
    assert abs(d.delta_x) <= 1e-12
    assert abs(d.delta_alpha) <= 1e-12
    assert d.m == pytest.approx(1.0)


def test_derived_m_definition():
    rng = np.random.default_rng(20)
    for _ in range(20):
        p = draw_params(rng)
        t = float(rng.uniform(0.0, 10.0))
        d = derived_quantities(p, t)
        assert d.m == pytest.approx(1.0 + 2.0 * p.j**2 * t**2
                                    + 0.5 * t**2 * p.c**2, rel=1e-14)


@settings(max_examples=50, derandomize=True)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0.0, 50.0))
def test_derived_bounds_property(seed, t):
    p = draw_params(np.random.default_rng(seed))
    d = derived_quantities(p, t)
    assert 0.0 <= d.delta_x <= 2.0
    assert abs(d.delta_alpha) <= 2.0
    assert d.m >= 1.0


def test_hamiltonian_zero_couplings():
    p = SystemParams(gamma=1.0, b_z=0.0, j=0.0, gamma_phi=0.0,
                     omega_x=0.0, omega_y=0.0)
    assert np.allclose(hamiltonian_at(p, 1.7), 0.0)


def test_hamiltonian_static_diagonal():
    p = SystemParams(gamma=1.0, b_z=0.2, gamma_phi=0.05, j=0.0,
                     omega_x=0.0, omega_y=0.0)
    expected = np.diag([-0.1, 0.0, 0.0, 0.1]).astype(complex)
    assert np.max(np.abs(hamiltonian_at(p, 0.4) - expected)) <= 1e-14


def test_hamiltonian_pure_x_drive():
    p = SystemParams(gamma=1.0, b_z=0.0, j=0.0, gamma_phi=0.0,
                     omega_x=0.5, omega_y=0.0, omega=1.0)
    sum_x = np.kron(SIGMA_X, I2) + np.kron(I2, SIGMA_X)
    assert np.max(np.abs(hamiltonian_at(p, math.pi / 2.0) - 0.5 * sum_x)) <= 1e-14


def test_hamiltonian_matches_reference_and_hermitian():
    rng = np.random.default_rng(21)
    for _ in range(30):
        p = draw_params(rng)
        t = float(rng.uniform(0.0, 10.0))
        h = hamiltonian_at(p, t)
        assert np.max(np.abs(h - reference_hamiltonian(p, t))) <= 1e-14
        assert np.linalg.norm(h - h.conj().T) <= 1e-14


def test_integrated_zero_time(base_params):
    assert np.allclose(integrated_hamiltonian(base_params, 0.0), 0.0)


def test_integrated_constant_case():
    p = SystemParams(gamma=1.2, b_z=0.3, gamma_phi=0.1, j=0.25,
                     omega_x=0.0, omega_y=0.0)
    t = 2.3
    expected = t * hamiltonian_at(p, 0.0)
    assert np.max(np.abs(integrated_hamiltonian(p, t) - expected)) <= 1e-13


def test_integrated_matches_quadrature():
    rng = np.random.default_rng(22)
    for _ in range(10):
        p = draw_params(rng)
        t = float(rng.uniform(0.5, 8.0))
        ref, _ = scipy.integrate.quad_vec(
            lambda s: hamiltonian_at(p, s), 0.0, t, epsabs=1e-12, epsrel=1e-12)
        assert np.max(np.abs(integrated_hamiltonian(p, t) - ref)) <= 1e-10


def test_integrated_differentiates_back():
    rng = np.random.default_rng(23)
    step = 1e-4
    for _ in range(10):
        p = draw_params(rng)
        t = float(rng.uniform(0.5, 8.0))
        diff = (integrated_hamiltonian(p, t + step)
                - integrated_hamiltonian(p, t - step)) / (2.0 * step)
        assert np.max(np.abs(diff - hamiltonian_at(p, t))) <= 1e-6


def test_h_max_zero_couplings():
    p = SystemParams(gamma=1.0, b_z=0.0, j=0.0, gamma_phi=0.0,
                     omega_x=0.0, omega_y=0.0)
    assert h_max(p, 3.0) == 0.0


def test_h_max_static_case():
    p = SystemParams(gamma=1.0, b_z=0.1, gamma_phi=0.0, j=0.0,
                     omega_x=0.0, omega_y=0.0)
    assert h_max(p, 5.0) == pytest.approx(0.1, abs=1e-13)


def test_h_max_base_regime_window(base_params):
    coarse = h_max(base_params, 10.0, grid_points=1024)
    fine = h_max(base_params, 10.0, grid_points=2048)
    assert 1.0 <= coarse <= 2.5
    assert abs(fine - coarse) / coarse < 0.01


def test_h_max_monotone(base_params):
    values = [h_max(base_params, t) for t in (0.5, 1.0, 2.0, 5.0, 10.0)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_h_max_dominates_sampled_norms(base_params):
    bound = h_max(base_params, 10.0)
    for t in np.linspace(0.0, 10.0, 57):
        assert spectral_norm(hamiltonian_at(base_params, float(t))) <= bound + 1e-12


def test_h_max_rejects_small_grid(base_params):
    with pytest.raises(ContractViolationError):
        h_max(base_params, 1.0, grid_points=32)


def test_margin_examples(base_params):
    assert convergence_margin(base_params, 0.0) == 0.0
    static = SystemParams(gamma=1.0, b_z=0.1, gamma_phi=0.0, j=0.0,
                          omega_x=0.0, omega_y=0.0)
    assert convergence_margin(static, 5.0) == pytest.approx(0.5, abs=1e-12)
    assert convergence_margin(base_params, 6.352) > 1.0


def test_truncation_bound_examples():
    static = SystemParams(gamma=1.0, b_z=0.1, gamma_phi=0.0, j=0.0,
                          omega_x=0.0, omega_y=0.0)
    assert truncation_error_bound(static, 0.0) == 0.0
    assert truncation_error_bound(static, 5.0) == pytest.approx(0.125, abs=1e-12)
    assert truncation_error_bound(static, 12.0) == pytest.approx(0.72, abs=1e-12)


def test_margin_profile_consistency(base_params):
    times = np.linspace(0.0, 10.0, 41)
    margins = margin_profile(base_params, times)
    assert margins[0] == 0.0
    assert np.all(np.diff(margins) >= -1e-12)
    assert margins[-1] == pytest.approx(convergence_margin(base_params, 10.0),
                                        rel=1e-12)
