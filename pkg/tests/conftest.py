import numpy as np
import pytest

from qmag import SystemParams


@pytest.fixture
def base_params() -> SystemParams:
    """The regime every figure uses: omega=1, Omega_x=Omega_y=1/2, J=0.2, C=0.1."""
    return SystemParams.from_c(0.1, j=0.2, omega_x=0.5, omega_y=0.5,
                               omega=1.0, alpha=0.0)


def draw_params(rng: np.random.Generator) -> SystemParams:
    """Random physical parameters over the validated ranges."""
    return SystemParams.from_c(
        float(rng.uniform(-1.0, 1.0)),
        gamma=float(rng.uniform(0.5, 2.0)),
        j=float(rng.uniform(0.0, 1.0)),
        omega_x=float(rng.uniform(0.0, 1.0)),
        omega_y=float(rng.uniform(0.0, 1.0)),
        omega=float(rng.uniform(0.3, 3.0)),
        alpha=float(rng.uniform(0.0, 2.0 * np.pi)),
    )
