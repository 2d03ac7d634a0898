import numpy as np
import pytest

from tlzsim import DriveParams, PropagationOptions

# Reference operating point used throughout: the measured transition at
# the analytic perfect-tunneling speed for a 0.5 MHz gap with a 0.2 us
# curvature (duration saturates the Rabi limit at 8.6569e-7 s).
FIG2_M = 0.5e6
FIG2_NU = 1e14
FIG2_KAPPA = 0.2e-6
FIG2_F_PT = -0.3141592653589793


@pytest.fixture
def fig2_params() -> DriveParams:
    return DriveParams(m=FIG2_M, nu=FIG2_NU, kappa=FIG2_KAPPA, F=-0.3142).with_duration()


@pytest.fixture
def tight_options() -> PropagationOptions:
    return PropagationOptions(rel_tol=1e-12, abs_tol=1e-14)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250810)
