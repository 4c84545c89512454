
import os
import sys

import numpy as np
import pytest

# Add repo root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.data.data_loader import BenchmarkDataLoader  # noqa: E402
from src.device.calibration import default_device_params  # noqa: E402
from src.device.params import DeviceParams, SwitchDirection  # noqa: E402
from src.utils.random_streams import make_stream  # noqa: E402


@pytest.fixture(scope="session")
def params() -> DeviceParams:
    """Calibrated parameters for the default write mapping, ideal devices"""
    return default_device_params(0.0)


@pytest.fixture
def simple_params() -> DeviceParams:
    """Round-number parameters for closed-form checks"""
    return DeviceParams(
        ic0={SwitchDirection.AP_TO_P: 50e-6, SwitchDirection.P_TO_AP: 100e-6},
        delta={SwitchDirection.AP_TO_P: 40.0, SwitchDirection.P_TO_AP: 40.0},
        tau0={SwitchDirection.AP_TO_P: 1e-9, SwitchDirection.P_TO_AP: 1e-9},
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return make_stream(1234)


@pytest.fixture(scope="session")
def synthetic():
    return BenchmarkDataLoader.generate_synthetic_data(n_samples=200, n_features=8, test_size=50, seed=3)
