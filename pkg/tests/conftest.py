import numpy as np
import pytest

from annorig.sim import RigConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def nominal_config():
    """Noiseless nominal rig: 5 MP camera 1 m above the table."""
    return RigConfig(pose_sigma_mm=0.0, rot_sigma_rad=0.0,
                     pixel_sigma_px=0.0, intensity_sigma=0.0, seed=0)


@pytest.fixture
def small_config(nominal_config):
    """Quarter-resolution camera, same geometry; keeps render-heavy tests fast."""
    return nominal_config.scaled(0.25)
