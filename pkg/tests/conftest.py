import numpy as np
import pytest

from twinfuse.geometry import CameraIntrinsics, CameraPose


@pytest.fixture
def identity_pose():
    return CameraPose.identity()


@pytest.fixture
def px1000_intrinsics():
    """640x480 camera with f/dx = f/dy = 1000 px and centered principal
    point offsets used by the worked examples."""
    return CameraIntrinsics(f=0.01, dx=1e-5, dy=1e-5, u0=320.0, v0=320.0,
                            width=640, height=480)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
