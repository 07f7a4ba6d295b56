"""
Shared fixtures; puts the repository root on sys.path.
"""
import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A four-pose rendered recording with every extra session, written once."""
    from simulator.dataset import write_dataset
    from simulator.scene import default_scene

    root = tmp_path_factory.mktemp("dataset")
    write_dataset(default_scene(poses=4), root)
    return root


@pytest.fixture(scope="session")
def sim_recording():
    """Twelve consecutive poses of the default scene: arm-only and grasped renderings with ground truth."""
    from simulator.render import Session, render_sequence, scene_trajectory
    from simulator.scene import default_scene, object_catalog

    scene = default_scene(poses=60)
    trajectory = scene_trajectory(scene)[20:32]
    arm_only = render_sequence(scene, trajectory, grasped=False, session=Session.ARM_ONLY)
    grasped = render_sequence(scene.with_object(object_catalog(1)[0]), trajectory, grasped=True,
                              session=Session.GRASPED)
    return scene, trajectory, arm_only, grasped
