import json

import numpy as np
import pytest

from errors import ConfigError, DataError, RenderError
from simulator.dataset import Dataset, read_occluders
from simulator.render import Session, render_gripper_pair, render_sequence, scene_trajectory
from simulator.scene import (
    SHAPES,
    ObjectSpec,
    SceneSpec,
    background_catalog,
    default_scene,
    load_scene,
    object_catalog,
    object_sprite,
    occluder_catalog,
    save_scene,
)
from trajectory.waypoints import EllipseSpec


@pytest.fixture(scope="module")
def scene():
    return default_scene(poses=4)


def test_rendering_is_deterministic(scene):
    trajectory = scene_trajectory(scene)
    first = render_sequence(scene, trajectory)
    second = render_sequence(scene, trajectory)
    for (a, gt_a), (b, gt_b) in zip(first, second):
        assert a.pixels.tobytes() == b.pixels.tobytes()
        assert gt_a.object_mask == gt_b.object_mask


def test_ground_truth_partitions_pixels(scene):
    for frame, gt in render_sequence(scene, scene_trajectory(scene)):
        assert gt.arm_mask.shape == frame.shape == scene.shape
        assert (gt.arm_mask & gt.object_mask).is_empty()
        assert gt.gripper_mask.is_subset_of(gt.arm_mask)
        assert not gt.object_mask.is_empty()


def test_empty_gripper_has_no_object(scene):
    rendered = render_sequence(scene, scene_trajectory(scene), grasped=False, session=Session.PAIRED_EMPTY)
    assert all(gt.object_mask.is_empty() for _, gt in rendered)
    assert all(not gt.arm_mask.is_empty() for _, gt in rendered)


def test_sessions_have_their_own_noise(scene):
    trajectory = scene_trajectory(scene)[:1]
    (a, _), = render_sequence(scene, trajectory, grasped=False, session=Session.ARM_ONLY)
    (b, _), = render_sequence(scene, trajectory, grasped=False, session=Session.PAIRED_EMPTY, exposure=1.0)
    assert a != b
    assert np.abs(a.pixels.astype(int) - b.pixels.astype(int)).mean() < 5


def test_paired_gain_is_a_soft_shadow(scene):
    gain = scene.paired_gain()
    assert gain.shape == scene.shape
    h, w = scene.shape
    row, col = round(scene.paired_shadow_center[0] * (h - 1)), round(scene.paired_shadow_center[1] * (w - 1))
    assert gain[row, col] == pytest.approx(scene.paired_exposure * (1 - scene.paired_shadow), abs=1e-3)
    assert gain[-1, -1] == pytest.approx(scene.paired_exposure, abs=1e-3)
    assert gain.max() <= scene.paired_exposure
    flat = SceneSpec(paired_shadow=0.0, paired_exposure=0.9).paired_gain()
    assert np.all(flat == 0.9)


def test_shadowed_paired_frame_differs_only_under_the_shadow(scene):
    trajectory = scene_trajectory(scene)[:1]
    (plain, _), = render_sequence(scene, trajectory, grasped=False, session=Session.PAIRED_EMPTY, exposure=1.0)
    (shaded, _), = render_sequence(scene, trajectory, grasped=False, session=Session.PAIRED_EMPTY,
                                   exposure=scene.paired_gain())
    diff = np.abs(plain.pixels.astype(int) - shaded.pixels.astype(int)).max(axis=2)
    assert diff[scene.paired_gain() > 0.99].max() <= 3
    assert diff[scene.paired_gain() < 0.9].mean() > 5


def test_gripper_pair(scene):
    pose = scene_trajectory(scene)[0]
    opened, closed, jaws = render_gripper_pair(scene, pose)
    assert opened != closed
    assert not jaws.is_empty()
    diff = np.abs(opened.pixels.astype(int) - closed.pixels.astype(int)).max(axis=2) > 20
    assert diff[jaws.bits].mean() > 0.5

    still_open, still_closed, none = render_gripper_pair(scene, pose, amplitude=0.0)
    assert still_open == still_closed
    assert none.is_empty()


def test_pose_outside_frame_names_the_pose():
    far = default_scene(poses=3, ellipse=EllipseSpec(center=(10.0, 0.0, 0.0), semi_axes=(0.03, 0.02),
                                                     n_points=3))
    with pytest.raises(RenderError) as info:
        render_sequence(far, scene_trajectory(far))
    assert info.value.pose_index == 0


def test_render_needs_poses(scene):
    with pytest.raises(ValueError):
        render_sequence(scene, [])


# Scene description

def test_scene_json_round_trip(tmp_path, scene):
    save_scene(scene, tmp_path / "scene.json")
    assert load_scene(tmp_path / "scene.json") == scene


def test_scene_rejects_bad_input(tmp_path):
    with pytest.raises(ConfigError):
        SceneSpec.from_dict({"colour": 1})
    with pytest.raises(ConfigError):
        SceneSpec.from_dict({"obj": {"shape": "torus"}})
    with pytest.raises(ConfigError):
        SceneSpec(noise_sigma=-1)
    with pytest.raises(ConfigError):
        SceneSpec(paired_shadow=1.0)
    with pytest.raises(ConfigError):
        SceneSpec(paired_shadow_sigma=0.0)
    with pytest.raises(ConfigError):
        load_scene(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("[")
    with pytest.raises(ConfigError):
        load_scene(tmp_path / "bad.json")


@pytest.mark.parametrize("shape", sorted(SHAPES))
def test_object_sprites(shape):
    pixels, mask = object_sprite(ObjectSpec(shape=shape, size=(40, 50)))
    assert pixels.shape == (40, 50, 3) and mask.shape == (40, 50)
    assert mask.sum() > 0.4 * mask.size
    assert not pixels[~mask].any()


def test_catalogs():
    objects = object_catalog(10)
    assert len({o.name for o in objects}) == 10
    assert {o.shape for o in objects} == set(SHAPES)
    occluders = occluder_catalog()
    assert len(occluders) == 6
    assert all(frame.shape == mask.shape and not mask.is_empty() for frame, mask in occluders)
    backgrounds = background_catalog(30, 40, count=3)
    assert [b.shape for b in backgrounds] == [(30, 40)] * 3
    assert backgrounds[0] != backgrounds[1]


# Dataset layout

def test_written_dataset_reads_back(small_dataset):
    dataset = Dataset(small_dataset)
    frames = dataset.frames()
    assert len(frames) == 4
    assert len(dataset.ground_truth("object")) == 4
    assert len(dataset.empty_frames()) == 4
    assert len(dataset.arm_only_frames()) == 4
    assert len(dataset.gripper_pairs()) == 4
    assert len(dataset.occluders()) == 6
    assert len(dataset.backgrounds()) == 4
    manifest = dataset.manifest()
    assert manifest["poses"] == 4
    assert (manifest["height"], manifest["width"]) == frames[0].shape
    scene = load_scene(small_dataset / "scene.json")
    assert scene.poses == 4
    assert len(json.loads((small_dataset / "trajectory.json").read_text())) == 4


def test_dataset_needs_frames(tmp_path):
    with pytest.raises(DataError):
        Dataset(tmp_path)
    with pytest.raises(DataError):
        read_occluders(tmp_path / "occluders")
