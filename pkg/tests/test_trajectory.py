import csv
import json
import math

import numpy as np
import pytest

from errors import DataError
from trajectory.sphere import (
    GOLDEN_RATIO,
    fibonacci_lattice,
    lattice_to_sphere,
    mirror_to_camera_hemisphere,
    pose_rotation,
)
from trajectory.waypoints import (
    FLIP,
    EllipseSpec,
    TrajectoryPose,
    build_trajectory,
    default_trajectory,
    ellipse_points,
    load_trajectory_json,
    write_trajectory_csv,
    write_trajectory_json,
)


def assert_proper_rotation(r):
    np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-9)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-9)


# Lattice and sphere

def test_lattice_values():
    assert GOLDEN_RATIO == pytest.approx(1.6180339887, abs=1e-10)
    lattice = fibonacci_lattice(301)
    assert lattice.shape == (301, 2)
    assert lattice[0, 0] == pytest.approx(0.5 / 301)
    assert lattice[0, 1] == 0.0
    assert np.all((lattice >= 0) & (lattice < 1))
    small = fibonacci_lattice(10)
    assert small[2] == pytest.approx((0.25, 0.2360679775), abs=1e-9)


def test_lattice_is_deterministic():
    assert fibonacci_lattice(301).tobytes() == fibonacci_lattice(301).tobytes()


def test_lattice_needs_points():
    with pytest.raises(ValueError):
        fibonacci_lattice(0)


def test_sphere_mapping_special_points():
    points = lattice_to_sphere(np.array([[0.5, 0.0], [1.0, 0.25], [0.0, 0.6]]))
    np.testing.assert_allclose(points[0], (1.0, 0.0, 0.0), atol=1e-12)
    np.testing.assert_allclose(points[1], (0.0, 0.0, -1.0), atol=1e-12)
    np.testing.assert_allclose(points[2], (0.0, 0.0, 1.0), atol=1e-12)


def test_sphere_points_are_unit_and_uniform():
    points = lattice_to_sphere(fibonacci_lattice(301))
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-9)
    angles = np.arccos(np.clip(points @ points.T, -1.0, 1.0))
    np.fill_diagonal(angles, np.inf)
    nearest = angles.min(axis=1)
    assert nearest.std() / nearest.mean() < 0.25


# Rotations

def test_pose_rotation_axes():
    r = pose_rotation((0.0, 0.0, 1.0), up_hint=(0.0, 1.0, 0.0))
    np.testing.assert_allclose(r[:, 2], (0.0, 0.0, 1.0))
    assert_proper_rotation(r)


def test_pose_rotation_fallback_at_poles():
    for p in ((0.0, 0.0, 1.0), (0.0, 0.0, -1.0)):
        r = pose_rotation(p)
        np.testing.assert_allclose(r[:, 2], p)
        assert_proper_rotation(r)


def test_all_lattice_rotations_are_proper():
    for p in lattice_to_sphere(fibonacci_lattice(301)):
        r = pose_rotation(p)
        assert_proper_rotation(r)
        np.testing.assert_allclose(r[:, 2], p, atol=1e-12)


# Mirroring

def test_mirror_special_points():
    camera = np.array([0.0, 0.0, 1.0])
    points = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.6, 0.0, -0.8]])
    mirrored = mirror_to_camera_hemisphere(points, camera)
    np.testing.assert_array_equal(mirrored[0], points[0])
    np.testing.assert_allclose(mirrored[1], camera)
    np.testing.assert_allclose(mirrored[2], (0.6, 0.0, 0.8))


def test_mirror_keeps_cardinality_and_hemisphere(rng):
    camera = rng.normal(size=3)
    camera /= np.linalg.norm(camera)
    points = lattice_to_sphere(fibonacci_lattice(301))
    mirrored = mirror_to_camera_hemisphere(points, camera)
    assert mirrored.shape == points.shape
    assert np.all(mirrored @ camera >= -1e-12)
    np.testing.assert_allclose(np.linalg.norm(mirrored, axis=1), 1.0, atol=1e-9)
    # reflection preserves the in-plane component
    in_plane = points - np.outer(points @ camera, camera)
    np.testing.assert_allclose(mirrored - np.outer(mirrored @ camera, camera), in_plane, atol=1e-12)


def test_mirror_needs_unit_camera():
    with pytest.raises(ValueError):
        mirror_to_camera_hemisphere(np.eye(3), (0.0, 0.0, 2.0))


# Ellipse and trajectory

def test_ellipse_spec_invariants():
    with pytest.raises(ValueError):
        EllipseSpec(semi_axes=(0.0, 0.1))
    with pytest.raises(ValueError):
        EllipseSpec(normal=(0.0, 0.0, 2.0))


def test_ellipse_points_lie_on_the_ellipse():
    spec = EllipseSpec(center=(0.1, 0.2, 0.3), semi_axes=(0.1, 0.05), n_points=20)
    points = ellipse_points(spec)
    e1, e2 = spec.basis()
    local = points - np.asarray(spec.center)
    np.testing.assert_allclose(local @ np.asarray(spec.normal), 0.0, atol=1e-12)
    np.testing.assert_allclose((local @ e1 / 0.1) ** 2 + (local @ e2 / 0.05) ** 2, 1.0, atol=1e-12)
    steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    assert steps.min() > 0


def test_arc_length_spacing_is_even():
    spec = EllipseSpec(semi_axes=(0.2, 0.05), n_points=20)
    closed = lambda p: np.vstack([p, p[:1]])
    equal_angle = np.linalg.norm(np.diff(closed(ellipse_points(spec)), axis=0), axis=1)
    arc = np.linalg.norm(np.diff(closed(ellipse_points(spec, arc_length=True)), axis=0), axis=1)
    assert arc.std() / arc.mean() < 0.01
    assert equal_angle.std() / equal_angle.mean() > arc.std() / arc.mean()


def test_default_trajectory_two_passes():
    poses = default_trajectory(301, 20)
    assert len(poses) == 602
    first, second = poses[:301], poses[301:]
    assert [p.pass_index for p in first] == [1] * 301
    assert [p.pass_index for p in second] == [2] * 301
    assert [p.index for p in second] == list(range(301))

    loop = [p.translation for p in first[:20]]
    for i, pose in enumerate(first):
        assert pose.translation == loop[i % 20]
    visits = np.bincount([i % 20 for i in range(301)], minlength=20)
    assert set(visits) <= {math.floor(301 / 20), math.ceil(301 / 20)}

    for a, b in zip(first, second):
        assert_proper_rotation(b.rotation)
        np.testing.assert_allclose(b.rotation, a.rotation @ FLIP, atol=1e-12)
        np.testing.assert_allclose(b.forward, a.forward, atol=1e-12)
        assert a.forward @ np.array([0.0, 0.0, 1.0]) >= -1e-12


def test_single_pass_and_camera_direction():
    poses = default_trajectory(50, 7, camera_dir=(0.0, 3.0, 4.0), second_pass=False)
    assert len(poses) == 50
    camera = np.array([0.0, 0.6, 0.8])
    assert all(p.forward @ camera >= -1e-12 for p in poses)
    with pytest.raises(ValueError):
        default_trajectory(10, 5, camera_dir=(0.0, 0.0, 0.0))


def test_build_trajectory_needs_points():
    with pytest.raises(ValueError):
        build_trajectory(np.empty((0, 3)), EllipseSpec())


def test_pose_rejects_improper_rotation():
    with pytest.raises(ValueError):
        TrajectoryPose(0, (0, 0, 0), np.diag([1.0, 1.0, -1.0]))


def test_trajectory_json_and_csv(tmp_path):
    poses = default_trajectory(12, 5)
    write_trajectory_json(poses, tmp_path / "t.json")
    entries = json.loads((tmp_path / "t.json").read_text())
    assert entries[0].keys() == {"index", "pass", "translation", "rotation"}
    assert len(entries[0]["rotation"]) == 9
    restored = load_trajectory_json(tmp_path / "t.json")
    assert len(restored) == 24
    for a, b in zip(poses, restored):
        assert a.translation == b.translation and a.pass_index == b.pass_index
        np.testing.assert_array_equal(a.rotation, b.rotation)

    write_trajectory_csv(poses, tmp_path / "t.csv")
    with open(tmp_path / "t.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:5] == ["index", "pass", "x", "y", "z"]
    assert len(rows) == 25 and len(rows[1]) == 14


def test_load_trajectory_rejects_garbage(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(DataError):
        load_trajectory_json(path)
