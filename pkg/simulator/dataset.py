"""
On-disk dataset layout shared by simulator output and segmentation input.

    frames/NNNNNN.png            recording with the grasped object
    gt_arm/, gt_object/, gt_gripper/NNNNNN.pgm
    empty/frames/NNNNNN.png      object-free recording at the same poses
    arm_only/frames/NNNNNN.png   object-free recording for harvesting
    gripper/open|closed/NNNNNN.png, gripper/gt/NNNNNN.pgm
    backgrounds/NNNNNN.png, occluders/NNNNNN.png + NNNNNN_mask.pgm
    scene.json, trajectory.json, manifest.json
"""
import json
import logging
from pathlib import Path
from typing import Optional

from errors import DataError
from imaging.io import read_mask, read_png, write_mask, write_png
from imaging.raster import BinaryMask, Frame
from simulator.render import (Session, pose_angles, render_gripper_pair, render_sequence,
                              scene_trajectory)
from simulator.scene import SceneSpec, background_catalog, occluder_catalog, save_scene
from trajectory.waypoints import write_trajectory_json

logger = logging.getLogger(__name__)

FRAMES = "frames"
GT_DIRS = {"arm": "gt_arm", "object": "gt_object", "gripper": "gt_gripper"}
EMPTY = "empty"
ARM_ONLY = "arm_only"
GRIPPER = "gripper"
BACKGROUNDS = "backgrounds"
OCCLUDERS = "occluders"
MANIFEST = "manifest.json"


def frame_name(index: int, suffix: str = ".png") -> str:
    return f"{index:06d}{suffix}"


def write_frames(frames, directory) -> None:
    for i, frame in enumerate(frames):
        write_png(frame, Path(directory) / frame_name(i))


def write_masks(masks, directory) -> None:
    for i, mask in enumerate(masks):
        write_mask(mask, Path(directory) / frame_name(i, ".pgm"))


def read_frames(directory) -> list[Frame]:
    """Read every NNNNNN.png in a directory, in name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"frame directory not found: {directory}")
    return [read_png(p) for p in sorted(directory.glob("*.png"))]


def read_masks(directory) -> list[BinaryMask]:
    """Read every NNNNNN.pgm in a directory, in name order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"mask directory not found: {directory}")
    return [read_mask(p) for p in sorted(directory.glob("*.pgm")) if not p.stem.endswith("_mask")]


def read_occluders(directory) -> list[tuple]:
    """(frame, mask) pairs from NNNNNN.png plus NNNNNN_mask.pgm."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError(f"occluder directory not found: {directory}")
    pairs = []
    for path in sorted(directory.glob("*.png")):
        pairs.append((read_png(path), read_mask(path.with_name(f"{path.stem}_mask.pgm"))))
    return pairs


def write_dataset(scene: SceneSpec, out_dir, extras: bool = True) -> dict:
    """Render a scene and write it in the dataset layout.

    Args:
        scene: Scene description
        out_dir: Output directory
        extras: Also write the object-free recordings, gripper pairs,
            backgrounds and occluders

    Returns:
        The manifest dictionary
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create output directory {out}: {e}") from e

    trajectory = scene_trajectory(scene)
    grasped = render_sequence(scene, trajectory, grasped=True, session=Session.GRASPED)
    write_frames([f for f, _ in grasped], out / FRAMES)
    write_masks([gt.arm_mask for _, gt in grasped], out / GT_DIRS["arm"])
    write_masks([gt.object_mask for _, gt in grasped], out / GT_DIRS["object"])
    write_masks([gt.gripper_mask for _, gt in grasped], out / GT_DIRS["gripper"])
    save_scene(scene, out / "scene.json")
    write_trajectory_json(trajectory, out / "trajectory.json")

    manifest = {
        "object": scene.obj.name,
        "poses": len(trajectory),
        "height": scene.camera.height,
        "width": scene.camera.width,
        "seed": scene.seed,
        "frames": FRAMES,
        "ground_truth": GT_DIRS,
    }

    if extras:
        empty = render_sequence(scene, trajectory, grasped=False, session=Session.PAIRED_EMPTY,
                                exposure=scene.paired_gain())
        write_frames([f for f, _ in empty], out / EMPTY / FRAMES)
        arm_only = render_sequence(scene, trajectory, grasped=False, session=Session.ARM_ONLY)
        write_frames([f for f, _ in arm_only], out / ARM_ONLY / FRAMES)

        angles, _ = pose_angles(scene, trajectory)
        for i, pose in enumerate(trajectory):
            opened, closed, jaws = render_gripper_pair(scene, pose, angles[i], i)
            write_png(opened, out / GRIPPER / "open" / frame_name(i))
            write_png(closed, out / GRIPPER / "closed" / frame_name(i))
            write_mask(jaws, out / GRIPPER / "gt" / frame_name(i, ".pgm"))

        write_frames(background_catalog(scene.camera.height, scene.camera.width), out / BACKGROUNDS)
        for i, (frame, mask) in enumerate(occluder_catalog()):
            write_png(frame, out / OCCLUDERS / frame_name(i))
            write_mask(mask, out / OCCLUDERS / frame_name(i, "_mask.pgm"))

        manifest.update({"empty": f"{EMPTY}/{FRAMES}", "arm_only": f"{ARM_ONLY}/{FRAMES}",
                         "gripper": GRIPPER, "backgrounds": BACKGROUNDS, "occluders": OCCLUDERS})

    (out / MANIFEST).write_text(json.dumps(manifest, indent=2))
    logger.info(f"Wrote dataset with {len(trajectory)} poses to {out}")
    return manifest


class Dataset:
    """Read access to a directory in the dataset layout."""

    def __init__(self, root):
        self.root = Path(root)
        if not (self.root / FRAMES).is_dir():
            raise DataError(f"{self.root} has no {FRAMES}/ directory")

    def has(self, relative: str) -> bool:
        return (self.root / relative).exists()

    def frames(self) -> list[Frame]:
        return read_frames(self.root / FRAMES)

    def ground_truth(self, kind: str = "object") -> list[BinaryMask]:
        return read_masks(self.root / GT_DIRS[kind])

    def empty_frames(self) -> list[Frame]:
        return read_frames(self.root / EMPTY / FRAMES)

    def arm_only_frames(self) -> list[Frame]:
        return read_frames(self.root / ARM_ONLY / FRAMES)

    def gripper_pairs(self) -> list[tuple]:
        """(open, closed) frame pairs, one per pose."""
        opened = read_frames(self.root / GRIPPER / "open")
        closed = read_frames(self.root / GRIPPER / "closed")
        if len(opened) != len(closed):
            raise DataError(f"{len(opened)} open but {len(closed)} closed gripper frames")
        return list(zip(opened, closed))

    def backgrounds(self) -> list[Frame]:
        return read_frames(self.root / BACKGROUNDS)

    def occluders(self) -> list[tuple]:
        return read_occluders(self.root / OCCLUDERS)

    def manifest(self) -> Optional[dict]:
        path = self.root / MANIFEST
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise DataError(f"invalid manifest {path}: {e}") from e
