"""
Painter's-algorithm renderer for the synthetic arm-and-object scene.

Depth order, back to front: background, far jaw, object, near jaw, palm,
then the arm links in chain order. Ground-truth masks are read off the final
owner raster, so they partition the non-background pixels exactly.
"""
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np
from skimage import draw

from errors import RenderError
from imaging.raster import BinaryMask, Frame
from simulator.scene import SceneSpec, object_sprite, procedural_background
from trajectory.waypoints import TrajectoryPose, default_trajectory

logger = logging.getLogger(__name__)


class Owner(IntEnum):
    BACKGROUND = 0
    FAR_JAW = 1
    OBJECT = 2
    NEAR_JAW = 3
    PALM = 4
    LINK = 5  # link k is LINK + k


class Session(IntEnum):
    """Recording sessions; each gets its own noise stream."""

    GRASPED = 0
    PAIRED_EMPTY = 1
    ARM_ONLY = 2
    GRIPPER = 3


@dataclass(frozen=True)
class GroundTruth:
    """Per-frame ground-truth masks."""

    arm_mask: BinaryMask
    object_mask: BinaryMask
    gripper_mask: BinaryMask

    @classmethod
    def from_owner(cls, owner: np.ndarray) -> "GroundTruth":
        gripper = np.isin(owner, (Owner.FAR_JAW, Owner.NEAR_JAW, Owner.PALM))
        return cls(
            arm_mask=BinaryMask(gripper | (owner >= Owner.LINK)),
            object_mask=BinaryMask(owner == Owner.OBJECT),
            gripper_mask=BinaryMask(gripper),
        )


class _Canvas:
    def __init__(self, background: np.ndarray):
        self.rgb = background.astype(np.float64).copy()
        self.owner = np.zeros(background.shape[:2], dtype=np.int16)
        self.shape = background.shape[:2]

    def paint(self, rr: np.ndarray, cc: np.ndarray, colors: np.ndarray, owner: int):
        self.rgb[rr, cc] = colors
        self.owner[rr, cc] = owner


def _shade(color, texture: np.ndarray) -> np.ndarray:
    return np.asarray(color, dtype=np.float64)[None, :] * texture[:, None]


def _paint_bar(canvas: _Canvas, start: np.ndarray, axis: np.ndarray, length: float, width: float,
               color, owner: int):
    """Filled rectangle from start along axis, with stripes fixed to the bar."""
    perp = np.array([-axis[1], axis[0]])
    half = 0.5 * width * perp
    end = start + length * axis
    corners = np.array([start - half, start + half, end + half, end - half])
    rr, cc = draw.polygon(corners[:, 0], corners[:, 1], shape=canvas.shape)
    if rr.size == 0:
        return
    along = (rr - start[0]) * axis[0] + (cc - start[1]) * axis[1]
    texture = 1.0 + 0.1 * np.sin(2.0 * np.pi * along / 10.0)
    canvas.paint(rr, cc, _shade(color, texture), owner)


def _paint_joint(canvas: _Canvas, center: np.ndarray, radius: float, axis: np.ndarray, color, owner: int):
    rr, cc = draw.disk((center[0], center[1]), radius, shape=canvas.shape)
    if rr.size == 0:
        return
    angle = np.arctan2(cc - center[1], rr - center[0]) - math.atan2(axis[1], axis[0])
    texture = 1.0 + 0.08 * np.cos(4.0 * angle)
    canvas.paint(rr, cc, _shade(color, texture), owner)


def _paint_sprite(canvas: _Canvas, pixels: np.ndarray, mask: np.ndarray, center: np.ndarray,
                  axis: np.ndarray, squash: float, owner: int):
    """Nearest-neighbor sprite placement; sprite rows run along axis, squashed by `squash`."""
    h, w = mask.shape
    perp = np.array([-axis[1], axis[0]])
    reach = math.hypot(h, w) / 2.0 + 2.0
    r0, r1 = int(max(0, math.floor(center[0] - reach))), int(min(canvas.shape[0], math.ceil(center[0] + reach) + 1))
    c0, c1 = int(max(0, math.floor(center[1] - reach))), int(min(canvas.shape[1], math.ceil(center[1] + reach) + 1))
    if r0 >= r1 or c0 >= c1:
        return
    rows, cols = np.mgrid[r0:r1, c0:c1]
    dr, dc = rows - center[0], cols - center[1]
    sr = np.rint((h - 1) / 2.0 + (dr * axis[0] + dc * axis[1]) / squash).astype(np.int64)
    sc = np.rint((w - 1) / 2.0 + (dr * perp[0] + dc * perp[1])).astype(np.int64)
    inside = (sr >= 0) & (sr < h) & (sc >= 0) & (sc < w)
    hit = np.zeros_like(inside)
    hit[inside] = mask[sr[inside], sc[inside]]
    rr, cc = rows[hit], cols[hit]
    canvas.paint(rr, cc, pixels[sr[hit], sc[hit]].astype(np.float64), owner)


def _elbow(shoulder: np.ndarray, wrist: np.ndarray, l1: float, l2: float, index: int) -> np.ndarray:
    delta = wrist - shoulder
    d = float(np.hypot(*delta))
    if d > l1 + l2 or d < abs(l1 - l2) or d == 0:
        raise RenderError(f"wrist at {tuple(np.round(wrist, 1))} is out of the arm's reach", index)
    along = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d)
    height = math.sqrt(max(l1 * l1 - along * along, 0.0))
    base = shoulder + along * delta / d
    normal = np.array([-delta[1], delta[0]]) / d
    candidates = [base + height * normal, base - height * normal]
    # elbow up: the solution higher in the image
    return min(candidates, key=lambda p: p[0])


def pose_angles(scene: SceneSpec, trajectory: Sequence[TrajectoryPose]) -> tuple:
    """In-plane sprite angles and foreshortening factors for a trajectory.

    The in-plane angle is the twist of each pose about the viewing axis,
    unwrapped along the sequence and scaled by scene.spin_gain.
    """
    right = np.asarray(scene.camera.image_right, dtype=np.float64)
    up = np.asarray(scene.camera.image_up, dtype=np.float64)
    view = np.asarray(scene.camera.direction, dtype=np.float64)
    twists = np.array([math.atan2(p.rotation[:, 0] @ up, p.rotation[:, 0] @ right) for p in trajectory])
    angles = scene.spin_gain * np.unwrap(twists) if len(twists) else twists
    squash = np.array([max(abs(float(p.forward @ view)), scene.min_foreshortening) for p in trajectory])
    return angles, squash


def scene_trajectory(scene: SceneSpec) -> list[TrajectoryPose]:
    """Single-pass trajectory on the scene's ellipse, mirrored toward its camera."""
    return default_trajectory(n=scene.poses, camera_dir=scene.camera.direction, ellipse=scene.ellipse,
                              second_pass=False)


class Renderer:
    """Renders poses of one scene; background and sprite are built once."""

    def __init__(self, scene: SceneSpec):
        self.scene = scene
        self.background = procedural_background(scene.camera.height, scene.camera.width, scene.background_seed)
        self.sprite, self.sprite_mask = object_sprite(scene.obj)
        self.ppm = scene.camera.pixels_per_meter

    def _jaw_gap(self, grasped: bool) -> float:
        arm = self.scene.arm
        if grasped:
            return self.sprite_mask.shape[1] - 2.0 * arm.jaw_overlap * self.ppm
        return arm.grasp_width * self.ppm

    def render(self, pose: TrajectoryPose, angle: float, squash: float, grasped: bool, index: int,
               session: Session, exposure: float = 1.0, jaw_offset: float = 0.0) -> tuple:
        """Render one pose; see draw() for the arguments.

        Returns:
            (Frame, GroundTruth)
        """
        frame, owner = self.draw(pose, angle, squash, grasped, index, session, exposure, jaw_offset)
        return frame, GroundTruth.from_owner(owner)

    def draw(self, pose: TrajectoryPose, angle: float, squash: float, grasped: bool, index: int,
             session: Session, exposure: float = 1.0, jaw_offset: float = 0.0) -> tuple:
        """Render one pose.

        Args:
            pose: Waypoint; its translation is the tool center between the jaws
            angle: In-plane gripper angle in radians
            squash: Foreshortening of the object along the gripper axis
            grasped: Draw the object between the jaws
            index: Pose index, used in errors and the noise stream
            session: Recording session of the noise stream
            exposure: Global intensity gain, or an (H, W) gain field
            jaw_offset: Extra outward travel of each jaw in pixels

        Returns:
            (Frame, owner raster of Owner values)
        """
        scene, arm, ppm = self.scene, self.scene.arm, self.ppm
        tcp = np.array(scene.camera.project(pose.translation))
        if not scene.camera.in_frame(tcp):
            raise RenderError("end effector projects outside the frame", index)

        axis = np.array([math.cos(angle), math.sin(angle)])  # (row, col), pointing out of the palm
        perp = np.array([-axis[1], axis[0]])
        jaw_len, jaw_w = arm.jaw_length * ppm, arm.jaw_width * ppm
        gap = self._jaw_gap(grasped) + 2.0 * jaw_offset
        palm_start = tcp - axis * (0.5 * jaw_len)
        wrist = palm_start - axis * (arm.palm_length * ppm)
        palm_w = max(arm.palm_width * ppm, self._jaw_gap(grasped) + 2.0 * (jaw_w + arm.jaw_amplitude * ppm))

        canvas = _Canvas(self.background.pixels)
        for side, owner in ((-1.0, Owner.FAR_JAW), (None, Owner.OBJECT), (1.0, Owner.NEAR_JAW)):
            if owner == Owner.OBJECT:
                if grasped:
                    # top edge of the object rests against the palm
                    center = palm_start + axis * (0.5 * self.sprite_mask.shape[0] * squash)
                    _paint_sprite(canvas, self.sprite, self.sprite_mask, center, axis, squash, owner)
                continue
            start = palm_start + side * perp * (0.5 * gap + 0.5 * jaw_w)
            _paint_bar(canvas, start, axis, jaw_len, jaw_w, arm.gripper_color, owner)
        _paint_bar(canvas, wrist, axis, arm.palm_length * ppm, palm_w, arm.gripper_color, Owner.PALM)

        joints = [np.array(scene.camera.project(arm.shoulder))]
        lengths = [l * ppm for l in arm.link_lengths]
        joints.append(_elbow(joints[0], wrist, lengths[0], sum(lengths[1:]), index))
        # links past the second are rigid extensions toward the wrist
        remaining = wrist - joints[1]
        total = sum(lengths[1:])
        for length in lengths[1:]:
            joints.append(joints[-1] + remaining * (length / total))
        for k, (start, end) in enumerate(zip(joints[:-1], joints[1:])):
            delta = end - start
            length = float(np.hypot(*delta))
            direction = delta / length if length > 0 else axis
            color = arm.link_colors[k]
            owner = Owner.LINK + k
            _paint_bar(canvas, start, direction, length, arm.link_widths[k] * ppm, color, owner)
            _paint_joint(canvas, start, 0.5 * arm.link_widths[k] * ppm, direction, color, owner)

        rng = np.random.default_rng([scene.seed, int(session), index])
        gain = np.asarray(exposure, dtype=np.float64)
        rgb = canvas.rgb * (gain[..., None] if gain.ndim == 2 else gain)
        if scene.noise_sigma > 0:
            rgb = rgb + rng.normal(0.0, scene.noise_sigma, rgb.shape)
        return Frame(np.clip(np.rint(rgb), 0, 255)), canvas.owner


def render_sequence(scene: SceneSpec, trajectory: Sequence[TrajectoryPose], grasped: bool = True,
                    session: Session = Session.GRASPED, exposure=None) -> list[tuple]:
    """Render every pose of a trajectory.

    Args:
        scene: Scene description
        trajectory: Nonempty list of poses
        grasped: Draw the object in the gripper
        session: Noise stream of the recording
        exposure: Intensity gain or (H, W) gain field (default scene.exposure)

    Returns:
        (Frame, GroundTruth) per pose

    Raises:
        RenderError: naming the first pose that cannot be rendered
    """
    if not trajectory:
        raise ValueError("render_sequence needs a nonempty trajectory")
    exposure = scene.exposure if exposure is None else exposure
    renderer = Renderer(scene)
    angles, squash = pose_angles(scene, trajectory)
    out = [
        renderer.render(pose, angles[i], squash[i], grasped, i, session, exposure)
        for i, pose in enumerate(trajectory)
    ]
    logger.info(f"Rendered {len(out)} frames ({session.name.lower()}, grasped={grasped})")
    return out


def render_gripper_pair(scene: SceneSpec, pose: TrajectoryPose, angle: float = 0.0, index: int = 0,
                        amplitude: Optional[float] = None) -> tuple:
    """Open and closed gripper at a fixed pose, without an object.

    Args:
        scene: Scene description
        pose: Pose to render
        angle: In-plane gripper angle of the pose
        index: Pose index
        amplitude: Outward jaw travel in pixels (default scene.arm.jaw_amplitude)

    Returns:
        (open_frame, closed_frame, gt_jaw_mask); the mask is the symmetric
        difference of the open and closed jaw pixels
    """
    if amplitude is None:
        amplitude = scene.arm.jaw_amplitude * scene.camera.pixels_per_meter
    renderer = Renderer(scene)
    closed, owner_closed = renderer.draw(pose, angle, 1.0, False, index, Session.GRIPPER, scene.exposure)
    opened, owner_open = renderer.draw(pose, angle, 1.0, False, index, Session.GRIPPER, scene.exposure,
                                       jaw_offset=amplitude)
    jaws = (Owner.FAR_JAW, Owner.NEAR_JAW)
    return opened, closed, BinaryMask(np.isin(owner_open, jaws) ^ np.isin(owner_closed, jaws))
