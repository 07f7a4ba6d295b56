import json

import numpy as np
import pytest

from errors import ConfigError, DimensionMismatchError
from evaluation.metrics import mask_metrics
from flow_segmentation.motion import FlowMaskMode, MotionMasks, segment_sequence
from imaging.raster import BinaryMask, Frame
from object_segmentation.pipeline import (
    PostProcessConfig,
    nimply,
    postprocess,
    postprocess_with_stats,
    segment_object,
    segment_sequence_objects,
    write_sidecar,
)
from optical_flow.field import FlowParams
from robot_model.appearance import fit_appearance
from robot_model.gripper import GripperSpot
from tests.helpers import moving_square_frames, square_mask

REFERENCE = (414, 736)
FAST = FlowParams(iterations_per_level=30)
BENCH = FlowParams(iterations_per_level=40, pyramid_levels=4)


def point_spot(shape: tuple, row: int, col: int) -> GripperSpot:
    bits = np.zeros(shape, dtype=bool)
    bits[row, col] = True
    return GripperSpot.from_mask(0, BinaryMask(bits))


def blocks(shape: tuple, *boxes) -> BinaryMask:
    """Mask with one rectangle per (top, left, height, width) box."""
    bits = np.zeros(shape, dtype=bool)
    for top, left, h, w in boxes:
        bits[top:top + h, left:left + w] = True
    return BinaryMask(bits)


def gray_model(robot_fraction: float):
    """Model trained on one flat gray frame: every color has posterior = prior."""
    frame = Frame.blank(10, 10, (120, 120, 120))
    bits = np.zeros(100, dtype=bool)
    bits[: int(round(robot_fraction * 100))] = True
    return fit_appearance([(frame, BinaryMask(bits.reshape(10, 10)))])


def test_nimply():
    motion = blocks((6, 6), (0, 0, 3, 6))
    robot = blocks((6, 6), (0, 0, 6, 3))
    assert nimply(motion, robot) == blocks((6, 6), (0, 3, 3, 3))
    with pytest.raises(DimensionMismatchError):
        nimply(motion, BinaryMask.empty(6, 7))


def test_thresholds_scale_with_resolution():
    cfg = PostProcessConfig()
    assert cfg.thresholds(REFERENCE) == pytest.approx((100.0, 2500.0))
    assert cfg.thresholds((207, 368)) == pytest.approx((50.0, 625.0))
    fixed = PostProcessConfig(scale_to_resolution=False)
    assert fixed.thresholds((207, 368)) == (100.0, 2500.0)


def test_area_filter_at_reference_resolution():
    raw = blocks(REFERENCE, (100, 100, 40, 60), (200, 300, 40, 65))
    mask = postprocess(raw, None, PostProcessConfig(distance_filter=False))
    assert mask == blocks(REFERENCE, (200, 300, 40, 65))
    assert mask.area == 2600


def test_distance_filter_is_strict():
    spot = point_spot(REFERENCE, 200, 100)
    near = (198, 199, 5, 5)  # 99 px from the spot
    far = (301, 98, 5, 5)  # 101 px from the spot
    cfg = PostProcessConfig(area_filter=False)
    mask, stats = postprocess_with_stats(blocks(REFERENCE, near, far), spot, cfg, frame_id=4)
    assert mask == blocks(REFERENCE, near)
    assert stats == {
        "frame_id": 4,
        "component_count_raw": 2,
        "component_count_final": 1,
        "area_final": 25,
        "spot_distance": pytest.approx(99.0),
    }


def test_closest_component_beyond_limit():
    spot = point_spot(REFERENCE, 200, 100)
    raw = blocks(REFERENCE, (301, 98, 5, 5), (200, 300, 5, 5))
    strict = PostProcessConfig(area_filter=False)
    assert postprocess(raw, spot, strict).is_empty()
    lenient = PostProcessConfig(area_filter=False, lenient_closest=True)
    assert postprocess(raw, spot, lenient) == blocks(REFERENCE, (301, 98, 5, 5))


def test_border_components_are_removed():
    raw = blocks((40, 40), (0, 10, 5, 5), (20, 20, 5, 5))
    cfg = PostProcessConfig(distance_filter=False, area_filter=False)
    assert postprocess(raw, None, cfg) == blocks((40, 40), (20, 20, 5, 5))
    keep = PostProcessConfig.disabled()
    assert postprocess(raw, None, keep) == raw


def test_filters_run_border_first():
    spot = point_spot((40, 40), 2, 2)
    # the border component is closest to the spot but is gone before the distance cut
    raw = blocks((40, 40), (0, 0, 4, 4), (30, 30, 4, 4))
    cfg = PostProcessConfig(area_filter=False, lenient_closest=True, gripper_max_dist=5.0,
                            scale_to_resolution=False)
    assert postprocess(raw, spot, cfg) == blocks((40, 40), (30, 30, 4, 4))


def test_disabled_filters_are_identity(rng):
    raw = BinaryMask(rng.random((50, 60)) < 0.3)
    assert postprocess(raw, None, PostProcessConfig.disabled()) == raw


def test_distance_filter_needs_a_spot():
    with pytest.raises(ConfigError):
        postprocess(BinaryMask.empty(5, 5), None, PostProcessConfig())


def test_config_invariants():
    with pytest.raises(ConfigError):
        PostProcessConfig(gripper_max_dist=0)
    with pytest.raises(ConfigError):
        PostProcessConfig(min_area=-1)
    cfg = PostProcessConfig(flow_mode="intersection")
    assert cfg.flow_mode is FlowMaskMode.INTERSECTION
    assert cfg.with_mode("forward").flow_mode is FlowMaskMode.FORWARD_ONLY
    assert cfg.to_dict()["flow_mode"] == "intersection"
    restored = PostProcessConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert restored == cfg and restored.static_suppression


def test_segment_object_matches_motion_when_no_robot():
    frames = moving_square_frames(3)
    model = fit_appearance([(Frame.blank(8, 8, (30, 60, 200)), square_mask((8, 8), 0, 0, 4))])
    cfg = PostProcessConfig.disabled()
    mask = segment_object(frames[0], frames[1], frames[2], model, None, FAST, cfg)
    expected = segment_sequence(frames, FAST)[1].combine(FlowMaskMode.UNION, drop_static=True)
    assert mask == expected
    assert not mask.is_empty()


def test_segment_object_rejects_mismatched_neighbors():
    model = gray_model(0.3)
    with pytest.raises(DimensionMismatchError):
        segment_object(Frame.blank(8, 8), Frame.blank(8, 9), None, model, None, FAST,
                       PostProcessConfig.disabled())


def test_robot_pixels_are_subtracted():
    frames = [Frame.blank(30, 30, (120, 120, 120))] * 2
    motion = [MotionMasks(square_mask((30, 30), 5, 5, 10), None), MotionMasks(None, square_mask((30, 30), 5, 5, 10))]
    cfg = PostProcessConfig.disabled()

    everything_robot = gray_model(0.7)
    results = segment_sequence_objects(frames, everything_robot, None, cfg=cfg, motion=motion)
    assert all(mask.is_empty() for mask, _ in results)

    nothing_robot = gray_model(0.3)
    results = segment_sequence_objects(frames, nothing_robot, None, cfg=cfg, motion=motion)
    assert [stats["frame_id"] for _, stats in results] == [0, 1]
    assert all(mask == square_mask((30, 30), 5, 5, 10) for mask, _ in results)


def test_sequence_spots_by_pose():
    frames = [Frame.blank(30, 30, (120, 120, 120))] * 2
    motion = [MotionMasks(square_mask((30, 30), 5, 5, 4), None)] * 2
    spots = {0: point_spot((30, 30), 6, 6), 1: point_spot((30, 30), 28, 28)}
    cfg = PostProcessConfig(area_filter=False, gripper_max_dist=5.0, scale_to_resolution=False)
    results = segment_sequence_objects(frames, gray_model(0.3), spots, cfg=cfg, motion=motion)
    assert results[0][0].area == 16
    assert results[1][0].is_empty()
    assert results[1][1]["spot_distance"] is None

    with pytest.raises(ValueError):
        segment_sequence_objects(frames, gray_model(0.3), spots, cfg=cfg, motion=motion[:1])


def test_write_sidecar(tmp_path):
    path = tmp_path / "masks" / "000001.json"
    write_sidecar({"frame_id": 1, "area_final": 0}, path)
    assert '"area_final": 0' in path.read_text()


@pytest.mark.slow
def test_motion_minus_true_arm_is_the_object(sim_recording):
    _, _, _, grasped = sim_recording
    masks = segment_sequence([f for f, _ in grasped], BENCH)
    scores = [
        mask_metrics(nimply(m.combine(FlowMaskMode.UNION, drop_static=True), gt.arm_mask), gt.object_mask)[0]
        for m, (_, gt) in zip(masks[1:-1], grasped[1:-1])
    ]
    assert np.mean(scores) >= 0.7
