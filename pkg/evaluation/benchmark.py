"""
Simulator benchmark: renders every object of the catalog along one
trajectory, prepares the self-supervised arm models and gripper spots once,
and caches the per-frame motion masks so methods and ablations reuse them.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from baselines.change_detection import CdRgbConfig, cd_of, cd_rgb
from config import config
from errors import DataError
from evaluation.metrics import MetricsReport, evaluate_sequence, method_ordering
from flow_segmentation.motion import segment_sequence
from imaging.raster import Frame
from object_segmentation.pipeline import PostProcessConfig, object_candidates, postprocess
from optical_flow.field import FlowParams
from robot_model.appearance import fit_appearance, fit_appearance_weighted, predict_robot_mask
from robot_model.compose import ComposeConfig, build_training_set
from robot_model.gripper import detect_spots
from robot_model.harvest import harvest_arm_masks_indexed
from simulator.dataset import Dataset
from simulator.render import Session, pose_angles, render_gripper_pair, render_sequence, scene_trajectory
from simulator.scene import (SceneSpec, background_catalog, default_scene, load_scene, object_catalog,
                             occluder_catalog)

logger = logging.getLogger(__name__)

METHODS = ("Ours", "CD_OF", "CD_RGB")

# Least mIoU gap between neighbouring methods for the ordering to hold
ORDERING_MARGIN = 0.05


@dataclass(frozen=True)
class BenchmarkConfig:
    """Size and solver settings of the simulator benchmark.

    flow, compose and base_scene pin the solver, composition and scene
    settings; when None they come from the environment configuration.
    """

    objects: int = 10
    poses: int = 60
    seed: int = 7
    flow_iterations: int = 40
    flow_levels: int = 4
    train_samples: int = 200
    workers: int = config.WORKERS
    flow: Optional[FlowParams] = None
    compose: Optional[ComposeConfig] = None
    base_scene: Optional[SceneSpec] = None

    def __post_init__(self):
        if self.objects < 1 or self.poses < 3:
            raise ValueError("the benchmark needs at least one object and three poses")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @classmethod
    def from_config(cls, **overrides) -> "BenchmarkConfig":
        values = {"poses": config.SIM_POSES, "seed": config.SIM_SEED, "workers": config.WORKERS}
        values.update(overrides)
        return cls(**values)

    def flow_params(self) -> FlowParams:
        base = self.flow or FlowParams.from_config()
        return replace(base, iterations_per_level=self.flow_iterations, pyramid_levels=self.flow_levels)

    def compose_config(self) -> ComposeConfig:
        base = self.compose or ComposeConfig.from_config()
        return replace(base, count=self.train_samples, seed=self.seed)

    def scene(self) -> SceneSpec:
        if self.base_scene is not None:
            return replace(self.base_scene, poses=self.poses, seed=self.seed)
        return default_scene(poses=self.poses, seed=self.seed)

    def to_dict(self) -> dict:
        """Every setting the results depend on, resolved; workers are left out."""
        return {
            "objects": self.objects,
            "poses": self.poses,
            "seed": self.seed,
            "flow_iterations": self.flow_iterations,
            "flow_levels": self.flow_levels,
            "train_samples": self.train_samples,
            "flow": self.flow_params().to_dict(),
            "compose": self.compose_config().to_dict(),
            "base_scene": self.scene().to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "BenchmarkConfig":
        values = dict(data)
        if values.get("flow") is not None:
            values["flow"] = FlowParams.from_dict(values["flow"])
        if values.get("compose") is not None:
            values["compose"] = ComposeConfig.from_dict(values["compose"])
        if values.get("base_scene") is not None:
            values["base_scene"] = SceneSpec.from_dict(values["base_scene"])
        values.update(overrides)
        return cls(**values)


@dataclass
class PreparedObject:
    """Grasped recording of one object with cached motion masks."""

    name: str
    frames: list
    gt_object: list
    gt_arm: list
    motion: list


@dataclass
class BenchmarkData:
    """Everything the methods and ablations consume."""

    scene: SceneSpec
    spots: dict
    models: dict  # "ours", "no_weight", "no_occluder"
    empty_frames: list
    empty_motion: list
    objects: list = field(default_factory=list)
    robot_masks: dict = field(default_factory=dict)

    def robot_masks_for(self, model_name: str, obj: PreparedObject) -> list:
        """Predicted robot masks of an object's frames, computed once per model."""
        key = (model_name, obj.name)
        if key not in self.robot_masks:
            model = self.models[model_name]
            self.robot_masks[key] = [predict_robot_mask(model, f) for f in obj.frames]
        return self.robot_masks[key]


def detect_pose_spots(scene: SceneSpec, trajectory, params: FlowParams, workers: int = 1) -> dict:
    """Render the open/close pair of every pose and detect its gripper spot."""
    angles, _ = pose_angles(scene, trajectory)
    pairs = []
    for i, pose in enumerate(trajectory):
        opened, closed, _ = render_gripper_pair(scene, pose, angles[i], i)
        pairs.append((opened, closed))
    return detect_spots(pairs, params, workers)


def train_arm_models(arm_frames: list[Frame], spots: dict, backgrounds: list[Frame], occluders: list[tuple],
                     params: FlowParams, compose_cfg: ComposeConfig, workers: int = 1) -> dict:
    """Harvest arm masks and fit the three appearance-model variants."""
    harvested = harvest_arm_masks_indexed(arm_frames, params, workers=workers)
    cuts = [(frame, mask, spots[i]) for i, frame, mask in harvested if i in spots]
    samples = build_training_set(cuts, backgrounds, occluders, compose_cfg)
    return {
        "ours": fit_appearance_weighted(samples, use_weights=True),
        "no_weight": fit_appearance_weighted(samples, use_weights=False),
        "no_occluder": fit_appearance([(frame, mask) for _, frame, mask in harvested]),
    }


def prepare_benchmark(cfg: Optional[BenchmarkConfig] = None) -> BenchmarkData:
    """Render, harvest, train and cache motion masks for the whole benchmark."""
    cfg = cfg or BenchmarkConfig.from_config()
    params = cfg.flow_params()
    scene = cfg.scene()
    trajectory = scene_trajectory(scene)

    logger.info("Detecting gripper spots")
    spots = detect_pose_spots(scene, trajectory, params, cfg.workers)

    logger.info("Training arm appearance models")
    arm_only = [f for f, _ in render_sequence(scene, trajectory, grasped=False, session=Session.ARM_ONLY)]
    models = train_arm_models(arm_only, spots, background_catalog(scene.camera.height, scene.camera.width),
                              occluder_catalog(), params, cfg.compose_config(), cfg.workers)

    empty = [f for f, _ in render_sequence(scene, trajectory, grasped=False, session=Session.PAIRED_EMPTY,
                                           exposure=scene.paired_gain())]
    data = BenchmarkData(scene=scene, spots=spots, models=models, empty_frames=empty,
                         empty_motion=segment_sequence(empty, params, cfg.workers))

    def prepare(obj) -> PreparedObject:
        rendered = render_sequence(scene.with_object(obj), trajectory, grasped=True, session=Session.GRASPED)
        frames = [f for f, _ in rendered]
        logger.info(f"Segmenting motion of {obj.name}")
        return PreparedObject(
            name=obj.name,
            frames=frames,
            gt_object=[gt.object_mask for _, gt in rendered],
            gt_arm=[gt.arm_mask for _, gt in rendered],
            motion=segment_sequence(frames, params, cfg.workers),
        )

    data.objects = [prepare(obj) for obj in object_catalog(cfg.objects)]
    return data


def prepare_from_dataset(root, cfg: Optional[BenchmarkConfig] = None) -> BenchmarkData:
    """Benchmark data for one recording in the dataset layout.

    The recording needs object ground truth, the object-free paired and
    arm-only recordings, gripper pairs, backgrounds and occluders.
    """
    cfg = cfg or BenchmarkConfig.from_config()
    params = cfg.flow_params()
    dataset = Dataset(root)
    scene = load_scene(dataset.root / "scene.json") if dataset.has("scene.json") else cfg.scene()

    logger.info(f"Preparing recording {dataset.root}")
    spots = detect_spots(dataset.gripper_pairs(), params, cfg.workers)
    models = train_arm_models(dataset.arm_only_frames(), spots, dataset.backgrounds(), dataset.occluders(),
                              params, cfg.compose_config(), cfg.workers)
    frames = dataset.frames()
    empty = dataset.empty_frames()
    if len(empty) != len(frames):
        raise DataError(f"{len(empty)} object-free frames for {len(frames)} grasped frames")
    data = BenchmarkData(scene=scene, spots=spots, models=models, empty_frames=empty,
                         empty_motion=segment_sequence(empty, params, cfg.workers))
    data.objects = [PreparedObject(
        name=(dataset.manifest() or {}).get("object", dataset.root.name),
        frames=frames,
        gt_object=dataset.ground_truth("object"),
        gt_arm=dataset.ground_truth("arm") if dataset.has("gt_arm") else [],
        motion=segment_sequence(frames, params, cfg.workers),
    )]
    return data


def ours_masks(data: BenchmarkData, obj: PreparedObject, pp: PostProcessConfig, model: str = "ours") -> list:
    robot = data.robot_masks_for(model, obj)
    return [
        postprocess(object_candidates(m, r, pp), data.spots.get(i), pp)
        for i, (m, r) in enumerate(zip(obj.motion, robot))
    ]


def cd_of_masks(data: BenchmarkData, obj: PreparedObject, pp: PostProcessConfig) -> list:
    # plain motion masks; the object-free recording cancels the arm instead
    return [
        cd_of(m.combine(pp.flow_mode), e.combine(pp.flow_mode), data.spots.get(i), pp)
        for i, (m, e) in enumerate(zip(obj.motion, data.empty_motion))
    ]


def cd_rgb_masks(data: BenchmarkData, obj: PreparedObject, cd_cfg: CdRgbConfig) -> list:
    return [cd_rgb(f, e, cd_cfg) for f, e in zip(obj.frames, data.empty_frames)]


def run_method_comparison(data: BenchmarkData, pp: Optional[PostProcessConfig] = None,
                          cd_cfg: Optional[CdRgbConfig] = None) -> dict:
    """Reports of the full method and both change-detection baselines.

    Returns:
        {method name: MetricsReport}; the "Ours" report's meta holds the
        ordering flag Ours > CD_OF > CD_RGB, each by at least ORDERING_MARGIN
    """
    pp = pp or PostProcessConfig.from_config()
    cd_cfg = cd_cfg or CdRgbConfig.from_config()
    reports = {name: MetricsReport(method=name, meta={"flow_mode": pp.flow_mode.value}) for name in METHODS}
    for obj in data.objects:
        predictions = {
            "Ours": ours_masks(data, obj, pp),
            "CD_OF": cd_of_masks(data, obj, pp),
            "CD_RGB": cd_rgb_masks(data, obj, cd_cfg),
        }
        for name, preds in predictions.items():
            reports[name].add(evaluate_sequence(preds, obj.gt_object, name=obj.name))
    ordered = method_ordering(reports, METHODS, margin=ORDERING_MARGIN)
    reports["Ours"].meta["ordering_holds"] = ordered
    reports["Ours"].meta["ordering_margin"] = ORDERING_MARGIN
    for name in METHODS:
        logger.info(f"{name}: mean mIoU {100 * reports[name].averages['miou']:.2f}")
    return reports

