#!/usr/bin/env python3
"""
Command-line entry point for the grasped-object segmentation toolkit.

Usage:
    python cli.py simulate [scene.json] --out DIR
    python cli.py harvest --dataset DIR --out DIR
    python cli.py compose --arm-masks DIR --backgrounds DIR --occluders DIR --out DIR
    python cli.py segment --dataset DIR --method ours --out DIR
    python cli.py evaluate --pred DIR --gt DIR --report report.json
    python cli.py ablate --out ablation.csv
    python cli.py trajectory --out trajectory.json
    python cli.py benchmark --out DIR
    python cli.py --config DIR/resolved_config.json

Every command writes resolved_config.json next to its outputs: the arguments
and the resolved settings. Passing that file back with --config reproduces
the run, output paths included. Exit codes: 0 success, 2 usage or
configuration error, 3 data error.
"""
import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from config import config
from errors import ConfigError, DataError

logger = logging.getLogger(__name__)

RESOLVED_CONFIG = "resolved_config.json"

# Arguments that never go into the recorded argument list
_NOT_RECORDED = {"command", "handler", "config", "resolved"}


def _recorded(args, key: str) -> Optional[dict]:
    """Settings block `key` of the replayed resolved_config.json, if any."""
    return (getattr(args, "resolved", None) or {}).get(key)


def _flow_params(args):
    from optical_flow.field import FlowParams

    recorded = _recorded(args, "flow")
    params = FlowParams.from_dict(recorded) if recorded else FlowParams.from_config()
    if getattr(args, "flow_iterations", None):
        params = replace(params, iterations_per_level=args.flow_iterations)
    return params


def _camera_dir(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"camera direction must be three comma-separated numbers, got '{text}'") from None
    if len(values) != 3:
        raise ConfigError(f"camera direction must have three components, got {len(values)}")
    if all(v == 0 for v in values):
        raise ConfigError("camera direction must be a nonzero vector")
    return values


def _write_resolved(args, out_dir, **settings) -> Path:
    """Record the arguments and the resolved settings of the run next to its outputs.

    Args:
        args: Parsed arguments
        out_dir: Directory receiving resolved_config.json
        settings: Settings objects with to_dict(), stored under their keyword
    """
    values = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
    document = {
        "command": args.command,
        "arguments": values,
        "resolved": {key: value.to_dict() for key, value in settings.items()},
    }
    path = Path(out_dir) / RESOLVED_CONFIG
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True))
    return path


def _postprocess_config(args):
    from flow_segmentation.motion import FlowMaskMode
    from object_segmentation.pipeline import PostProcessConfig

    recorded = _recorded(args, "postprocess")
    base = PostProcessConfig.from_dict(recorded) if recorded else PostProcessConfig.from_config()
    overrides = {
        "flow_mode": FlowMaskMode.parse(args.flow_mode),
        "border_deletion": not args.no_border_del,
        "lenient_closest": args.lenient_closest,
    }
    if args.grip_dist is not None:
        overrides["gripper_max_dist"] = args.grip_dist
    if args.min_area is not None:
        overrides["min_area"] = args.min_area
    return replace(base, **overrides)


def _cd_rgb_config(args):
    from baselines.change_detection import CdRgbConfig

    recorded = _recorded(args, "cd_rgb")
    return CdRgbConfig.from_dict(recorded) if recorded else CdRgbConfig.from_config()


def _compose_config(args, **overrides):
    from robot_model.compose import ComposeConfig

    recorded = _recorded(args, "compose")
    base = ComposeConfig.from_dict(recorded) if recorded else ComposeConfig.from_config()
    return replace(base, **overrides)


def _min_fraction(args) -> float:
    if getattr(args, "min_fraction", None) is not None:
        return args.min_fraction
    recorded = _recorded(args, "harvest")
    return recorded["min_fraction"] if recorded else config.HARVEST_MIN_FRACTION


class _Settings:
    """Plain settings block for resolved_config.json."""

    def __init__(self, **values):
        self.values = values

    def to_dict(self) -> dict:
        return dict(self.values)


def _record(report, args, kind, run_config: dict) -> None:
    """Store a report in the run ledger when one is configured."""
    url = getattr(args, "db", None) or config.RESULTS_DATABASE_URL
    if not url:
        return
    from results.service import record_report

    run = record_report(report, url=url, name=getattr(args, "name", None), kind=kind, run_config=run_config)
    logger.info(f"Recorded run {run.id} ({report.method}) in {url}")


# Subcommands

def cmd_simulate(args) -> int:
    from simulator.dataset import write_dataset
    from simulator.scene import SceneSpec, default_scene, load_scene, object_catalog

    recorded = _recorded(args, "scene")
    if recorded:
        scene = SceneSpec.from_dict(recorded)
    else:
        scene = load_scene(args.scene) if args.scene else default_scene()
    overrides = {}
    if args.poses is not None:
        overrides["poses"] = args.poses
    if args.seed is not None:
        overrides["seed"] = args.seed
    scene = replace(scene, **overrides)
    if args.object is not None:
        catalog = object_catalog(max(args.object + 1, 10))
        scene = scene.with_object(catalog[args.object])

    write_dataset(scene, args.out, extras=not args.no_extras)
    _write_resolved(args, args.out, scene=scene)
    print(f"Wrote {scene.poses} poses of '{scene.obj.name}' to {args.out}")
    return 0


def cmd_harvest(args) -> int:
    from imaging.io import write_mask, write_png
    from robot_model.gripper import detect_spots, write_spots
    from robot_model.harvest import harvest_arm_masks_indexed
    from simulator.dataset import Dataset, frame_name

    dataset = Dataset(args.dataset)
    params = _flow_params(args)
    min_fraction = _min_fraction(args)
    spots = detect_spots(dataset.gripper_pairs(), params)
    harvested = harvest_arm_masks_indexed(dataset.arm_only_frames(), params, min_fraction=min_fraction)

    out = Path(args.out)
    for index, frame, mask in harvested:
        write_png(frame, out / "frames" / frame_name(index))
        write_mask(mask, out / "masks" / frame_name(index, ".pgm"))
    write_spots(spots, out / "spots")
    _write_resolved(args, out, flow=params, harvest=_Settings(min_fraction=min_fraction))
    print(f"Harvested {len(harvested)} arm masks and {len(spots)} gripper spots into {out}")
    return 0


def _read_cuts(directory) -> list:
    """(frame, mask, spot) triples from a harvest output directory."""
    from imaging.io import read_mask, read_png
    from robot_model.gripper import read_spots

    directory = Path(directory)
    spots = read_spots(directory / "spots")
    cuts = []
    for path in sorted((directory / "frames").glob("*.png")):
        index = int(path.stem)
        if index not in spots:
            logger.warning(f"No gripper spot for harvested frame {index}, skipped")
            continue
        cuts.append((read_png(path), read_mask(directory / "masks" / f"{path.stem}.pgm"), spots[index]))
    if not cuts:
        raise DataError(f"no harvested arm masks with gripper spots in {directory}")
    return cuts


def cmd_compose(args) -> int:
    from robot_model.appearance import fit_appearance_weighted
    from robot_model.compose import build_training_set, export_training_samples
    from simulator.dataset import read_frames, read_occluders

    cuts = _read_cuts(args.arm_masks)
    backgrounds = read_frames(args.backgrounds)
    # Occluder directories use the dataset layout: NNNNNN.png + NNNNNN_mask.pgm
    occluders = read_occluders(args.occluders)

    overrides = {"seed": args.seed}
    if args.count is not None:
        overrides["count"] = args.count
    cfg = _compose_config(args, **overrides)
    samples = build_training_set(cuts, backgrounds, occluders, cfg)
    manifest = export_training_samples(samples, args.out)

    model = fit_appearance_weighted(samples, use_weights=not args.no_weight)
    (Path(args.out) / "arm_model.json").write_text(json.dumps(model.to_dict()))
    _write_resolved(args, args.out, compose=cfg)
    print(f"Wrote {len(samples)} samples ({manifest}) and arm_model.json")
    return 0


def _load_model(args, dataset, params, compose_cfg, min_fraction: float):
    from robot_model.appearance import ArmAppearanceModel, fit_appearance, fit_appearance_weighted
    from robot_model.compose import build_training_set
    from robot_model.gripper import detect_spots
    from robot_model.harvest import harvest_arm_masks_indexed
    from simulator.dataset import ARM_ONLY, BACKGROUNDS, OCCLUDERS

    if args.model:
        try:
            return ArmAppearanceModel.from_dict(json.loads(Path(args.model).read_text()))
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise DataError(f"cannot read arm model {args.model}: {e}") from e
    if not dataset.has(ARM_ONLY):
        raise DataError("method 'ours' needs --model or an arm-only recording in the dataset")

    harvested = harvest_arm_masks_indexed(dataset.arm_only_frames(), params, min_fraction=min_fraction)
    if not (dataset.has(BACKGROUNDS) and dataset.has(OCCLUDERS)):
        logger.warning("No backgrounds or occluders in the dataset, fitting on harvested masks only")
        return fit_appearance([(frame, mask) for _, frame, mask in harvested])
    spots = detect_spots(dataset.gripper_pairs(), params)
    cuts = [(frame, mask, spots[i]) for i, frame, mask in harvested if i in spots]
    samples = build_training_set(cuts, dataset.backgrounds(), dataset.occluders(), compose_cfg)
    return fit_appearance_weighted(samples)


def cmd_segment(args) -> int:
    from baselines.change_detection import cd_rgb
    from flow_segmentation.motion import segment_sequence
    from imaging.io import write_mask
    from object_segmentation.pipeline import (
        postprocess_with_stats,
        segment_sequence_objects,
        write_sidecar,
    )
    from robot_model.gripper import detect_spots
    from simulator.dataset import EMPTY, GRIPPER, Dataset, frame_name
    from validate_dataset import validate_dataset

    results = validate_dataset(args.dataset)
    if results["errors"]:
        raise DataError(f"invalid dataset {args.dataset}: " + "; ".join(results["errors"][:5]))

    dataset = Dataset(args.dataset)
    params = _flow_params(args)
    pp = _postprocess_config(args)
    cd_cfg = _cd_rgb_config(args)
    compose_cfg = _compose_config(args)
    min_fraction = _min_fraction(args)
    frames = dataset.frames()

    empty = None
    if args.method in ("cd_of", "cd_rgb"):
        if not dataset.has(EMPTY):
            raise DataError(f"method '{args.method}' needs the paired object-free recording '{EMPTY}/'")
        empty = dataset.empty_frames()
        if len(empty) != len(frames):
            raise DataError(f"{len(empty)} object-free frames for {len(frames)} grasped frames")

    spots = None
    if args.method != "cd_rgb":
        if dataset.has(GRIPPER):
            spots = detect_spots(dataset.gripper_pairs(), params)
        elif pp.distance_filter:
            raise DataError(f"the gripper distance filter needs gripper recordings '{GRIPPER}/'")

    out = Path(args.out)
    if args.method == "ours":
        model = _load_model(args, dataset, params, compose_cfg, min_fraction)
        outputs = segment_sequence_objects(frames, model, spots, params, pp)
    elif args.method == "cd_of":
        with_motion = segment_sequence(frames, params)
        without_motion = segment_sequence(empty, params)
        outputs = [
            postprocess_with_stats(m.combine(pp.flow_mode).difference(e.combine(pp.flow_mode)),
                                   spots.get(i) if spots else None, pp, frame_id=i)
            for i, (m, e) in enumerate(zip(with_motion, without_motion))
        ]
    else:
        outputs = [(cd_rgb(f, e, cd_cfg), None) for f, e in zip(frames, empty)]

    for i, (mask, stats) in enumerate(outputs):
        write_mask(mask, out / "masks" / frame_name(i, ".pgm"))
        if stats is not None:
            write_sidecar(stats, out / "masks" / frame_name(i, ".json"))
    _write_resolved(args, out, flow=params, postprocess=pp, cd_rgb=cd_cfg, compose=compose_cfg,
                    harvest=_Settings(min_fraction=min_fraction))
    print(f"Wrote {len(outputs)} object masks ({args.method}) to {out / 'masks'}")
    return 0


def cmd_evaluate(args) -> int:
    from evaluation.metrics import MetricsReport, evaluate_sequence, format_table
    from imaging.io import read_mask
    from results.models import RunKind

    gt_dir, pred_dir = Path(args.gt), Path(args.pred)
    if not gt_dir.is_dir():
        raise DataError(f"ground-truth directory not found: {gt_dir}")
    if not pred_dir.is_dir():
        raise DataError(f"prediction directory not found: {pred_dir}")

    gt_paths = sorted(p for p in gt_dir.glob("*.pgm") if not p.stem.endswith("_mask"))
    if not gt_paths:
        raise DataError(f"no ground-truth masks in {gt_dir}")
    missing = [p.name for p in gt_paths if not (pred_dir / p.name).exists()]
    if missing:
        raise DataError(f"{len(missing)} predictions missing, first: {missing[0]}")

    preds = [read_mask(pred_dir / p.name) for p in gt_paths]
    gts = [read_mask(p) for p in gt_paths]
    report = MetricsReport(method=args.method, meta={"pred": str(pred_dir), "gt": str(gt_dir)})
    report.add(evaluate_sequence(preds, gts, name=args.name or gt_dir.parent.name or gt_dir.name,
                                 empty_value=args.empty_value))
    report.save(args.report)
    _write_resolved(args, Path(args.report).parent)
    print(format_table([report]))
    _record(report, args, RunKind.EVALUATE, {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED})
    return 0


def _benchmark_data(args) -> tuple:
    """(BenchmarkConfig, BenchmarkData) for the simulator or a recording."""
    from evaluation.benchmark import BenchmarkConfig, prepare_benchmark, prepare_from_dataset

    overrides = {"workers": args.workers or config.WORKERS}
    for name in ("objects", "poses", "seed", "flow_iterations", "train_samples"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    recorded = _recorded(args, "benchmark")
    try:
        if recorded:
            cfg = BenchmarkConfig.from_dict(recorded, **overrides)
        else:
            cfg = BenchmarkConfig.from_config(**overrides)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if args.dataset:
        return cfg, prepare_from_dataset(args.dataset, cfg)
    return cfg, prepare_benchmark(cfg)


def _benchmark_postprocess(args):
    from object_segmentation.pipeline import PostProcessConfig

    recorded = _recorded(args, "postprocess")
    return PostProcessConfig.from_dict(recorded) if recorded else PostProcessConfig.from_config()


def cmd_ablate(args) -> int:
    from evaluation.ablation import run_ablation, write_ablation_csv
    from results.models import RunKind

    cfg, data = _benchmark_data(args)
    pp = _benchmark_postprocess(args)
    rows = run_ablation(data, base=pp)
    write_ablation_csv(rows, args.out)
    _write_resolved(args, Path(args.out).parent, benchmark=cfg, postprocess=pp)
    for row in rows:
        print(f"{row.label:<24} " + "  ".join(f"{mode} {100 * v:6.2f}" for mode, v in row.miou.items()))
    run_config = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
    for row in rows:
        for report in row.reports.values():
            _record(report, args, RunKind.ABLATION, run_config)
    return 0


def cmd_trajectory(args) -> int:
    from trajectory.waypoints import default_trajectory, write_trajectory_csv, write_trajectory_json

    camera = _camera_dir(args.camera_dir)
    poses = default_trajectory(n=args.n, n_ellipse=args.ne, camera_dir=camera,
                               second_pass=not args.single_pass)
    if args.out.endswith(".csv"):
        write_trajectory_csv(poses, args.out)
    else:
        write_trajectory_json(poses, args.out)
    _write_resolved(args, Path(args.out).parent)
    print(f"Wrote {len(poses)} poses to {args.out}")
    return 0


def cmd_benchmark(args) -> int:
    from evaluation.ablation import evaluate_vanilla_vs_postprocessed
    from evaluation.benchmark import METHODS, run_method_comparison
    from evaluation.metrics import format_table
    from results.models import RunKind

    cfg, data = _benchmark_data(args)
    pp = _benchmark_postprocess(args)
    cd_cfg = _cd_rgb_config(args)
    reports = run_method_comparison(data, pp, cd_cfg)
    out = Path(args.out)
    for name, report in reports.items():
        report.save(out / f"{name.lower()}_report.json")
    table = format_table([reports[name] for name in METHODS])
    (out / "table.txt").write_text(table + "\n")
    print(table)
    print(f"Ordering Ours > CD_OF > CD_RGB holds: {reports['Ours'].meta['ordering_holds']}")

    if args.vanilla:
        comparison = evaluate_vanilla_vs_postprocessed(data, pp, cd_cfg)
        for name, pair in comparison.items():
            print(f"{name:<8} vanilla {100 * pair['vanilla'].averages['miou']:6.2f}"
                  f"  post-processed {100 * pair['postprocessed'].averages['miou']:6.2f}")

    _write_resolved(args, out, benchmark=cfg, postprocess=pp, cd_rgb=cd_cfg)
    run_config = {k: v for k, v in vars(args).items() if k not in _NOT_RECORDED}
    for report in reports.values():
        _record(report, args, RunKind.BENCHMARK, run_config)
    return 0


def _required(p: argparse.ArgumentParser, flag: str, replaying: bool, **kwargs) -> argparse.Action:
    """Add an option that is required unless a resolved config supplies it."""
    action = p.add_argument(flag, required=not replaying, **kwargs)
    action.needs_value = True
    return action


def build_parser(replaying: bool = False) -> argparse.ArgumentParser:
    """Argument parser; when replaying a resolved config, required options may come from the file."""
    parser = argparse.ArgumentParser(description="Grasped-object segmentation toolkit")
    parser.add_argument("--config", help=f"Load arguments from a {RESOLVED_CONFIG} file")
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="Logging level (default: LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def flow_flag(p):
        p.add_argument("--flow-iterations", type=int, default=None,
                       help=f"Solver sweeps per pyramid level (default: {config.FLOW_ITERATIONS})")

    def benchmark_flags(p):
        p.add_argument("--dataset", help="Use a recording instead of the simulator benchmark")
        p.add_argument("--objects", type=int, default=None, help="Catalog objects to render (default: 10)")
        p.add_argument("--poses", type=int, default=None, help=f"Poses per object (default: {config.SIM_POSES})")
        p.add_argument("--seed", type=int, default=None, help=f"Simulator seed (default: {config.SIM_SEED})")
        p.add_argument("--train-samples", type=int, default=None, help="Composed training samples (default: 200)")
        p.add_argument("--workers", type=int, default=None, help=f"Parallel processes (default: {config.WORKERS})")
        p.add_argument("--db", help="Results database URL (default: RESULTS_DATABASE_URL)")
        p.add_argument("--name", help="Run name recorded in the results database")
        p.add_argument("--flow-iterations", type=int, default=None, help="Solver sweeps per level (default: 40)")

    p = sub.add_parser("simulate", help="Render a grasped-object recording with ground truth")
    p.add_argument("scene", nargs="?", help="Scene JSON (default: built-in desk scene)")
    _required(p, "--out", replaying, help="Output dataset directory")
    p.add_argument("--poses", type=int, default=None, help=f"Trajectory poses (default: {config.SIM_POSES})")
    p.add_argument("--seed", type=int, default=None, help=f"Noise seed (default: {config.SIM_SEED})")
    p.add_argument("--object", type=int, default=None, help="Catalog object index instead of the scene's object")
    p.add_argument("--no-extras", action="store_true", help="Skip object-free recordings and gripper pairs")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("harvest", help="Arm masks from the arm-only recording plus gripper spots")
    _required(p, "--dataset", replaying, help="Dataset directory")
    _required(p, "--out", replaying, help="Output directory")
    p.add_argument("--min-fraction", type=float, default=None,
                   help=f"Discard masks below this image fraction (default: {config.HARVEST_MIN_FRACTION})")
    flow_flag(p)
    p.set_defaults(handler=cmd_harvest)

    p = sub.add_parser("compose", help="Compose training samples and fit the arm model")
    _required(p, "--arm-masks", replaying, help="Output directory of 'harvest'")
    _required(p, "--backgrounds", replaying, help="Directory of background PNGs")
    _required(p, "--occluders", replaying, help="Directory of occluder PNGs with _mask.pgm")
    p.add_argument("--count", type=int, default=None, help=f"Samples (default: {config.TRAIN_SAMPLES})")
    p.add_argument("--seed", type=int, default=0, help="Composition seed (default: 0)")
    p.add_argument("--no-weight", action="store_true", help="Fit without the gripper weight map")
    _required(p, "--out", replaying, help="Output directory")
    p.set_defaults(handler=cmd_compose)

    p = sub.add_parser("segment", help="Object masks for a grasped recording")
    _required(p, "--dataset", replaying, help="Dataset directory")
    p.add_argument("--method", choices=["ours", "cd_rgb", "cd_of"], default="ours", help="Segmentation method")
    p.add_argument("--flow-mode", choices=["forward", "intersection", "union"], default="union",
                   help="Combination of forward and backward motion masks (default: union)")
    p.add_argument("--no-border-del", action="store_true", help="Keep components touching the image border")
    p.add_argument("--grip-dist", type=float, default=None,
                   help=f"Max. distance to the gripper spot in reference pixels (default: {config.GRIPPER_MAX_DIST:g})")
    p.add_argument("--min-area", type=float, default=None,
                   help=f"Min. component area in reference pixels (default: {config.MIN_MASK_AREA:g})")
    p.add_argument("--lenient-closest", action="store_true",
                   help="Keep the component closest to the gripper even beyond --grip-dist")
    p.add_argument("--model", help="Arm model JSON written by 'compose'")
    _required(p, "--out", replaying, help="Output directory")
    flow_flag(p)
    p.set_defaults(handler=cmd_segment)

    p = sub.add_parser("evaluate", help="Score predicted masks against ground truth")
    _required(p, "--pred", replaying, help="Directory of predicted masks")
    _required(p, "--gt", replaying, help="Directory of ground-truth masks")
    _required(p, "--report", replaying, help="Output report JSON")
    p.add_argument("--method", default="external", help="Method name in the report")
    p.add_argument("--name", help="Class name (default: dataset directory name)")
    p.add_argument("--empty-value", type=float, default=1.0, help="Score when both masks are empty (default: 1.0)")
    p.add_argument("--db", help="Results database URL (default: RESULTS_DATABASE_URL)")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("ablate", help="Cumulative post-processing and training ablation")
    benchmark_flags(p)
    _required(p, "--out", replaying, help="Output CSV")
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("trajectory", help="Viewpoint trajectory from the Fibonacci sphere")
    p.add_argument("--n", type=int, default=config.TRAJECTORY_POINTS,
                   help=f"Sphere points (default: {config.TRAJECTORY_POINTS})")
    p.add_argument("--ne", type=int, default=config.ELLIPSE_POINTS,
                   help=f"Ellipse points (default: {config.ELLIPSE_POINTS})")
    p.add_argument("--camera-dir", default="0,0,1", help="Direction towards the camera, x,y,z (default: 0,0,1)")
    p.add_argument("--single-pass", action="store_true", help="Skip the pass with the gripper rotated 180 degrees")
    _required(p, "--out", replaying, help="Output JSON (or .csv)")
    p.set_defaults(handler=cmd_trajectory)

    p = sub.add_parser("benchmark", help="Compare Ours, CD_OF and CD_RGB")
    benchmark_flags(p)
    p.add_argument("--vanilla", action="store_true", help="Also report scores without post-processing")
    _required(p, "--out", replaying, help="Output directory")
    p.set_defaults(handler=cmd_benchmark)

    return parser


def _commands(parser: argparse.ArgumentParser) -> argparse._SubParsersAction:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action
    raise KeyError("no subcommands")


def _read_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def parse_args(argv=None) -> argparse.Namespace:
    """Parse arguments, filling defaults from --config; explicit flags win.

    A replayed config also restores the resolved settings of the recorded
    run (flow solver, post-processing, baselines, composition, scene), so
    the environment of the replay does not change the results. The
    subcommand and every required option may come from the file alone.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    peek = argparse.ArgumentParser(add_help=False)
    peek.add_argument("--config")
    known, _ = peek.parse_known_args(argv)
    if not known.config:
        return build_parser().parse_args(argv)

    data = _read_config(known.config)
    parser = build_parser(replaying=True)
    commands = _commands(parser)
    if data.get("command") in commands.choices and not any(token in commands.choices for token in argv):
        argv.append(data["command"])
    args = parser.parse_args(argv)
    if data.get("command", args.command) != args.command:
        raise ConfigError(f"{args.config} was written by '{data['command']}', not '{args.command}'")
    values = data.get("arguments", {k: v for k, v in data.items() if k not in ("command", "resolved")})
    resolved = data.get("resolved", {})
    if not isinstance(resolved, dict):
        raise ConfigError(f"'resolved' in {args.config} must be an object")

    sub = commands.choices[args.command]
    known_keys = {a.dest for a in sub._actions} - {"help"} - _NOT_RECORDED | {"log_level"}
    unknown = set(values) - known_keys
    if unknown:
        raise ConfigError(f"unknown keys in {args.config}: {', '.join(sorted(unknown))}")
    sub.set_defaults(**{k: v for k, v in values.items() if k != "log_level"})
    if "log_level" in values:
        parser.set_defaults(log_level=values["log_level"])
    args = parser.parse_args(argv)

    missing = [a.option_strings[0] for a in sub._actions
               if getattr(a, "needs_value", False) and getattr(args, a.dest, None) is None]
    if missing:
        raise ConfigError(f"{', '.join(missing)} required: neither given nor recorded in {args.config}")
    args.resolved = resolved
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s'
    )

    errors = config.validate()
    if errors:
        print("❌ Configuration errors:", file=sys.stderr)
        for error in errors:
            print(f"  - {error}", file=sys.stderr)
        return 2

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(str(e))
        return 2
    except DataError as e:
        logger.error(str(e))
        return 3
    except ValueError as e:
        # Parameter invariants of the configuration dataclasses
        logger.error(str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
