"""
Ablation of the post-processing steps and of the arm-model training data.

Rows drop one step at a time, cumulatively and in a fixed order: each row
disables its step and every step of the rows above it. Every row is scored
under all three flow-mask modes.
"""
import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from baselines.change_detection import CdRgbConfig, change_mask, cd_rgb
from evaluation.benchmark import BenchmarkData, cd_of_masks, ours_masks
from evaluation.metrics import MetricsReport, evaluate_sequence
from flow_segmentation.motion import FlowMaskMode
from object_segmentation.pipeline import PostProcessConfig

logger = logging.getLogger(__name__)

# (row label, what the row turns off)
DEFAULT_STEPS = (
    ("- Min. mask size", "area_filter"),
    ("- Max. grip. dist.", "distance_filter"),
    ("- Border deletion", "border_deletion"),
    ("- Gripper loss weight", "gripper_weight"),
    ("- Occluding object", "occluder"),
)

_PP_STEPS = {"area_filter", "distance_filter", "border_deletion"}


@dataclass
class AblationRow:
    """Scores of one toggle prefix under each flow mode."""

    label: str
    toggles: dict
    miou: dict = field(default_factory=dict)  # flow mode value -> mean mIoU
    reports: dict = field(default_factory=dict)  # flow mode value -> MetricsReport


def toggle_prefixes(steps: Sequence[tuple]) -> list[tuple]:
    """(label, toggles) for the full configuration and every cumulative drop."""
    active = {name: True for _, name in steps}
    rows = [("Ours", dict(active))]
    for label, name in steps:
        active[name] = False
        rows.append((label, dict(active)))
    return rows


def _model_for(toggles: dict) -> str:
    if not toggles.get("occluder", True):
        return "no_occluder"
    if not toggles.get("gripper_weight", True):
        return "no_weight"
    return "ours"


def run_ablation(data: BenchmarkData, step_order: Sequence[tuple] = DEFAULT_STEPS,
                 base: Optional[PostProcessConfig] = None) -> list[AblationRow]:
    """Score every toggle prefix of step_order under the three flow modes.

    Args:
        data: Prepared benchmark with ground truth
        step_order: (label, step) pairs; steps are area_filter,
            distance_filter, border_deletion, gripper_weight and occluder
        base: Post-processing thresholds (default from config)

    Returns:
        One AblationRow per prefix, full configuration first
    """
    base = base or PostProcessConfig.from_config()
    unknown = {name for _, name in step_order} - _PP_STEPS - {"gripper_weight", "occluder"}
    if unknown:
        raise ValueError(f"unknown ablation steps: {', '.join(sorted(unknown))}")

    rows = []
    for label, toggles in toggle_prefixes(step_order):
        pp_flags = {name: toggles.get(name, True) for name in _PP_STEPS}
        model = _model_for(toggles)
        row = AblationRow(label=label, toggles=toggles)
        for mode in FlowMaskMode:
            pp = replace(base, flow_mode=mode, **pp_flags)
            report = MetricsReport(method=label, meta={"flow_mode": mode.value, "model": model})
            for obj in data.objects:
                report.add(evaluate_sequence(ours_masks(data, obj, pp, model), obj.gt_object, name=obj.name))
            row.reports[mode.value] = report
            row.miou[mode.value] = report.averages["miou"]
        logger.info(f"{label}: " + ", ".join(f"{m} {100 * v:.2f}" for m, v in row.miou.items()))
        rows.append(row)
    return rows


def write_ablation_csv(rows: Sequence[AblationRow], path) -> None:
    """One CSV row per ablation row and flow mode."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    steps = list(rows[0].toggles) if rows else []
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "flow_mode", "miou", "precision", "recall"] + steps)
        for row in rows:
            for mode, report in row.reports.items():
                avg = report.averages
                writer.writerow([row.label, mode, f"{avg['miou']:.6f}", f"{avg['precision']:.6f}",
                                 f"{avg['recall']:.6f}"] + [int(row.toggles[s]) for s in steps])


def evaluate_vanilla_vs_postprocessed(data: BenchmarkData, pp: Optional[PostProcessConfig] = None,
                                      cd_cfg: Optional[CdRgbConfig] = None) -> dict:
    """Scores of each method without and with its post-processing.

    The change-detection baseline in RGB space is post-processed by
    morphological opening and closing only.

    Returns:
        {method: {"vanilla": MetricsReport, "postprocessed": MetricsReport}}
    """
    pp = pp or PostProcessConfig.from_config()
    cd_cfg = cd_cfg or CdRgbConfig.from_config()
    off = PostProcessConfig.disabled(flow_mode=pp.flow_mode)
    runs = {
        "Ours": (lambda obj: ours_masks(data, obj, off), lambda obj: ours_masks(data, obj, pp)),
        "CD_OF": (lambda obj: cd_of_masks(data, obj, off), lambda obj: cd_of_masks(data, obj, pp)),
        "CD_RGB": (
            lambda obj: [change_mask(f, e, cd_cfg.threshold) for f, e in zip(obj.frames, data.empty_frames)],
            lambda obj: [cd_rgb(f, e, cd_cfg) for f, e in zip(obj.frames, data.empty_frames)],
        ),
    }
    results = {}
    for method, (vanilla, processed) in runs.items():
        results[method] = {}
        for variant, fn in (("vanilla", vanilla), ("postprocessed", processed)):
            report = MetricsReport(method=f"{method} ({variant})")
            for obj in data.objects:
                report.add(evaluate_sequence(fn(obj), obj.gt_object, name=obj.name))
            results[method][variant] = report
    return results
