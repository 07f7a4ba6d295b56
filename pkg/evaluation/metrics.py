"""
Segmentation metrics and per-object reports.

Metrics are computed from pooled pixel counts over all frames of an object
(micro-average). A ratio with an empty denominator takes the configured
empty value, 1.0 by default: predicting nothing where nothing is scores 1.
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from errors import DataError, DimensionMismatchError
from imaging.raster import BinaryMask

EMPTY_VALUE = 1.0


def _ratio(num: int, den: int, empty_value: float) -> float:
    return num / den if den else empty_value


def _counts(pred: BinaryMask, gt: BinaryMask) -> tuple:
    if pred.shape != gt.shape:
        raise DimensionMismatchError("ground-truth mask", pred.shape, gt.shape)
    inter = int(np.count_nonzero(pred.bits & gt.bits))
    return inter, pred.area, gt.area


def scores_from_counts(inter: int, pred: int, gt: int, empty_value: float = EMPTY_VALUE) -> tuple:
    """(iou, precision, recall) from intersection and set sizes."""
    union = pred + gt - inter
    return (
        _ratio(inter, union, empty_value),
        _ratio(inter, pred, empty_value),
        _ratio(inter, gt, empty_value),
    )


def mask_metrics(pred: BinaryMask, gt: BinaryMask, empty_value: float = EMPTY_VALUE) -> tuple:
    """IoU, precision and recall of a predicted mask.

    Args:
        pred: Predicted mask
        gt: Ground-truth mask of the same size
        empty_value: Value of a ratio whose denominator is zero

    Returns:
        (iou, precision, recall)
    """
    return scores_from_counts(*_counts(pred, gt), empty_value=empty_value)


@dataclass(frozen=True)
class ClassScore:
    """Pooled scores of one object (or class) over its frames."""

    name: str
    miou: float
    precision: float
    recall: float
    frame_count: int
    intersection: int = 0
    predicted: int = 0
    actual: int = 0


def evaluate_sequence(preds: Sequence[BinaryMask], gts: Sequence[BinaryMask], name: str = "object",
                      empty_value: float = EMPTY_VALUE) -> ClassScore:
    """Micro-averaged scores over a sequence of frames.

    Raises:
        DataError: if the sequences differ in length
    """
    if len(preds) != len(gts):
        raise DataError(f"{len(preds)} predictions for {len(gts)} ground-truth frames")
    inter = pred_total = gt_total = 0
    for pred, gt in zip(preds, gts):
        i, p, g = _counts(pred, gt)
        inter += i
        pred_total += p
        gt_total += g
    iou, precision, recall = scores_from_counts(inter, pred_total, gt_total, empty_value)
    return ClassScore(name=name, miou=iou, precision=precision, recall=recall, frame_count=len(preds),
                      intersection=inter, predicted=pred_total, actual=gt_total)


@dataclass
class MetricsReport:
    """Per-object scores of one method with unweighted class averages."""

    method: str
    per_class: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, score: ClassScore):
        self.per_class.append(score)

    @property
    def averages(self) -> dict:
        if not self.per_class:
            return {"miou": 0.0, "precision": 0.0, "recall": 0.0}
        return {
            key: float(np.mean([getattr(s, key) for s in self.per_class]))
            for key in ("miou", "precision", "recall")
        }

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_class": [asdict(s) for s in self.per_class],
            "averages": self.averages,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        return cls(
            method=data["method"],
            per_class=[ClassScore(**entry) for entry in data.get("per_class", [])],
            meta=data.get("meta", {}),
        )

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path) -> "MetricsReport":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
            raise DataError(f"cannot read report {path}: {e}") from e


def format_table(reports: Sequence[MetricsReport], metric: str = "miou") -> str:
    """Aligned text table: one row per method, one column per object, plus the average.

    Values are percentages with two decimals.
    """
    names = []
    for report in reports:
        for score in report.per_class:
            if score.name not in names:
                names.append(score.name)
    header = ["Method"] + names + ["Average"]
    rows = []
    for report in reports:
        by_name = {s.name: getattr(s, metric) for s in report.per_class}
        cells = [report.method]
        cells += [f"{100 * by_name[n]:.2f}" if n in by_name else "-" for n in names]
        cells.append(f"{100 * report.averages[metric]:.2f}")
        rows.append(cells)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = [" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(header))]
    lines.append("-+-".join("-" * w for w in widths))
    for cells in rows:
        lines.append(" | ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)))
    return "\n".join(lines)


def method_ordering(reports: dict, order: Sequence[str], margin: float = 0.0) -> Optional[bool]:
    """True if average mIoU strictly decreases along `order` by at least `margin`.

    Returns None when a method of the order is missing.
    """
    if any(name not in reports for name in order):
        return None
    values = [reports[name].averages["miou"] for name in order]
    return all(a - b >= margin and a > b for a, b in zip(values, values[1:]))
