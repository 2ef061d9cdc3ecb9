"""Pixel-level segmentation metrics: P/R/F1/IoU, ODS and OIS.

A pixel is predicted positive when ``p >= t``. ODS picks one threshold for
the whole dataset (counts summed over images before computing F1); OIS
picks the best threshold per image and averages the resulting F1 scores.

Degenerate denominators: an image (or dataset) with no ground truth and no
positive prediction scores 1 on every metric; if exactly one side is empty
the affected metrics are 0.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import datasetio
from .errors import DatasetIOError, ParameterError

logger = logging.getLogger(__name__)


def default_grid(steps: int = 99) -> np.ndarray:
    """``steps`` evenly spaced thresholds strictly inside (0, 1)."""
    if steps < 1:
        raise ParameterError(f"grid needs at least one threshold, got {steps}")
    return np.arange(1, steps + 1) / (steps + 1)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


ZERO_COUNTS = ConfusionCounts(0, 0, 0, 0)


def _check(p, r):
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r)
    if p.shape != r.shape:
        raise ParameterError(f"prediction shape {p.shape} != mask shape {r.shape}")
    return p, r.astype(bool)


def confusion(p, r, t: float = 0.5) -> ConfusionCounts:
    p, r = _check(p, r)
    if not 0 < t < 1:
        raise ParameterError(f"threshold must be in (0, 1), got {t}")
    pred = p >= t
    tp = int(np.count_nonzero(pred & r))
    fp = int(np.count_nonzero(pred & ~r))
    fn = int(np.count_nonzero(~pred & r))
    return ConfusionCounts(tp, fp, fn, p.size - tp - fp - fn)


def prf_iou(c: ConfusionCounts) -> tuple[float, float, float, float]:
    """(precision, recall, f1, iou) with the degenerate-denominator rules."""
    if c.tp + c.fp == 0 and c.tp + c.fn == 0:
        return 1.0, 1.0, 1.0, 1.0
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    iou = c.tp / (c.tp + c.fp + c.fn)
    return precision, recall, f1, iou


def sweep_counts(p, r, grid: Sequence[float]) -> np.ndarray:
    """Confusion counts at every threshold of ``grid``, shape ``(len(grid), 4)``.

    Sorting once and bisecting gives the exact ``p >= t`` counts for all
    thresholds in ``O(n log n)``.
    """
    p, r = _check(p, r)
    grid = np.asarray(grid, dtype=np.float64)
    pos = np.sort(p[r])
    neg = np.sort(p[~r])
    tp = pos.size - np.searchsorted(pos, grid, side="left")
    fp = neg.size - np.searchsorted(neg, grid, side="left")
    fn = pos.size - tp
    tn = neg.size - fp
    return np.stack([tp, fp, fn, tn], axis=1).astype(np.int64)


def _f1_rows(counts: np.ndarray) -> np.ndarray:
    return np.array([prf_iou(ConfusionCounts(*map(int, row)))[2] for row in counts])


def _argmax_first(values: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the smallest threshold
    return int(np.argmax(values))


def ods(dataset: Iterable, grid: Sequence[float] | None = None) -> tuple[float, float]:
    """Best dataset-level F1 over the grid; ties go to the smaller threshold."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    dataset = list(dataset)
    if not dataset or len(grid) == 0:
        raise ParameterError("ods needs a nonempty dataset and grid")
    order = np.argsort(grid, kind="stable")
    grid = grid[order]
    total = sum(sweep_counts(p, r, grid) for p, r in dataset)
    f1 = _f1_rows(total)
    k = _argmax_first(f1)
    return float(grid[k]), float(f1[k])


def ois(dataset: Iterable, grid: Sequence[float] | None = None) -> float:
    """Mean over images of the best per-image F1 on the grid."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    dataset = list(dataset)
    if not dataset or len(grid) == 0:
        raise ParameterError("ois needs a nonempty dataset and grid")
    best = [float(_f1_rows(sweep_counts(p, r, grid)).max()) for p, r in dataset]
    return float(np.mean(best))


@dataclass
class ImageRecord:
    id: str
    best_threshold: float
    best_f1: float
    counts: ConfusionCounts


@dataclass
class MetricsReport:
    threshold: float
    precision: float
    recall: float
    f1: float
    iou: float
    ods: tuple[float, float]
    ois: float
    per_image: list[ImageRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ods"] = {"threshold": self.ods[0], "f1": self.ods[1]}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def table(self) -> str:
        """Human-readable summary with the usual column names."""
        head = ["Precision", "Recall", "F1-score", "IoU", "ODS", "OIS"]
        vals = [self.precision, self.recall, self.f1, self.iou, self.ods[1], self.ois]
        widths = [max(len(h), 6) for h in head]
        lines = [
            "  ".join(h.rjust(w) for h, w in zip(head, widths)),
            "  ".join(f"{v:.4f}".rjust(w) for v, w in zip(vals, widths)),
            f"threshold {self.threshold:g}; ODS threshold {self.ods[0]:g}; {len(self.per_image)} images",
        ]
        return "\n".join(lines)


def report_from_arrays(items, threshold: float = 0.5, grid=None) -> MetricsReport:
    """Metrics over an iterable of ``(id, prob, mask)`` triples.

    Items are consumed one at a time, so a generator keeps memory flat. The
    result does not depend on item order: counts are integer sums and the
    per-image records are sorted by id before averaging.
    """
    if not 0 < threshold < 1:
        raise ParameterError(f"threshold must be in (0, 1), got {threshold}")
    grid = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=np.float64))
    if len(grid) == 0:
        raise ParameterError("empty threshold grid")
    total_fixed = ZERO_COUNTS
    total_sweep = np.zeros((len(grid), 4), dtype=np.int64)
    records = []
    for ident, p, r in items:
        c = confusion(p, r, threshold)
        sweep = sweep_counts(p, r, grid)
        f1 = _f1_rows(sweep)
        k = _argmax_first(f1)
        records.append(ImageRecord(ident, float(grid[k]), float(f1[k]), c))
        total_fixed = total_fixed + c
        total_sweep += sweep
    if not records:
        raise ParameterError("no images to evaluate")
    records.sort(key=lambda rec: rec.id)
    precision, recall, f1, iou = prf_iou(total_fixed)
    ods_f1 = _f1_rows(total_sweep)
    k = _argmax_first(ods_f1)
    ois_value = float(np.mean([rec.best_f1 for rec in records]))
    return MetricsReport(
        threshold=float(threshold),
        precision=precision,
        recall=recall,
        f1=f1,
        iou=iou,
        ods=(float(grid[k]), float(ods_f1[k])),
        ois=ois_value,
        per_image=records,
    )


def evaluate(pred_dir, manifest, threshold: float = 0.5, grid=None) -> MetricsReport:
    """Score ``<pred_dir>/<id>.png`` probability maps against a manifest."""
    pred_dir = Path(pred_dir)
    if not isinstance(manifest, datasetio.Manifest):
        manifest = datasetio.read_manifest(manifest)
    missing = [e.id for e in manifest.entries if not (pred_dir / f"{e.id}.png").exists()]
    if missing:
        raise DatasetIOError(f"missing predictions for ids: {', '.join(missing)}")

    def items():
        for e in manifest.entries:
            path = pred_dir / f"{e.id}.png"
            p = datasetio.load_probability(path)
            r = datasetio.load_mask(manifest.resolve(e.mask_path))
            if p.shape != r.shape:
                raise ParameterError(f"{path}: prediction {p.shape} does not match mask {r.shape}")
            yield e.id, p, r

    return report_from_arrays(items(), threshold, grid)


def write_report(report: MetricsReport, path) -> None:
    Path(path).write_text(report.to_json(indent=2) + "\n")
