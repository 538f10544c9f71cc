"""Hungarian-matched framewise precision, recall, F1 and temporal IoU."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .synth import BACKGROUND

__all__ = ["Matching", "StepScore", "MetricsReport", "hungarian", "framewise_metrics"]


@dataclass(frozen=True)
class Matching:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    total: float

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.rows, self.cols))


@dataclass(frozen=True)
class StepScore:
    gt_step: int
    pred_step: int | None
    precision: float
    recall: float
    f1: float
    iou: float
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    iou: float
    per_step: tuple[StepScore, ...]
    matching: dict[int, int]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_step"] = [asdict(s) for s in self.per_step]
        d["matching"] = {str(k): v for k, v in self.matching.items()}
        return d


def hungarian(cost) -> Matching:
    """Minimum-cost one-to-one assignment.

    Rectangular inputs are padded to square with a constant larger than any
    entry; only pairs between real rows and real columns are returned.
    """
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost entries must be finite")
    r, k = c.shape
    size = max(r, k)
    pad = float(np.abs(c).max()) * 2.0 + 1.0
    square = np.full((size, size), pad)
    square[:r, :k] = c
    rows, cols = linear_sum_assignment(square)
    keep = (rows < r) & (cols < k)
    rows, cols = rows[keep], cols[keep]
    return Matching(tuple(int(i) for i in rows), tuple(int(j) for j in cols), float(c[rows, cols].sum()))


def _ratio(a: int, b: int) -> float:
    return a / b if b > 0 else 0.0


def framewise_metrics(pred, gt, k_pred: int | None = None, k_gt: int | None = None, average: str = "macro") -> MetricsReport:
    """Score predicted step labels against ground truth.

    Predicted steps are matched one-to-one to ground-truth steps by maximal
    frame overlap. Frames whose ground truth is background are ignored;
    predictions equal to ``BACKGROUND`` count as no prediction. ``macro``
    averages precision, recall and IoU over the ground-truth steps present
    (unmatched ones score zero) and reports ``f1 = 2PR/(P+R)`` from the
    averages; ``micro`` pools the counts of all steps first.
    """
    p = np.asarray(getattr(pred, "labels", pred), dtype=int)
    g = np.asarray(getattr(gt, "labels", gt), dtype=int)
    if p.shape != g.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {g.shape}")
    if average not in ("macro", "micro"):
        raise ValueError("average must be 'macro' or 'micro'")
    keep = g != BACKGROUND
    p, g = p[keep], g[keep]
    k_pred = int(p.max(initial=-1)) + 1 if k_pred is None else int(k_pred)
    k_gt = int(g.max(initial=-1)) + 1 if k_gt is None else int(k_gt)
    k_pred = max(k_pred, 1)
    k_gt = max(k_gt, 1)
    if (p >= k_pred).any() or (g >= k_gt).any() or (g < 0).any() or (p < BACKGROUND).any():
        raise ValueError("labels outside the declared label ranges")
    has_pred = p != BACKGROUND
    overlap = np.zeros((k_pred, k_gt), dtype=int)
    np.add.at(overlap, (p[has_pred], g[has_pred]), 1)
    pred_sizes = np.bincount(p[has_pred], minlength=k_pred)
    gt_sizes = np.bincount(g, minlength=k_gt)

    match = hungarian(-overlap)
    gt_to_pred = {gs: ps for ps, gs in zip(match.rows, match.cols)}
    steps = []
    for gs in range(k_gt):
        if gt_sizes[gs] == 0:
            continue
        ps = gt_to_pred.get(gs)
        tp = int(overlap[ps, gs]) if ps is not None else 0
        fp = int(pred_sizes[ps]) - tp if ps is not None else 0
        fn = int(gt_sizes[gs]) - tp
        prec, rec = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
        steps.append(StepScore(gs, ps, prec, rec, f1, _ratio(tp, tp + fp + fn), tp, fp, fn))

    if not steps:
        prec = rec = iou = 0.0
    elif average == "macro":
        prec = float(np.mean([s.precision for s in steps]))
        rec = float(np.mean([s.recall for s in steps]))
        iou = float(np.mean([s.iou for s in steps]))
    else:
        tp = sum(s.tp for s in steps)
        fp = sum(s.fp for s in steps)
        fn = sum(s.fn for s in steps)
        prec, rec, iou = _ratio(tp, tp + fp), _ratio(tp, tp + fn), _ratio(tp, tp + fp + fn)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    matching = {int(ps): int(gs) for ps, gs in zip(match.rows, match.cols)}
    return MetricsReport(prec, rec, f1, iou, tuple(steps), matching)
