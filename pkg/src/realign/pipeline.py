"""Task-level procedure learning: all-pairs alignment, filtering, segmentation, ordering.

Embeddings are consumed as given (no encoder is trained). Each transport
plan instead contributes directly to the shared segmentation: a frame's
embedding is averaged with its barycentric projections onto the other
sequences, so confident cross-sequence correspondences pull matching frames
together while sink-routed frames are left out.
"""

from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .evaluation import MetricsReport, framewise_metrics
from .geometry import EmbeddingSequence
from .procedure import KeyStepOrder, SegmentLabeling, canonical_order, order_key_steps, segment
from .solver import Solution, SolverConfig, assign_virtual, build_problem, solve_rfpgwot

logger = logging.getLogger(__name__)

__all__ = ["PipelineConfig", "PipelineResult", "align_all_pairs", "refine_embeddings", "run_pipeline", "thread_count"]


def thread_count(default: int = 1) -> int:
    """Worker cap from ``REALIGN_THREADS`` (falls back to ``default``)."""
    raw = os.environ.get("REALIGN_THREADS")
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"REALIGN_THREADS must be a positive integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"REALIGN_THREADS must be a positive integer, got {raw!r}")
    return value


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 7
    smoothness_weight: float | None = None
    seed: int = 0
    refine: bool = True
    background_vote: float = 0.5


@dataclass
class PipelineResult:
    labelings: list[SegmentLabeling]
    background: list[np.ndarray]
    orders: list[KeyStepOrder]
    canonical: KeyStepOrder
    solutions: dict[tuple[int, int], Solution]
    metrics: MetricsReport | None = None
    canonical_gt: list[int] | None = None

    def to_dict(self) -> dict:
        out = {
            "labels": [lab.labels.tolist() for lab in self.labelings],
            "background": [bg.astype(int).tolist() for bg in self.background],
            "orders": [o.as_list() for o in self.orders],
            "canonical_order": self.canonical.as_list(),
            "pairs": {
                f"{i}-{j}": {
                    "objective": s.totals[-1],
                    "converged": s.converged,
                    "outer_steps": s.outer_steps_used,
                }
                for (i, j), s in self.solutions.items()
            },
        }
        if self.metrics is not None:
            out["metrics"] = self.metrics.to_dict()
        if self.canonical_gt is not None:
            out["canonical_order_gt_ids"] = self.canonical_gt
        return out


def align_all_pairs(seqs: list[EmbeddingSequence], cfg: SolverConfig, threads: int = 1) -> dict[tuple[int, int], Solution]:
    pairs = list(itertools.combinations(range(len(seqs)), 2))

    def run(pair):
        i, j = pair
        return pair, solve_rfpgwot(seqs[i], seqs[j], cfg, build_problem(seqs[i], seqs[j], cfg))

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(p) for p in pairs]
    return dict(results)


def _background_votes(seqs, solutions, cfg: SolverConfig, vote: float) -> list[np.ndarray]:
    flagged = [np.zeros(s.length) for s in seqs]
    counts = [0] * len(seqs)
    if not cfg.use_virtual:
        return [np.zeros(s.length, bool) for s in seqs]
    for (i, j), sol in solutions.items():
        zeta = cfg.resolve(seqs[i].length, seqs[j].length).zeta
        rows, cols = assign_virtual(sol.plan, zeta)
        flagged[i] += rows
        flagged[j] += cols
        counts[i] += 1
        counts[j] += 1
    return [f / max(c, 1) >= vote for f, c in zip(flagged, counts)]


def refine_embeddings(seqs, solutions, background) -> list[np.ndarray]:
    """Average each real frame with its barycentric projections onto the other sequences."""
    acc = [s.data.copy() for s in seqs]
    weight = [np.ones(s.length) for s in seqs]
    for (i, j), sol in solutions.items():
        real = np.asarray(sol.plan.real, dtype=float)
        for a, b, t in ((i, j, real), (j, i, real.T)):
            t = t * (~background[b])[None, :]
            mass = t.sum(1)
            ok = (mass > 0) & ~background[a]
            proj = np.zeros_like(acc[a])
            proj[ok] = (t[ok] / mass[ok, None]) @ seqs[b].data
            acc[a][ok] += proj[ok]
            weight[a][ok] += 1.0
    return [a / w[:, None] for a, w in zip(acc, weight)]


def run_pipeline(
    sequences,
    solver_cfg: SolverConfig | None = None,
    cfg: PipelineConfig | None = None,
    ground_truth=None,
    threads: int | None = None,
) -> PipelineResult:
    """Discover ``cfg.k`` key-steps shared by ``sequences`` and their canonical order.

    ``ground_truth`` (optional) is a list of per-frame label arrays with the
    background sentinel; when given, framewise metrics are attached and the
    canonical order is also reported in ground-truth step ids.
    """
    seqs = [s if isinstance(s, EmbeddingSequence) else EmbeddingSequence(s) for s in sequences]
    if len(seqs) < 2:
        raise ValueError("the pipeline needs at least two sequences")
    solver_cfg = solver_cfg or SolverConfig()
    cfg = cfg or PipelineConfig()
    threads = thread_count() if threads is None else threads

    solutions = align_all_pairs(seqs, solver_cfg, threads)
    background = _background_votes(seqs, solutions, solver_cfg, cfg.background_vote)
    if sum(int((~b).sum()) for b in background) < cfg.k:
        logger.warning("background filtering left fewer than k frames; ignoring the flags")
        background = [np.zeros(s.length, bool) for s in seqs]
    feats = refine_embeddings(seqs, solutions, background) if cfg.refine else [s.data for s in seqs]
    joint = segment(
        [EmbeddingSequence(f) for f in feats],
        cfg.k,
        cfg.smoothness_weight,
        cfg.seed,
        background=np.concatenate(background),
    )
    bounds = np.cumsum([0] + [s.length for s in seqs])
    labelings = []
    orders = []
    for v, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        lab = SegmentLabeling(joint.labels[a:b], background[v], float("nan"))
        labelings.append(lab)
        orders.append(order_key_steps(lab.labels, cfg.k, mask=~background[v]))
    canon = canonical_order(orders)
    result = PipelineResult(labelings, background, orders, canon, solutions)

    if ground_truth is not None:
        gts = [np.asarray(getattr(g, "labels", g), dtype=int) for g in ground_truth]
        if len(gts) != len(seqs) or any(g.size != s.length for g, s in zip(gts, seqs)):
            raise ValueError("ground truth does not match the sequences")
        gt_all = np.concatenate(gts)
        k_gt = int(gt_all.max()) + 1 if (gt_all >= 0).any() else 1
        result.metrics = framewise_metrics(joint.labels, gt_all, cfg.k, k_gt)
        mapping = result.metrics.matching
        result.canonical_gt = [mapping[c] for c in canon.indices if c in mapping]
    return result
