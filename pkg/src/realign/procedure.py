"""Key-step discovery: alpha-expansion segmentation, per-video ordering, canonical order.

The segmentation energy over frames ``f`` with labels ``L`` is

    E(L) = sum_f D[f, L(f)] + sum_f w_f * [L(f) != L(f+1)]

with ``D`` the squared distance to the label's prototype and Potts weights
``w_f`` on temporally adjacent frames (zero across video boundaries). On a
chain, every expansion move is a two-state shortest path and is solved
exactly by dynamic programming.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .geometry import EmbeddingSequence

__all__ = [
    "SegmentLabeling",
    "KeyStepOrder",
    "SegmentContext",
    "chain_energy",
    "expansion_move",
    "segment",
    "order_key_steps",
    "canonical_order",
]


@dataclass(frozen=True)
class SegmentLabeling:
    labels: np.ndarray
    background: np.ndarray
    energy: float
    prototypes: np.ndarray | None = None
    energy_trace: tuple[float, ...] = ()

    def __post_init__(self):
        labels = np.array(self.labels, dtype=int)
        background = np.zeros(labels.size, bool) if self.background is None else np.array(self.background, dtype=bool)
        if labels.ndim != 1 or background.shape != labels.shape:
            raise ValueError("labels and background must be 1-D of equal length")
        labels.setflags(write=False)
        background.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "background", background)

    def __len__(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class KeyStepOrder:
    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if sorted(idx) != list(range(len(idx))):
            raise ValueError(f"{idx} is not a permutation of 0..{len(idx) - 1}")
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return len(self.indices)

    def as_list(self) -> list[int]:
        return list(self.indices)


@dataclass(frozen=True)
class SegmentContext:
    """Data costs ``(frames, k)`` and Potts weights on the ``frames - 1`` chain edges."""

    data_cost: np.ndarray
    edge_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        d = np.asarray(self.data_cost, dtype=float)
        if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("data_cost must be a non-empty (frames, k) matrix")
        w = np.zeros(d.shape[0] - 1) if self.edge_weights is None else np.asarray(self.edge_weights, dtype=float)
        if w.shape != (d.shape[0] - 1,):
            raise ValueError(f"edge_weights must have length {d.shape[0] - 1}")
        if np.any(w < 0):
            raise ValueError("Potts weights must be nonnegative")
        object.__setattr__(self, "data_cost", d)
        object.__setattr__(self, "edge_weights", w)

    @property
    def k(self) -> int:
        return self.data_cost.shape[1]


def chain_energy(labels, ctx: SegmentContext) -> float:
    lab = np.asarray(labels, dtype=int)
    data = ctx.data_cost[np.arange(lab.size), lab].sum()
    smooth = np.sum(ctx.edge_weights * (lab[1:] != lab[:-1]))
    return float(data + smooth)


def expansion_move(labels, alpha_label: int, ctx: SegmentContext) -> np.ndarray:
    """Best labeling where every frame keeps its label or switches to ``alpha_label``.

    Exact on the chain via a two-state Viterbi pass. The current labeling is
    returned unchanged unless the move strictly lowers the energy.
    """
    cur = np.asarray(getattr(labels, "labels", labels), dtype=int)
    if not 0 <= alpha_label < ctx.k:
        raise ValueError(f"alpha_label {alpha_label} outside 0..{ctx.k - 1}")
    n = cur.size
    if n != ctx.data_cost.shape[0]:
        raise ValueError("labeling length does not match the data costs")
    # state 0 keeps cur[f], state 1 takes alpha_label
    cand = np.stack([cur, np.full(n, alpha_label)], axis=1)
    unary = ctx.data_cost[np.arange(n)[:, None], cand]
    cost = unary[0].copy()
    back = np.zeros((n, 2), dtype=int)
    for f in range(1, n):
        w = ctx.edge_weights[f - 1]
        pair = w * (cand[f - 1][:, None] != cand[f][None, :])  # (prev state, state)
        total = cost[:, None] + pair
        back[f] = np.argmin(total, axis=0)
        cost = total[back[f], [0, 1]] + unary[f]
    states = np.empty(n, dtype=int)
    states[-1] = int(np.argmin(cost))
    for f in range(n - 1, 0, -1):
        states[f - 1] = back[f, states[f]]
    new = cand[np.arange(n), states]
    if chain_energy(new, ctx) < chain_energy(cur, ctx):
        return new
    return cur.copy()


def _farthest_point_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    chosen = [int(rng.integers(x.shape[0]))]
    dist = ((x - x[chosen[0]]) ** 2).sum(1)
    for _ in range(1, k):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, ((x - x[nxt]) ** 2).sum(1))
    return x[chosen].copy()


def _data_cost(x: np.ndarray, protos: np.ndarray, background: np.ndarray) -> np.ndarray:
    d = ((x[:, None, :] - protos[None, :, :]) ** 2).sum(2)
    d[background] = 0.0
    return d


def _inherit_labels(labels: np.ndarray, background: np.ndarray, starts: list[int]) -> np.ndarray:
    """Give each background frame the label of its nearest real neighbour in the same video."""
    out = labels.copy()
    bounds = list(starts) + [labels.size]
    for a, b in zip(bounds[:-1], bounds[1:]):
        real = np.flatnonzero(~background[a:b]) + a
        if real.size == 0:
            continue
        for f in np.flatnonzero(background[a:b]) + a:
            pos = np.searchsorted(real, f)
            left = real[pos - 1] if pos > 0 else None
            right = real[pos] if pos < real.size else None
            if right is None or (left is not None and f - left <= right - f):
                out[f] = labels[left]
            else:
                out[f] = labels[right]
    return out


def segment(
    frames,
    k: int = 7,
    smoothness_weight: float | None = None,
    seed: int = 0,
    background=None,
    boundaries=None,
    max_rounds: int = 50,
) -> SegmentLabeling:
    """Multi-label chain segmentation by alpha-expansion with prototype re-estimation.

    ``frames`` may be a single sequence or a list of sequences; lists are
    concatenated, share prototypes and are not smoothed across their
    boundaries (``boundaries`` gives explicit start indices instead).
    ``smoothness_weight`` defaults to the median nearest-prototype data cost
    at initialization. Background frames get a flat data cost, do not shape
    prototypes and report the label of their nearest real neighbour.
    """
    if isinstance(frames, (list, tuple)):
        seqs = [f if isinstance(f, EmbeddingSequence) else EmbeddingSequence(f) for f in frames]
        lengths = [s.length for s in seqs]
        x = np.concatenate([s.data for s in seqs])
        starts = list(np.cumsum([0] + lengths[:-1]))
    else:
        x = (frames if isinstance(frames, EmbeddingSequence) else EmbeddingSequence(frames)).data
        starts = [0] if boundaries is None else sorted(set([0] + [int(b) for b in boundaries]))
    n = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    bg = np.zeros(n, bool) if background is None else np.asarray(background, dtype=bool)
    if bg.shape != (n,):
        raise ValueError("background mask length does not match frames")
    real = ~bg
    if k > int(real.sum()):
        raise ValueError(f"k={k} exceeds the number of non-background frames ({int(real.sum())})")

    rng = np.random.default_rng(seed)
    protos = _farthest_point_seeds(x[real], k, rng)
    d = _data_cost(x, protos, bg)
    if smoothness_weight is None:
        smoothness_weight = float(np.median(d[real].min(1)))
    if smoothness_weight < 0:
        raise ValueError("smoothness_weight must be nonnegative")
    edges = np.full(max(n - 1, 0), float(smoothness_weight))
    for s in starts[1:]:
        edges[s - 1] = 0.0

    labels = np.argmin(d, axis=1)
    trace: list[float] = []
    for _ in range(max_rounds):
        ctx = SegmentContext(d, edges)
        energy = chain_energy(labels, ctx)
        trace.append(energy)
        improved = True
        while improved:
            improved = False
            for a in range(k):
                new = expansion_move(labels, a, ctx)
                e_new = chain_energy(new, ctx)
                if e_new > energy:
                    raise AssertionError("expansion move increased the energy")
                if e_new < energy:
                    labels, energy, improved = new, e_new, True
                    trace.append(energy)
        new_protos = protos.copy()
        for c in range(k):
            members = real & (labels == c)
            if members.any():
                new_protos[c] = x[members].mean(0)
        if np.array_equal(new_protos, protos):
            break
        protos = new_protos
        d = _data_cost(x, protos, bg)

    ctx = SegmentContext(d, edges)
    energy = chain_energy(labels, ctx)
    reported = _inherit_labels(labels, bg, starts) if bg.any() else labels
    return SegmentLabeling(reported, bg, energy, protos, tuple(trace))


def order_key_steps(labels, k: int, mask=None) -> KeyStepOrder:
    """Sort clusters by the mean normalized timestamp ``f / F`` (``f`` 1-based) of their frames.

    Frames where ``mask`` is false are ignored (timestamps still count them).
    Empty clusters go last, in label order.
    """
    lab = np.asarray(getattr(labels, "labels", labels), dtype=int)
    if lab.size and (lab.min() < 0 or lab.max() >= k):
        raise ValueError(f"labels must lie in 0..{k - 1}")
    keep = np.ones(lab.size, bool) if mask is None else np.asarray(mask, dtype=bool)
    t = np.arange(1, lab.size + 1) / max(lab.size, 1)
    times = np.full(k, math.inf)
    for c in range(k):
        sel = keep & (lab == c)
        if sel.any():
            times[c] = t[sel].mean()
    return KeyStepOrder(tuple(int(i) for i in np.argsort(times, kind="stable")))


def canonical_order(orders) -> KeyStepOrder:
    """Most frequent order; ties go to the lexicographically smallest."""
    orders = [o if isinstance(o, KeyStepOrder) else KeyStepOrder(tuple(o)) for o in orders]
    if not orders:
        raise ValueError("no orders to aggregate")
    if len({o.k for o in orders}) != 1:
        raise ValueError("orders disagree on k")
    counts = Counter(o.indices for o in orders)
    best = max(counts.values())
    return KeyStepOrder(min(idx for idx, c in counts.items() if c == best))
