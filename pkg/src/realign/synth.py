"""Paired synthetic procedure sequences with planted key-steps."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import EmbeddingSequence

BACKGROUND = -1

__all__ = ["BACKGROUND", "SynthConfig", "GroundTruth", "generate_pair", "generate_sequence", "step_centroids"]


@dataclass(frozen=True)
class SynthConfig:
    k: int = 4
    frames_per_step: tuple[int, int] = (6, 10)
    dim: int = 16
    step_separation: float = 100.0
    noise_sigma: float = 5.0
    background_rate: float = 0.0
    repeat_rate: float = 0.0
    permute: bool = False
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.frames_per_step
        object.__setattr__(self, "frames_per_step", (int(lo), int(hi)))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 1 <= lo <= hi:
            raise ValueError("frames_per_step must be a range 1 <= lo <= hi")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.step_separation > 0:
            raise ValueError("step_separation must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if not (0 <= self.background_rate < 1 and 0 <= self.repeat_rate < 1):
            raise ValueError("background_rate and repeat_rate must lie in [0, 1)")
        if self.background_rate + self.repeat_rate >= 1:
            raise ValueError("background_rate + repeat_rate must be < 1")

    @property
    def separable(self) -> bool:
        return self.step_separation > 4.0 * self.noise_sigma

    def to_dict(self) -> dict:
        d = asdict(self)
        d["frames_per_step"] = list(self.frames_per_step)
        return d


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray
    order: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"labels": [int(v) for v in self.labels], "order": list(self.order), "background": BACKGROUND}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(np.asarray(d["labels"], dtype=int), tuple(int(v) for v in d["order"]))


def step_centroids(k: int, dim: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    """``k`` points with every pairwise distance exactly ``separation``.

    Vertices of a randomly rotated regular simplex, which needs ``dim >= k-1``.
    """
    if dim < k - 1:
        raise ValueError(f"cannot place {k} equidistant step centroids in {dim} dimensions (need dim >= k-1)")
    verts = np.eye(k) * (separation / np.sqrt(2.0))
    verts -= verts.mean(0)
    if k == 1:
        basis = np.zeros((1, dim))
    else:
        # orthonormal coordinates inside the (k-1)-dim affine hull
        q, _ = np.linalg.qr(verts.T)
        verts = verts @ q[:, : k - 1]
        basis = np.zeros((k - 1, dim))
        basis[:, : k - 1] = np.eye(k - 1)
        verts = verts @ basis
    rot, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return verts @ rot if k > 1 else np.zeros((1, dim))


def _background_frame(centroids: np.ndarray, separation: float, rng: np.random.Generator) -> np.ndarray:
    dim = centroids.shape[1]
    center = centroids.mean(0)
    spread = np.linalg.norm(centroids - center, axis=1).max()
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    radius = spread + separation * rng.uniform(2.5, 3.5)
    return center + radius * direction


def generate_sequence(cfg: SynthConfig, centroids: np.ndarray, order, rng: np.random.Generator):
    lo, hi = cfg.frames_per_step
    segments: list[tuple[int, np.ndarray]] = []
    for pos, step in enumerate(order):
        length = int(rng.integers(lo, hi + 1))
        frames = centroids[step] + cfg.noise_sigma * rng.standard_normal((length, cfg.dim))
        segments.append((step, frames))
        if pos > 0 and rng.random() < cfg.repeat_rate:
            segments.append(segments[int(rng.integers(0, len(segments) - 1))])
    real = [(step, f) for step, frames in segments for f in frames]
    out, labels = [], []
    idx = 0
    while idx < len(real):
        if cfg.background_rate > 0 and rng.random() < cfg.background_rate:
            out.append(_background_frame(centroids, cfg.step_separation, rng))
            labels.append(BACKGROUND)
        else:
            step, f = real[idx]
            out.append(f)
            labels.append(step)
            idx += 1
    return EmbeddingSequence(np.array(out)), GroundTruth(np.array(labels, dtype=int), tuple(int(s) for s in order))


def generate_pair(cfg: SynthConfig | None = None):
    """Two sequences visiting the same planted steps; ``y`` is reordered iff ``permute``.

    Returns ``(x, y, gt_x, gt_y)``; background frames carry label ``BACKGROUND``.
    """
    cfg = cfg or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    centroids = step_centroids(cfg.k, cfg.dim, cfg.step_separation, rng)
    order_x = list(range(cfg.k))
    order_y = list(range(cfg.k))
    if cfg.permute and cfg.k > 1:
        while order_y == order_x:
            order_y = [int(v) for v in rng.permutation(cfg.k)]
    x, gt_x = generate_sequence(cfg, centroids, order_x, rng)
    y, gt_y = generate_sequence(cfg, centroids, order_y, rng)
    return x, y, gt_x, gt_y
