"""Training objectives: contrastive IDM, inter-sequence contrast, combined loss.

These are evaluated on fixed embeddings; :func:`cidm_gradient` exists so the
intra-sequence loss can be checked against finite differences or handed to an
external optimizer.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import EmbeddingSequence

__all__ = ["LossConfig", "cidm_loss", "cidm_gradient", "inter_loss", "realign_loss"]


@dataclass(frozen=True)
class LossConfig:
    """Window ``delta``, hinge margin ``lambda3`` and combination weights.

    ``c1`` defaults to ``1/(N M)`` and is resolved by :func:`realign_loss`.
    """

    delta: int = 15
    lambda3: float = 2.0
    c1: float | None = None
    c2: float = 0.5
    c3: float = 1e-4

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not self.lambda3 > 0:
            raise ValueError("lambda3 must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _frames(x) -> np.ndarray:
    return (x if isinstance(x, EmbeddingSequence) else EmbeddingSequence(x)).data


def _pair_terms(x: np.ndarray, cfg: LossConfig):
    n = x.shape[0]
    lag = np.subtract.outer(np.arange(n), np.arange(n))
    gamma = lag.astype(float) ** 2 + 1.0
    neighbor = np.abs(lag) <= cfg.delta
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    return diff, d, gamma, neighbor


def cidm_loss(x, cfg: LossConfig | None = None) -> float:
    """Contrastive IDM over all ordered frame pairs.

    Pairs within ``delta`` steps are pulled together with weight ``1/gamma``;
    pairs further apart are pushed beyond ``lambda3`` with weight ``gamma``,
    where ``gamma = (i - j)^2 + 1``.
    """
    cfg = cfg or LossConfig()
    _, d, gamma, neighbor = _pair_terms(_frames(x), cfg)
    pull = d / gamma
    push = gamma * np.maximum(0.0, cfg.lambda3 - d)
    return float(np.sum(np.where(neighbor, pull, push)))


def cidm_gradient(x, cfg: LossConfig | None = None) -> np.ndarray:
    """Analytic gradient of :func:`cidm_loss` with respect to every frame.

    Subgradient conventions: coincident frames (``d = 0``) and pairs sitting
    exactly on the margin (``d = lambda3``) contribute zero.
    """
    cfg = cfg or LossConfig()
    diff, d, gamma, neighbor = _pair_terms(_frames(x), cfg)
    slope = np.where(neighbor, 1.0 / gamma, np.where(d < cfg.lambda3, -gamma, 0.0))
    unit = np.divide(diff, d[:, :, None], out=np.zeros_like(diff), where=d[:, :, None] > 0)
    # each unordered pair appears twice (i, j) and (j, i) with identical terms
    return 2.0 * np.einsum("ij,ijk->ik", slope, unit)


def inter_loss(plan, x, y, axis: str = "both") -> float:
    """Two-way contrast between best- and worst-matched cross-sequence pairs.

    For each real row (``axis="rows"``), column (``"cols"``) or both, the
    best and worst matches are the real argmax/argmin of the plan (ties go
    to the smallest index). The mean embedding distances of those pairs are
    scored with a softmax cross-entropy against target ``[0, 1]``, i.e.
    ``log(1 + exp(best - worst))``.
    """
    if axis not in ("rows", "cols", "both"):
        raise ValueError("axis must be 'rows', 'cols' or 'both'")
    xs, ys = _frames(x), _frames(y)
    n, m = xs.shape[0], ys.shape[0]
    t = np.asarray(getattr(plan, "data", plan), dtype=float)
    if t.shape not in ((n, m), (n + 1, m + 1)):
        raise ValueError(f"plan shape {t.shape} does not match sequences ({n}, {m})")
    real = t[:n, :m]
    if n == 0 or m == 0:
        raise ValueError("real blocks must be non-empty")
    best: list[float] = []
    worst: list[float] = []
    if axis in ("rows", "both"):
        best.extend(np.linalg.norm(xs - ys[real.argmax(1)], axis=1))
        worst.extend(np.linalg.norm(xs - ys[real.argmin(1)], axis=1))
    if axis in ("cols", "both"):
        best.extend(np.linalg.norm(xs[real.argmax(0)] - ys, axis=1))
        worst.extend(np.linalg.norm(xs[real.argmin(0)] - ys, axis=1))
    b = math.fsum(best) / len(best)
    w = math.fsum(worst) / len(worst)
    return float(np.logaddexp(0.0, b - w))


def realign_loss(parts: dict, cfg: LossConfig | None = None, n: int | None = None, m: int | None = None) -> float:
    """Weighted sum ``c1 * objective + c2 * (cidm_x + cidm_y) + c3 * inter``.

    ``parts`` carries ``rfpgwot_objective``, ``cidm_x``, ``cidm_y`` and
    ``inter``. Without an explicit ``c1`` the weight is ``1/(n m)``.
    """
    cfg = cfg or LossConfig()
    keys = ("rfpgwot_objective", "cidm_x", "cidm_y", "inter")
    missing = [k for k in keys if k not in parts]
    if missing:
        raise ValueError(f"missing loss parts: {missing}")
    vals = {k: float(parts[k]) for k in keys}
    if not all(math.isfinite(v) for v in vals.values()):
        raise ValueError("loss parts must be finite")
    c1 = cfg.c1
    if c1 is None:
        if n is None or m is None:
            raise ValueError("c1 defaults to 1/(N M): pass n and m or set c1")
        c1 = 1.0 / (n * m)
    return c1 * vals["rfpgwot_objective"] + cfg.c2 * (vals["cidm_x"] + vals["cidm_y"]) + cfg.c3 * vals["inter"]
