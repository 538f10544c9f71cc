"""Laplace alignment priors, IDM structural scores and the phi schedule.

Indices follow the 1-based convention of the alignment formulas: frame ``i``
of an ``n``-frame sequence runs over ``1..n`` and the virtual frame is ``n+1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PriorMatrix",
    "ScoreMatrix",
    "anneal_phi",
    "default_center",
    "laplace_prior",
    "idm_score",
    "idm_value",
    "augment_prior",
    "uniform_prior",
]


@dataclass(frozen=True)
class PriorMatrix:
    data: np.ndarray
    phi: float
    center: tuple[int, int]
    augmented: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if np.any(~np.isfinite(data)) or np.any(data <= 0):
            raise ValueError("prior must be strictly positive and finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class ScoreMatrix:
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


def anneal_phi(step: int, total_steps: int) -> float:
    """Linear schedule from 1 at ``step=0`` to 0.5 at ``step=total_steps``."""
    if total_steps <= 0:
        raise ValueError("total_steps must be positive")
    if step < 0 or step > total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    return 1.0 - 0.5 * (step / total_steps)


def default_center(n: int, m: int) -> tuple[int, int]:
    return (math.ceil(n / 2), math.ceil(m / 2))


def _check_center(n: int, m: int, center) -> tuple[int, int]:
    i_o, j_o = int(center[0]), int(center[1])
    if not (1 <= i_o <= n and 1 <= j_o <= m):
        raise ValueError(f"center {center} outside 1..{n} x 1..{m}")
    return i_o, j_o


def laplace_prior(n: int, m: int, b: float = 2.0, phi: float = 1.0, center=None) -> PriorMatrix:
    """Mixture of a temporal (diagonal) and an optimality (centered) Laplace prior."""
    if n < 1 or m < 1:
        raise ValueError("prior dimensions must be positive")
    if not b > 0:
        raise ValueError("Laplace scale b must be positive")
    if not 0.5 <= phi <= 1.0:
        raise ValueError(f"phi={phi} outside [0.5, 1]")
    center = default_center(n, m) if center is None else center
    i_o, j_o = _check_center(n, m, center)
    i = np.arange(1, n + 1)[:, None] / n
    j = np.arange(1, m + 1)[None, :] / m
    norm = math.sqrt(1.0 / n**2 + 1.0 / m**2)
    d_t = np.abs(i - j) / norm
    d_o = (np.abs(i - i_o / n) + np.abs(j - j_o / m)) / (2.0 * norm)
    q = phi * np.exp(-d_t / b) + (1.0 - phi) * np.exp(-d_o / b)
    return PriorMatrix(q, phi=float(phi), center=(i_o, j_o))


def uniform_prior(n: int, m: int, value: float = 1.0) -> PriorMatrix:
    """Flat prior used when the Laplace priors are ablated."""
    return PriorMatrix(np.full((n, m), float(value)), phi=1.0, center=default_center(n, m))


def idm_score(n: int, m: int, lambda1: float, center=None) -> ScoreMatrix:
    """Per-entry IDM reward injected into the kernel exponent.

    Returned on the augmented ``(n+1, m+1)`` grid; all index ratios use the
    augmented sizes ``n+1`` and ``m+1``.
    """
    if lambda1 < 0:
        raise ValueError("lambda1 must be nonnegative")
    center = default_center(n, m) if center is None else center
    i_o, j_o = int(center[0]), int(center[1])
    i = np.arange(1, n + 2)[:, None]
    j = np.arange(1, m + 2)[None, :]
    diag = 1.0 / ((i / (n + 1) - j / (m + 1)) ** 2 + 1.0)
    d_m = ((i - i_o) / (n + 1)) ** 2 + ((j - j_o) / (m + 1)) ** 2
    ridge = 1.0 / (0.5 * d_m + 1.0)
    return ScoreMatrix(lambda1 * (diag + ridge))


def idm_value(plan, n: int, m: int, phi: float = 1.0, center=None) -> float:
    """IDM reward of a plan, summed over its real ``n x m`` block.

    The diagonal term normalizes indices by the real sizes ``n, m``; the ridge
    distance uses ``n+1, m+1``.
    """
    t = np.asarray(plan, dtype=float)[:n, :m]
    center = default_center(n, m) if center is None else center
    i_o, j_o = int(center[0]), int(center[1])
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, m + 1)[None, :]
    w_diag = 1.0 / ((i / n - j / m) ** 2 + 1.0)
    d_m = ((i - i_o) / (n + 1)) ** 2 + ((j - j_o) / (m + 1)) ** 2
    w_ridge = 1.0 / (0.5 * d_m + 1.0)
    return float(phi * np.sum(t * w_diag) + (1.0 - phi) * np.sum(t * w_ridge))


def augment_prior(q: PriorMatrix, virtual_value: float | None = None) -> PriorMatrix:
    """Append a virtual row and column filled with ``virtual_value``.

    Defaults to ``1/((n+1)(m+1))``.
    """
    if q.augmented:
        raise ValueError("prior is already augmented")
    n, m = q.data.shape
    if virtual_value is None:
        virtual_value = 1.0 / ((n + 1) * (m + 1))
    if not virtual_value > 0:
        raise ValueError("virtual prior value must be positive")
    out = np.full((n + 1, m + 1), float(virtual_value))
    out[:n, :m] = q.data
    return PriorMatrix(out, phi=q.phi, center=q.center, augmented=True)
