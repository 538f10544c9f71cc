"""Appearance costs, temporal structure matrices and virtual-frame augmentation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EmbeddingSequence",
    "CostMatrix",
    "StructureMatrix",
    "VirtualCostPolicy",
    "pairwise_cost",
    "structure_matrix",
    "augment_virtual",
    "augment_structure",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EmbeddingSequence:
    """A (length, dim) block of frame embeddings with implicit unit time steps."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"embedding sequence must be 2-D and non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("embedding sequence contains non-finite entries")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class CostMatrix:
    data: np.ndarray
    augmented: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValueError("cost matrix must be 2-D")
        if not np.all(np.isfinite(data)) or np.any(data < 0):
            raise ValueError("cost entries must be finite and nonnegative")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class StructureMatrix:
    data: np.ndarray
    option: str = "A"
    scale: float = 2.0
    augmented: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError("structure matrix must be square")
        if self.option not in ("A", "B"):
            raise ValueError(f"unknown structure option {self.option!r}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def size(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class VirtualCostPolicy:
    """Virtual cost = max(factor * reference, floor).

    ``reference="max"`` uses the largest cost entry. ``reference="nn_median"``
    uses the median nearest-neighbour cost over all rows and columns, i.e. a
    typical cost of a frame's best match; a small multiple of it prices the
    sink between genuine matches and outliers.
    """

    factor: float = 2.0
    floor: float = 1.0
    reference: str = "max"

    def __post_init__(self):
        if self.reference not in ("max", "nn_median"):
            raise ValueError(f"unknown virtual cost reference {self.reference!r}")
        if not self.factor > 0:
            raise ValueError("virtual cost factor must be positive")

    def value(self, c: np.ndarray) -> float:
        c = np.asarray(c, dtype=float)
        if c.size == 0:
            ref = 0.0
        elif self.reference == "max":
            ref = float(np.max(c))
        else:
            ref = float(np.median(np.concatenate([c.min(axis=1), c.min(axis=0)])))
        return max(self.factor * ref, self.floor)


def pairwise_cost(x: EmbeddingSequence, y: EmbeddingSequence, metric: str = "euclidean") -> CostMatrix:
    """Cross-sequence appearance cost.

    ``euclidean`` gives ``||x_i - y_j||``; ``cosine`` gives ``1 - cos(x_i, y_j)``
    (zero vectors are treated as orthogonal to everything).
    """
    if not isinstance(x, EmbeddingSequence):
        x = EmbeddingSequence(x)
    if not isinstance(y, EmbeddingSequence):
        y = EmbeddingSequence(y)
    if x.dim != y.dim:
        raise ValueError(f"embedding dimension mismatch: {x.dim} vs {y.dim}")
    a, b = x.data, y.data
    diff = a[:, None, :] - b[None, :, :]
    if metric == "euclidean":
        c = np.sqrt((diff * diff).sum(axis=2))
    elif metric == "cosine":
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        denom = np.outer(na, nb)
        dot = (a[:, None, :] * b[None, :, :]).sum(axis=2)
        sim = np.divide(dot, denom, out=np.zeros_like(dot), where=denom > 0)
        c = np.clip(1.0 - sim, 0.0, 2.0)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return CostMatrix(c)


def structure_matrix(length: int, option: str = "A", scale: float = 2.0, kernel: str = "laplace") -> StructureMatrix:
    """Temporal proximity matrix over ``length`` frames.

    Option A is a Toeplitz PSD kernel, ``exp(-|i-i'|/scale)`` (laplace) or
    ``exp(-(i-i')^2 / (2 scale^2))`` (gaussian). Option B is the raw lag
    ``|i-i'| / length``, bounded in [0, 1).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if not scale > 0:
        raise ValueError("scale must be positive")
    lag = np.abs(np.subtract.outer(np.arange(length), np.arange(length))).astype(float)
    if option == "A":
        if kernel == "laplace":
            data = np.exp(-lag / scale)
        elif kernel == "gaussian":
            data = np.exp(-(lag**2) / (2.0 * scale**2))
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
    elif option == "B":
        data = lag / length
    else:
        raise ValueError(f"unknown structure option {option!r}")
    return StructureMatrix(data, option=option, scale=float(scale))


def augment_virtual(c: CostMatrix, policy: VirtualCostPolicy | None = None) -> CostMatrix:
    """Append the virtual row and column, all set to the policy's cost."""
    if c.augmented:
        raise ValueError("cost matrix is already augmented")
    policy = policy or VirtualCostPolicy()
    value = policy.value(c.data)
    n, m = c.shape
    out = np.full((n + 1, m + 1), value)
    out[:n, :m] = c.data
    return CostMatrix(out, augmented=True)


def augment_structure(s: StructureMatrix) -> StructureMatrix:
    """Append a zero row/column so the virtual frame has no temporal relations."""
    if s.augmented:
        raise ValueError("structure matrix is already augmented")
    n = s.size
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = s.data
    return StructureMatrix(out, option=s.option, scale=s.scale, augmented=True)
