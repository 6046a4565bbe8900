"""Core data model: datasets, time grids, partitions and their entropy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.utils import check_array

__all__ = [
    "Dataset",
    "TimeGrid",
    "Clustering",
    "PartitionViolation",
    "smi",
    "validate_partition",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """N points in R^n. Point identity is the row index and is never reordered."""

    points: np.ndarray

    def __post_init__(self):
        pts = check_array(
            self.points, ensure_2d=False, dtype=np.float64, ensure_all_finite=True
        )
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ValueError("points must be a 2D array of shape (N, n) with n >= 1")
        if pts.shape[0] < 1:
            raise ValueError("dataset must contain at least one point")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.N

    def subset(self, indices) -> "Dataset":
        return Dataset(self.points[np.asarray(indices, dtype=int)])

    def diameter(self) -> float:
        """Largest pairwise Euclidean distance."""
        if self.N < 2:
            return 0.0
        if self.n == 1:
            return float(np.ptp(self.points[:, 0]))
        from scipy.spatial.distance import pdist

        return float(pdist(self.points).max())


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing positive times t_0 < ... < t_T."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).ravel()
        if t.size < 2:
            raise ValueError("a time grid needs at least two times")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise ValueError("times must be finite and positive")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", _frozen(t))

    @classmethod
    def uniform(cls, t0: float, t_max: float, slices: int) -> "TimeGrid":
        if not t0 < t_max:
            raise ValueError("degenerate time range")
        if slices < 2:
            raise ValueError("slice count must be at least 2")
        return cls(np.linspace(t0, t_max, int(slices)))

    @property
    def T(self) -> int:
        return self.times.size - 1

    def __len__(self):
        return self.times.size

    def __getitem__(self, k):
        return self.times[k]


@dataclass(frozen=True, eq=False)
class Clustering:
    """A partition of point indices 0..N-1 into M nonempty labelled clusters.

    Use :meth:`from_labels` to build one from arbitrary integer labels; the
    constructor expects labels that are already dense.
    """

    labels: np.ndarray
    time_index: Optional[int] = None
    degenerate: bool = False

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if lab.size and not np.issubdtype(lab.dtype, np.integer):
            raise ValueError("labels must be integers")
        object.__setattr__(self, "labels", _frozen(lab.astype(np.int64)))

    @classmethod
    def from_labels(cls, raw, order: str = "first", **kwargs) -> "Clustering":
        """Densify arbitrary labels to 0..M-1.

        ``order="first"`` numbers clusters by first occurrence in point order;
        ``order="sorted"`` keeps the ascending order of the raw labels.
        """
        raw = np.asarray(raw)
        if order == "sorted":
            _, dense = np.unique(raw, return_inverse=True)
        elif order == "first":
            _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
            rank = np.empty(first.size, dtype=np.int64)
            rank[np.argsort(first, kind="stable")] = np.arange(first.size)
            dense = rank[inverse]
        else:
            raise ValueError(f"unknown label order {order!r}")
        return cls(np.asarray(dense, dtype=np.int64).ravel(), **kwargs)

    @property
    def N(self) -> int:
        return self.labels.size

    @property
    def M(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.M)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def clusters(self) -> list:
        """Point-index arrays per label, in label order."""
        return [self.members(i) for i in range(self.M)]

    def canonical(self) -> frozenset:
        """Label-free form of the partition, for comparisons."""
        return frozenset(frozenset(c.tolist()) for c in self.clusters())

    def entropy(self) -> float:
        return smi(self.sizes)


def smi(sizes, total: Optional[int] = None) -> float:
    """Shannon measure of information of a partition, in bits.

    Parameters
    ----------
    sizes : sequence of int or Clustering
        Cluster cardinalities N_i (all >= 1).
    total : int, optional
        N; defaults to ``sum(sizes)`` and must agree with it when given.
    """
    if isinstance(sizes, Clustering):
        sizes = sizes.sizes
    s = np.asarray(sizes, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError("empty partition")
    if np.any(s < 1):
        raise ValueError("every cluster size must be at least 1")
    n_total = s.sum()
    if total is not None and total != n_total:
        raise ValueError(f"total {total} does not match sum of sizes {n_total:g}")
    if s.size == 1:
        return 0.0
    p = s / n_total
    return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class PartitionViolation:
    kind: str  # "size mismatch" | "unlabeled point" | "label out of range" | "empty label"
    message: str
    label: Optional[int] = None

    def __str__(self):
        return self.message


def validate_partition(
    clustering: Clustering, dataset: Dataset, M: Optional[int] = None
) -> Optional[PartitionViolation]:
    """Return ``None`` if ``clustering`` is a valid partition of ``dataset``.

    ``M`` is the declared cluster count; it defaults to ``clustering.M``.
    """
    labels = clustering.labels
    if labels.size != dataset.N:
        return PartitionViolation(
            "size mismatch", f"size mismatch: {labels.size} labels for {dataset.N} points"
        )
    if np.any(labels < 0):
        i = int(np.flatnonzero(labels < 0)[0])
        return PartitionViolation("unlabeled point", f"unlabeled point {i}")
    M = clustering.M if M is None else int(M)
    if labels.size and labels.max() >= M:
        return PartitionViolation(
            "label out of range", "label out of range", int(labels.max())
        )
    counts = np.bincount(labels, minlength=M)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        return PartitionViolation(
            "empty label", f"empty label {int(empty[0])}", int(empty[0])
        )
    return None


def as_dataset(X) -> Dataset:
    return X if isinstance(X, Dataset) else Dataset(X)


def as_timegrid(times: Sequence[float] | TimeGrid) -> TimeGrid:
    return times if isinstance(times, TimeGrid) else TimeGrid(times)
