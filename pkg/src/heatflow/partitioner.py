"""Turn a potential field into a clustering at one time slice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dataspace import Clustering, as_dataset
from .potential import (
    Kernel,
    PotentialField,
    SamplingGrid,
    eval_field,
    exact_evaluator,
    find_local_maxima,
    find_local_minima_1d,
)

__all__ = [
    "CostEvaluation",
    "DegenerateNormalization",
    "cluster_1d",
    "path_cost",
    "assign_nd",
    "cluster_at_time",
    "COST_EPS",
    "DEFAULT_SAMPLES",
]

COST_EPS = 1e-9
COST_TIE = 1e-6
DIST_TIE = 1e-12
NORM_FLOOR = 1e-12
DEFAULT_SAMPLES = 256


class DegenerateNormalization(ValueError):
    """|P(x) - P(m)| is too small to normalize the path variation."""


@dataclass(frozen=True)
class CostEvaluation:
    point: int
    maximum: np.ndarray
    cost: float
    samples: int


def cluster_1d(dataset, field: PotentialField) -> Clustering:
    """Minimum-partition clustering of 1D data.

    The line is cut at the local minima of the field into segments closed on
    the left; each point joins the segment it falls in. Empty segments are
    dropped and labels follow the segments left to right.
    """
    ds = as_dataset(dataset)
    if ds.n != 1:
        raise ValueError("cluster_1d needs one-dimensional data")
    minima = find_local_minima_1d(field)
    segment = np.searchsorted(minima, ds.points[:, 0], side="right")
    return Clustering.from_labels(segment, order="sorted")


def _sampled_variation(P: Callable, x: np.ndarray, m: np.ndarray, samples: int):
    """Total variation of P along straight segments x -> m.

    ``x`` and ``m`` broadcast to (..., n). Returns (variation, |P(x) - P(m)|).
    """
    s = np.linspace(0.0, 1.0, samples)
    x = np.asarray(x, dtype=np.float64)[..., None, :]
    m = np.asarray(m, dtype=np.float64)[..., None, :]
    path = (1.0 - s)[:, None] * x + s[:, None] * m
    vals = P(path)
    tv = np.abs(np.diff(vals, axis=-1)).sum(axis=-1)
    return tv, np.abs(vals[..., 0] - vals[..., -1])


def path_cost(P: Callable, x, m, samples: int = DEFAULT_SAMPLES) -> float:
    """Normalized total variation of the potential along the segment x -> m.

    ``P`` maps an array of points (coordinate axis last) to potential values.
    The segment is sampled at ``samples`` uniformly spaced points including
    both ends. The result is at least 1 and equals 1 exactly when P is
    monotone along the segment.

    Raises
    ------
    DegenerateNormalization
        If ``|P(x) - P(m)| < 1e-12``.
    """
    if samples < 2:
        raise ValueError("path needs at least 2 samples")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    tv, norm = _sampled_variation(P, x, m, int(samples))
    if norm < NORM_FLOOR:
        raise DegenerateNormalization("degenerate normalization")
    return float(tv / norm)


def _cost_matrix(P, points, maxima, samples):
    tv, norm = _sampled_variation(P, points[:, None, :], maxima[None, :, :], samples)
    cost = np.full(tv.shape, np.inf)
    ok = norm >= NORM_FLOOR
    cost[ok] = tv[ok] / norm[ok]
    # flat path (including a point sitting on the maximum) is ideal
    cost[~ok & (tv < NORM_FLOOR)] = 1.0
    return cost


def assign_nd(
    dataset,
    P: Callable,
    maxima,
    samples: int = DEFAULT_SAMPLES,
    *,
    time_index: Optional[int] = None,
) -> Clustering:
    """Assign every point to the local maximum with the cheapest path.

    Cost ties (within 1e-6) go to the nearest maximum, and distance ties
    (within 1e-12) to the lowest maximum index. Maxima that receive no points
    are dropped; labels follow maxima order.
    """
    ds = as_dataset(dataset)
    maxima = np.asarray(maxima, dtype=np.float64).reshape(-1, ds.n)
    if maxima.shape[0] == 0:
        raise ValueError("assign_nd needs at least one maximum")
    if maxima.shape[0] == 1:
        return Clustering(np.zeros(ds.N, dtype=np.int64), time_index=time_index)

    cost = _cost_matrix(P, ds.points, maxima, int(samples))
    dist = np.linalg.norm(ds.points[:, None, :] - maxima[None, :, :], axis=-1)

    best_cost = cost.min(axis=1, keepdims=True)
    tied = cost <= best_cost + COST_TIE
    if np.all(np.isinf(best_cost)):
        # no point has a usable path to any maximum
        return Clustering(
            np.zeros(ds.N, dtype=np.int64), time_index=time_index, degenerate=True
        )
    tied |= np.isinf(best_cost)  # isolated rows fall back to nearest
    d = np.where(tied, dist, np.inf)
    near = d.min(axis=1, keepdims=True)
    choice = np.argmax(d <= near + DIST_TIE, axis=1)
    return Clustering.from_labels(choice, order="sorted", time_index=time_index)


def cluster_at_time(
    dataset,
    kernel: Kernel,
    t: float,
    grid: SamplingGrid,
    samples: int = DEFAULT_SAMPLES,
    *,
    time_index: Optional[int] = None,
    exact: bool = False,
) -> Clustering:
    """Cluster the data from the potential at time ``t``.

    One-dimensional data uses minimum-partition clustering; higher dimensions
    assign points to field maxima by path cost. ``exact=True`` evaluates the
    potential directly along paths instead of interpolating the grid.
    """
    ds = as_dataset(dataset)
    field = eval_field(ds, kernel, t, grid)
    if ds.n == 1:
        c = cluster_1d(ds, field)
        return Clustering(c.labels, time_index=time_index, degenerate=field.is_constant)
    maxima = find_local_maxima(field)
    if maxima.shape[0] == 0:
        return Clustering(np.zeros(ds.N, dtype=np.int64), time_index=time_index, degenerate=True)
    P = exact_evaluator(ds, kernel, t) if exact else field.interpolator()
    return assign_nd(ds, P, maxima, samples, time_index=time_index)
