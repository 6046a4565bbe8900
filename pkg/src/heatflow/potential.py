"""Time-rescaled kernels, potential fields on sampling grids, and their extrema."""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi, sqrt
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import ndimage

from .dataspace import as_dataset

__all__ = [
    "Kernel",
    "SamplingGrid",
    "PotentialField",
    "kernel_at",
    "eval_potential",
    "eval_field",
    "exact_evaluator",
    "find_local_maxima",
    "find_local_minima_1d",
    "default_resolution",
]

FAMILIES = ("gaussian", "exponential")

# Points per chunk when summing kernels over grid nodes.
_CHUNK = 1 << 22


@dataclass(frozen=True)
class Kernel:
    """A radial kernel profile with unit integral over R^n.

    Parameters
    ----------
    family : {"gaussian", "exponential"}
        ``gaussian`` is ``exp(-|x|^2 / (2 scale^2))`` and ``exponential`` is
        ``exp(-|x| / scale)``, each with its analytic normalization.
    scale : float
        Width of the base profile at ``t = 1``. For the Gaussian this is the
        per-axis standard deviation; ``scale=sqrt(2)`` gives the heat-kernel
        profile ``exp(-|x|^2 / 4)``.
    """

    family: str = "gaussian"
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.scale > 0:
            raise ValueError("kernel scale must be positive")

    def norm(self, n: int) -> float:
        """Normalization constant of the base profile in dimension n."""
        s = self.scale
        if self.family == "gaussian":
            return (2.0 * pi * s * s) ** (-n / 2.0)
        # integral of exp(-r) over R^n is the sphere area times Gamma(n)
        return gamma(n / 2.0) / (2.0 * pi ** (n / 2.0) * gamma(n)) / s**n

    def std(self, t: float, n: int = 1) -> float:
        """Per-axis standard deviation of K(., t)."""
        if self.family == "gaussian":
            return t * self.scale
        return t * self.scale * sqrt(n + 1.0)

    def time_for_std(self, std: float, n: int = 1) -> float:
        return std / self.std(1.0, n)

    def profile(self, sq_norm: np.ndarray, n: int) -> np.ndarray:
        """Base profile k evaluated from squared norms."""
        s = self.scale
        if self.family == "gaussian":
            return self.norm(n) * np.exp(-0.5 * sq_norm / (s * s))
        return self.norm(n) * np.exp(-np.sqrt(sq_norm) / s)


def _check_time(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise ValueError("nonpositive time")
    return t


def kernel_at(kernel: Kernel, x, t: float, n: Optional[int] = None):
    """Rescaled kernel K(x, t) = t^-n k(x / t).

    ``x`` may be a scalar (1D), a vector of length n, or an array of vectors
    with the coordinate axis last.
    """
    t = _check_time(t)
    x = np.asarray(x, dtype=np.float64)
    if n is None:
        n = 1 if x.ndim == 0 else x.shape[-1]
    if x.ndim == 0:
        sq = x * x
    else:
        if x.shape[-1] != n:
            raise ValueError(f"dimension mismatch: expected {n}, got {x.shape[-1]}")
        sq = np.einsum("...i,...i->...", x, x)
    out = kernel.profile(sq / (t * t), n) / t**n
    return float(out) if np.ndim(out) == 0 else out


def _sum_kernels(points: np.ndarray, kernel: Kernel, t: float, x: np.ndarray) -> np.ndarray:
    """(1/N) sum_l K(x - x_l, t) for each row of x, chunked over rows."""
    N, n = points.shape
    out = np.empty(x.shape[0])
    rows = max(1, _CHUNK // max(N, 1))
    for start in range(0, x.shape[0], rows):
        xs = x[start : start + rows]
        diff = xs[:, None, :] - points[None, :, :]
        sq = np.einsum("gli,gli->gl", diff, diff)
        out[start : start + rows] = (kernel.profile(sq / (t * t), n) / t**n).sum(axis=1)
    return out / N


def eval_potential(dataset, kernel: Kernel, t: float, x):
    """Potential P(x, t) = (1/N) sum_l K(x - x_l, t).

    ``x`` may be a single point or an array of points (coordinate axis last).
    """
    ds = as_dataset(dataset)
    t = _check_time(t)
    xa = np.asarray(x, dtype=np.float64)
    if ds.n == 1 and (xa.ndim == 0 or xa.shape[-1] != 1):
        xa = xa[..., None]
    if xa.shape[-1] != ds.n:
        raise ValueError(f"dimension mismatch: dataset has n={ds.n}, x has {xa.shape[-1]}")
    lead = xa.shape[:-1]
    vals = _sum_kernels(ds.points, kernel, t, xa.reshape(-1, ds.n))
    return float(vals[0]) if lead == () else vals.reshape(lead)


def exact_evaluator(dataset, kernel: Kernel, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Off-grid potential accessor that re-sums all kernels (exact mode)."""
    ds = as_dataset(dataset)
    t = _check_time(t)

    def evaluate(x):
        x = np.asarray(x, dtype=np.float64)
        return _sum_kernels(ds.points, kernel, t, x.reshape(-1, ds.n)).reshape(x.shape[:-1])

    return evaluate


MAX_GRID_NODES = 2**24


def default_resolution(n: int) -> int:
    if n == 1:
        return 1024
    if n == 2:
        return 128
    return 32


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Regular axis-aligned grid of nodes, including both box corners."""

    lo: np.ndarray
    hi: np.ndarray
    resolution: tuple

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        res = np.broadcast_to(np.asarray(self.resolution, dtype=int), lo.shape)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(hi <= lo):
            raise ValueError("grid box must have positive extent on every axis")
        if np.any(res < 16):
            raise ValueError("grid resolution must be at least 16 per axis")
        total = int(np.prod(res.astype(np.float64)))
        if total > MAX_GRID_NODES:
            raise ValueError(
                f"grid of {total} nodes exceeds the limit of {MAX_GRID_NODES}; "
                "lower the resolution or reduce the dimension"
            )
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))

    @classmethod
    def around(
        cls,
        dataset,
        max_std: float,
        resolution: Optional[int | Sequence[int]] = None,
        margin: float = 4.0,
    ) -> "SamplingGrid":
        """Bounding box of the data padded by ``margin * max_std`` per side."""
        ds = as_dataset(dataset)
        if margin < 3:
            raise ValueError("grid margin must be at least 3 kernel standard deviations")
        if resolution is None:
            resolution = default_resolution(ds.n)
        pad = margin * max_std
        lo = ds.points.min(axis=0) - pad
        hi = ds.points.max(axis=0) + pad
        return cls(lo, hi, resolution)

    @property
    def n(self) -> int:
        return self.lo.size

    @property
    def shape(self) -> tuple:
        return self.resolution

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / (np.asarray(self.resolution) - 1)

    @property
    def axes(self) -> tuple:
        return tuple(np.linspace(a, b, r) for a, b, r in zip(self.lo, self.hi, self.resolution))

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (prod(resolution), n), C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def coords(self, index) -> np.ndarray:
        index = np.asarray(index)
        return np.stack([ax[index[..., d]] for d, ax in enumerate(self.axes)], axis=-1)

    def contains(self, points: np.ndarray, margin: float = 0.0) -> bool:
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.n)
        return bool(
            np.all(points.min(axis=0) - margin >= self.lo)
            and np.all(points.max(axis=0) + margin <= self.hi)
        )


@dataclass(frozen=True, eq=False)
class PotentialField:
    grid: SamplingGrid
    values: np.ndarray
    time: float

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("potential values must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_constant(self) -> bool:
        return bool(np.ptp(self.values) == 0)

    def interpolator(self) -> Callable[[np.ndarray], np.ndarray]:
        """Multilinear off-grid accessor, coordinate axis last."""
        lo, h = self.grid.lo, self.grid.spacing
        values = self.values

        def evaluate(x):
            x = np.asarray(x, dtype=np.float64)
            idx = (x.reshape(-1, lo.size) - lo) / h
            out = ndimage.map_coordinates(values, idx.T, order=1, mode="nearest")
            return out.reshape(x.shape[:-1])

        return evaluate


def eval_field(dataset, kernel: Kernel, t: float, grid: SamplingGrid) -> PotentialField:
    """Potential evaluated at every grid node."""
    ds = as_dataset(dataset)
    t = _check_time(t)
    if grid.n != ds.n:
        raise ValueError(f"dimension mismatch: grid n={grid.n}, dataset n={ds.n}")
    if not grid.contains(ds.points, 3.0 * kernel.std(t, ds.n)):
        raise ValueError("sampling grid margin is below 3 kernel standard deviations")
    if kernel.family == "gaussian":
        vals = _separable_gaussian(ds.points, kernel, t, grid)
    else:
        vals = _sum_kernels(ds.points, kernel, t, grid.nodes())
    return PotentialField(grid, vals.reshape(grid.shape), t)


def _separable_gaussian(points, kernel: Kernel, t: float, grid: SamplingGrid) -> np.ndarray:
    """Gaussian field on a regular grid as a product of per-axis factors."""
    N, n = points.shape
    w = t * kernel.scale
    factors = [
        np.exp(-0.5 * ((ax[None, :] - points[:, d : d + 1]) / w) ** 2)
        for d, ax in enumerate(grid.axes)
    ]
    acc = factors[0]
    for f in factors[1:-1]:
        acc = (acc[:, :, None] * f[:, None, :]).reshape(N, -1)
    vals = acc.sum(axis=0) if n == 1 else acc.T @ factors[-1]
    return vals.reshape(grid.shape) * (kernel.norm(n) / t**n / N)


def _extrema_indices(values: np.ndarray, maxima: bool = True) -> list:
    """Interior strict extrema, with each flat plateau reported once.

    Returns index tuples in lexicographic order.
    """
    v = values if maxima else -values
    nd = v.ndim
    footprint = np.ones((3,) * nd, dtype=bool)
    neighbours = footprint.copy()
    neighbours[(1,) * nd] = False
    nb = ndimage.maximum_filter(v, footprint=neighbours, mode="constant", cval=-np.inf)

    interior = np.zeros(v.shape, dtype=bool)
    interior[(slice(1, -1),) * nd] = True

    found = [tuple(int(j) for j in i) for i in np.argwhere((v > nb) & interior)]

    plateau = (v == nb) & interior
    if plateau.any():
        comps, count = ndimage.label(plateau, structure=footprint)
        for label, box in enumerate(ndimage.find_objects(comps), start=1):
            # widen the box by one node to see the ring around the component
            wide = tuple(slice(max(s.start - 1, 0), s.stop + 1) for s in box)
            comp = comps[wide] == label
            ring = ndimage.binary_dilation(comp, structure=footprint) & ~comp
            level = v[wide][comp][0]
            # equal-valued border nodes land in the ring, so plateaus that
            # reach the border are rejected here too
            if ring.any() and v[wide][ring].max() < level:
                first = np.argwhere(comp)[0] + [s.start for s in wide]
                found.append(tuple(int(i) for i in first))
    found.sort()
    return found


def find_local_maxima(field: PotentialField) -> np.ndarray:
    """Grid coordinates of local maxima, shape (m, n), lexicographic order.

    An empty result means the field is constant (degenerate).
    """
    idx = _extrema_indices(field.values, maxima=True)
    if not idx:
        return np.empty((0, field.grid.n))
    return field.grid.coords(np.array(idx))


def find_local_minima_1d(field: PotentialField) -> np.ndarray:
    """Positions of interior local minima of a 1D field, increasing."""
    if field.grid.n != 1:
        raise ValueError("find_local_minima_1d needs a one-dimensional field")
    idx = _extrema_indices(field.values, maxima=False)
    if not idx:
        return np.empty(0)
    return field.grid.axes[0][np.array(idx)[:, 0]]
