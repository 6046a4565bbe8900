"""Stability analytics over a heat flow of clusterings."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .dataspace import Clustering, TimeGrid, as_dataset, as_timegrid, smi
from .partitioner import DEFAULT_SAMPLES, cluster_at_time
from .potential import Kernel, SamplingGrid, eval_potential

logger = logging.getLogger(__name__)

__all__ = [
    "FlowResult",
    "StabilityTable",
    "LocalAnalysis",
    "StableCluster",
    "WGLLScan",
    "run_flow",
    "stability_score",
    "stability_table",
    "entropy_stability_score",
    "in_band",
    "consolidation_time",
    "horizon_index",
    "backtrack",
    "local_entropy_stability_score",
    "auto_time_bounds",
    "auto_flow_setup",
    "stable_cluster_driver",
    "wgll_entropy",
    "wgll_scan",
]

BAND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FlowResult:
    """One clustering per time slice, with cluster counts and entropies."""

    times: TimeGrid
    clusterings: tuple

    def __post_init__(self):
        object.__setattr__(self, "clusterings", tuple(self.clusterings))
        if len(self.clusterings) != len(self.times):
            raise ValueError("need exactly one clustering per time slice")

    @property
    def T(self) -> int:
        return self.times.T

    @property
    def N(self) -> int:
        return self.clusterings[0].N

    @property
    def M_series(self) -> np.ndarray:
        return np.array([c.M for c in self.clusterings], dtype=np.int64)

    @property
    def S_series(self) -> np.ndarray:
        return np.array([c.entropy() for c in self.clusterings])

    def __getitem__(self, k) -> Clustering:
        return self.clusterings[k]


@dataclass(frozen=True)
class StabilityTable:
    """B(n) for n = 1..N over the slices 0..horizon."""

    scores: dict
    horizon: int
    banded: dict = field(default_factory=dict)

    def argmax(self, min_clusters: int = 2) -> Optional[int]:
        """Smallest n >= min_clusters maximizing B(n); None if all such B are 0."""
        cands = [(b, -n) for n, b in self.scores.items() if n >= min_clusters]
        if not cands or max(cands)[0] == 0:
            return None
        return -max(cands)[1]

    def __getitem__(self, n):
        return self.scores.get(n, 0.0)


@dataclass(frozen=True, eq=False)
class LocalAnalysis:
    """Backtrack of a subset X' from anchor slice k to all earlier slices."""

    subset: np.ndarray
    k: int
    M_series: np.ndarray
    S_series: np.ndarray
    sizes: tuple  # per slice k' <= k: nonempty intersection sizes
    T: int


@dataclass(frozen=True, eq=False)
class StableCluster:
    indices: np.ndarray
    score: Optional[float]
    time: Optional[float]
    round: int = 0


@dataclass(frozen=True, eq=False)
class WGLLScan:
    times: np.ndarray
    entropy: np.ndarray
    minima: np.ndarray


def run_flow(
    dataset,
    kernel: Kernel,
    timegrid,
    grid: Optional[SamplingGrid] = None,
    samples: int = DEFAULT_SAMPLES,
    *,
    resolution=None,
    margin: float = 4.0,
    exact: bool = False,
    n_jobs: Optional[int] = None,
) -> FlowResult:
    """Cluster the dataset at every time of ``timegrid``.

    When ``grid`` is omitted one is built around the data with a margin of
    ``margin`` kernel standard deviations at the last time.
    """
    ds = as_dataset(dataset)
    tg = as_timegrid(timegrid)
    if grid is None:
        grid = SamplingGrid.around(ds, kernel.std(tg.times[-1], ds.n), resolution, margin)

    def one(k):
        return cluster_at_time(ds, kernel, tg[k], grid, samples, time_index=k, exact=exact)

    if n_jobs in (None, 1):
        clusterings = [one(k) for k in range(len(tg))]
    else:
        clusterings = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(one)(k) for k in range(len(tg))
        )
    return FlowResult(tg, clusterings)


def _horizon(flow: FlowResult, horizon: Optional[int]) -> int:
    if horizon is None:
        return flow.T
    if not 0 <= horizon <= flow.T:
        raise ValueError(f"horizon {horizon} outside 0..{flow.T}")
    return int(horizon)


def stability_score(flow: FlowResult, n: int, horizon: Optional[int] = None) -> float:
    """Fraction of slices 0..horizon that show exactly n clusters."""
    h = _horizon(flow, horizon)
    M = flow.M_series[: h + 1]
    return float(np.count_nonzero(M == n)) / (h + 1)


def in_band(S, s1: float, s2: float) -> np.ndarray:
    """Entropy band test s1 < S <= s2.

    Entropies are nonnegative, so a band starting at 0 also admits S = 0;
    the zero-width band (s, s] means S == s.
    """
    S = np.asarray(S, dtype=np.float64)
    if s1 > s2:
        raise ValueError("entropy band needs s1 <= s2")
    if s1 == s2:
        return np.abs(S - s1) <= BAND_TOL
    lower = S > s1
    if s1 == 0:
        lower |= S <= BAND_TOL
    return lower & (S <= s2 + BAND_TOL)


def entropy_stability_score(
    flow: FlowResult, n: int, s1: float, s2: float, horizon: Optional[int] = None
) -> float:
    """Fraction of slices with n clusters and entropy in the band (s1, s2]."""
    if not s1 < s2:
        raise ValueError("entropy band needs s1 < s2")
    h = _horizon(flow, horizon)
    M = flow.M_series[: h + 1]
    S = flow.S_series[: h + 1]
    return float(np.count_nonzero((M == n) & in_band(S, s1, s2))) / (h + 1)


def stability_table(
    flow: FlowResult,
    horizon: Optional[int] = None,
    band: Optional[tuple] = None,
) -> StabilityTable:
    h = _horizon(flow, horizon)
    scores = {n: stability_score(flow, n, h) for n in range(1, flow.N + 1)}
    banded = {}
    if band is not None:
        s1, s2 = band
        if s1 < s2:
            banded = {n: entropy_stability_score(flow, n, s1, s2, h) for n in scores}
        else:
            M = flow.M_series[: h + 1]
            inb = in_band(flow.S_series[: h + 1], s1, s2)
            banded = {n: float(np.count_nonzero((M == n) & inb)) / (h + 1) for n in scores}
    return StabilityTable(scores, h, banded)


def consolidation_time(flow: FlowResult) -> Optional[int]:
    """Smallest k with M_j == 1 for every j >= k, or None."""
    M = flow.M_series
    if M[-1] != 1:
        return None
    not_one = np.flatnonzero(M != 1)
    return 0 if not_one.size == 0 else int(not_one[-1]) + 1


def horizon_index(flow: FlowResult, truncate: bool = True) -> int:
    """Last slice of the analysis window.

    With ``truncate`` the window ends at the last slice before consolidation;
    otherwise, or when the flow never consolidates, it is the full grid.
    """
    c = consolidation_time(flow) if truncate else None
    if c is None:
        return flow.T
    return max(c - 1, 0)


def backtrack(flow: FlowResult, subset: Sequence[int], k: int) -> LocalAnalysis:
    """Restrict the clusterings at slices 0..k to ``subset``."""
    sub = np.unique(np.asarray(subset, dtype=np.int64))
    if sub.size == 0:
        raise ValueError("empty subset")
    if not 0 <= k <= flow.T:
        raise ValueError(f"time index {k} outside 0..{flow.T}")
    if sub[0] < 0 or sub[-1] >= flow.N:
        raise ValueError("subset index out of range")
    Ms, Ss, sizes = [], [], []
    for kk in range(k + 1):
        counts = np.bincount(flow[kk].labels[sub])
        counts = counts[counts > 0]
        sizes.append(tuple(int(c) for c in counts))
        Ms.append(counts.size)
        Ss.append(smi(counts))
    return LocalAnalysis(sub, int(k), np.array(Ms), np.array(Ss), tuple(sizes), flow.T)


def local_entropy_stability_score(
    analysis: LocalAnalysis, s1: float, s2: float, horizon: Optional[int] = None
) -> float:
    """Fraction of the horizon's slices k' <= k whose local entropy is in the band."""
    h = analysis.T if horizon is None else int(horizon)
    if h < 0:
        raise ValueError("horizon must be nonnegative")
    last = min(analysis.k, h)
    hits = np.count_nonzero(in_band(analysis.S_series[: last + 1], s1, s2))
    return float(hits) / (h + 1)


def auto_time_bounds(dataset, grid: SamplingGrid, kernel: Kernel) -> tuple:
    """Time range from the data diameter and the grid spacing.

    The last time gives a kernel standard deviation of half the diameter;
    the first gives twice the largest grid spacing.
    """
    ds = as_dataset(dataset)
    diam = ds.diameter()
    if not diam > 0:
        raise ValueError("zero diameter")
    t_max = kernel.time_for_std(diam / 2.0, ds.n)
    t0 = kernel.time_for_std(2.0 * float(np.max(grid.spacing)), ds.n)
    if not t0 < t_max:
        raise ValueError("degenerate time range")
    return t0, t_max


def auto_flow_setup(
    dataset,
    kernel: Kernel,
    slices: int,
    *,
    t_min: Optional[float] = None,
    t_max: Optional[float] = None,
    resolution=None,
    margin: float = 4.0,
) -> tuple:
    """Pick (TimeGrid, SamplingGrid) for a run; missing bounds are automatic."""
    ds = as_dataset(dataset)
    if t_min is not None and t_max is not None and not t_min < t_max:
        raise ValueError("degenerate time range")
    if t_max is None:
        diam = ds.diameter()
        if not diam > 0:
            raise ValueError("zero diameter")
        t_max = kernel.time_for_std(diam / 2.0, ds.n)
    grid = SamplingGrid.around(ds, kernel.std(t_max, ds.n), resolution, margin)
    if t_min is None:
        t_min = kernel.time_for_std(2.0 * float(np.max(grid.spacing)), ds.n)
    return TimeGrid.uniform(t_min, t_max, slices), grid


def stable_cluster_driver(
    dataset,
    kernel: Kernel = Kernel(),
    slices: int = 51,
    threshold: float = 0.4,
    *,
    band: tuple = (0.0, 0.0),
    resolution=None,
    margin: float = 4.0,
    samples: int = DEFAULT_SAMPLES,
    t_min: Optional[float] = None,
    t_max: Optional[float] = None,
    truncate: bool = True,
    n_jobs: Optional[int] = None,
    return_rounds: bool = False,
):
    """Extract stable clusters round by round.

    Each round runs a fresh flow on the points not yet emitted, picks the most
    persistent cluster count n' >= 2 over the (consolidation-truncated)
    horizon, backtracks every cluster at the last slice showing n' clusters,
    and emits those whose local entropy score reaches ``threshold``. If no
    cluster qualifies, the remainder is emitted as one unscored group.

    ``t_min``/``t_max`` fix the time range of the first round only; later
    rounds always pick their range automatically.

    Returns
    -------
    clusters : list of StableCluster
        Indices refer to the input dataset.
    rounds : list of dict
        Per-round flow and choices; only when ``return_rounds`` is True.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    ds = as_dataset(dataset)
    remaining = np.arange(ds.N)
    out: list = []
    rounds: list = []

    def finish(idx, r):
        out.append(StableCluster(np.array(idx), None, None, r))

    r = 0
    while remaining.size:
        sub = ds.subset(remaining)
        if sub.N == 1 or sub.diameter() == 0:
            finish(remaining, r)
            break
        first = r == 0
        tg, grid = auto_flow_setup(
            sub,
            kernel,
            slices,
            t_min=t_min if first else None,
            t_max=t_max if first else None,
            resolution=resolution,
            margin=margin,
        )
        flow = run_flow(sub, kernel, tg, grid, samples, n_jobs=n_jobs)
        h = horizon_index(flow, truncate)
        table = stability_table(flow, h)
        n_best = table.argmax(2)
        info = {
            "points": remaining.copy(),
            "flow": flow,
            "horizon": h,
            "consolidation": consolidation_time(flow),
            "table": table,
            "n_best": n_best,
            "anchor": None,
            "scores": [],
        }
        rounds.append(info)
        if n_best is None:
            logger.debug("round %d: no multi-cluster state, emitting remainder", r)
            finish(remaining, r)
            break
        anchor = int(np.flatnonzero(flow.M_series[: h + 1] == n_best)[-1])
        info["anchor"] = anchor
        emitted = np.zeros(sub.N, dtype=bool)
        for members in flow[anchor].clusters():
            la = backtrack(flow, members, anchor)
            score = local_entropy_stability_score(la, band[0], band[1], h)
            info["scores"].append(score)
            if score >= threshold:
                out.append(StableCluster(remaining[members], score, float(tg[anchor]), r))
                emitted[members] = True
        if not emitted.any():
            finish(remaining, r)
            break
        remaining = remaining[~emitted]
        r += 1
    return (out, rounds) if return_rounds else out


def wgll_entropy(dataset, kernel: Kernel, t: float) -> float:
    """Entropy (bits) of the potential values at the datapoints, normalized."""
    ds = as_dataset(dataset)
    P = eval_potential(ds, kernel, t, ds.points)
    p = np.atleast_1d(P) / np.sum(P)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def wgll_scan(dataset, kernel: Kernel, timegrid) -> WGLLScan:
    """WGLL entropy at every time, plus the indices of interior local minima."""
    tg = as_timegrid(timegrid)
    S = np.array([wgll_entropy(dataset, kernel, t) for t in tg.times])
    interior = np.flatnonzero((S[1:-1] < S[:-2]) & (S[1:-1] < S[2:])) + 1
    return WGLLScan(tg.times.copy(), S, interior)
