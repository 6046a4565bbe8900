"""scikit-learn compatible front end for heat-flow stability clustering."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import chronograph
from .dataspace import Dataset
from .partitioner import DEFAULT_SAMPLES
from .potential import Kernel
from .stability import (
    auto_flow_setup,
    consolidation_time,
    horizon_index,
    run_flow,
    stability_table,
    stable_cluster_driver,
)

__all__ = ["HeatFlowClustering"]


class HeatFlowClustering(ClusterMixin, BaseEstimator):
    """Stable clusters from a heat flow of kernel-potential clusterings.

    The data are clustered at a sequence of kernel widths ("times"). The
    cluster count that persists longest is selected, and every cluster
    present at its last occurrence is scored by how long it stays intact
    looking back in time. Clusters scoring at least ``threshold`` are kept
    and the procedure repeats on the remaining points.

    Parameters
    ----------
    kernel : {"gaussian", "exponential"}, default="gaussian"
    kernel_scale : float, default=1.0
        Width of the base kernel; for the Gaussian, the standard deviation
        at ``t = 1``.
    n_slices : int, default=51
        Number of time slices per flow.
    t_min, t_max : float, optional
        Time range of the first flow. Missing bounds are derived from the
        grid spacing and the data diameter.
    resolution : int, optional
        Grid nodes per axis; 1024 in 1D, 128 in 2D, 32 otherwise.
    margin : float, default=4.0
        Grid padding in kernel standard deviations at the last time.
    path_samples : int, default=256
        Samples along each point-to-maximum path (n >= 2 only).
    threshold : float, default=0.4
        Minimum local entropy stability score for a cluster to be kept.
    band : tuple of float, default=(0.0, 0.0)
        Entropy band of the local score; ``(0, 0)`` means exactly zero.
    truncate : bool, default=True
        Cut the analysis window at the consolidation time.
    n_jobs : int, optional
        Threads used across time slices.

    Attributes
    ----------
    labels_ : ndarray of shape (n_samples,)
        Cluster label per point, numbered in emission order.
    cluster_scores_ : ndarray of shape (n_clusters,)
        Local score per label; NaN for a leftover group that was not scored.
    clusters_ : list of StableCluster
    flow_ : FlowResult or None
        Flow of the first round, on the whole dataset.
    stability_ : StabilityTable or None
        B(n) of ``flow_`` over all slices.
    consolidation_index_ : int or None
    horizon_ : int or None
        Last slice of the analysis window of the first round.
    n_selected_ : int or None
        Most persistent cluster count (>= 2) of the first round.
    chronodendrogram_ : Chronodendrogram or None
    """

    def __init__(
        self,
        kernel="gaussian",
        kernel_scale=1.0,
        n_slices=51,
        t_min=None,
        t_max=None,
        resolution=None,
        margin=4.0,
        path_samples=DEFAULT_SAMPLES,
        threshold=0.4,
        band=(0.0, 0.0),
        truncate=True,
        n_jobs=None,
    ):
        self.kernel = kernel
        self.kernel_scale = kernel_scale
        self.n_slices = n_slices
        self.t_min = t_min
        self.t_max = t_max
        self.resolution = resolution
        self.margin = margin
        self.path_samples = path_samples
        self.threshold = threshold
        self.band = band
        self.truncate = truncate
        self.n_jobs = n_jobs

    def _kernel(self) -> Kernel:
        return Kernel(self.kernel, float(self.kernel_scale))

    def fit(self, X, y=None):
        """Run the stable-cluster extraction on X.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored

        Returns
        -------
        self
        """
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=1)
        if self.n_slices < 2:
            raise ValueError("n_slices must be at least 2")
        s1, s2 = self.band
        if s1 > s2:
            raise ValueError("band needs s1 <= s2")
        ds = Dataset(X)
        kernel = self._kernel()
        clusters, rounds = stable_cluster_driver(
            ds,
            kernel,
            self.n_slices,
            self.threshold,
            band=(s1, s2),
            resolution=self.resolution,
            margin=self.margin,
            samples=self.path_samples,
            t_min=self.t_min,
            t_max=self.t_max,
            truncate=self.truncate,
            n_jobs=self.n_jobs,
            return_rounds=True,
        )
        labels = np.empty(ds.N, dtype=np.int64)
        for lab, c in enumerate(clusters):
            labels[c.indices] = lab
        self.labels_ = labels
        self.clusters_ = clusters
        self.cluster_scores_ = np.array(
            [np.nan if c.score is None else c.score for c in clusters]
        )
        self.rounds_ = rounds

        flow = rounds[0]["flow"] if rounds else None
        if flow is None and self.t_min is not None and self.t_max is not None:
            tg, grid = auto_flow_setup(
                ds, kernel, self.n_slices, t_min=self.t_min, t_max=self.t_max,
                resolution=self.resolution, margin=self.margin,
            )
            flow = run_flow(ds, kernel, tg, grid, self.path_samples, n_jobs=self.n_jobs)
        self.flow_ = flow
        if flow is None:
            self.stability_ = self.horizon_ = self.consolidation_index_ = None
            self.n_selected_ = self.chronodendrogram_ = None
            return self
        self.consolidation_index_ = consolidation_time(flow)
        self.horizon_ = horizon_index(flow, self.truncate)
        self.stability_ = stability_table(flow, band=(s1, s2))
        self.n_selected_ = stability_table(flow, self.horizon_).argmax(2)
        self.chronodendrogram_ = chronograph.build(flow)
        return self

    def fit_predict(self, X, y=None, **kwargs):
        return self.fit(X).labels_

    @property
    def n_clusters_(self) -> int:
        check_is_fitted(self, "labels_")
        return len(self.clusters_)
