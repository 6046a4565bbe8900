"""Heat-flow stability clustering.

Kernel potentials of a dataset are tracked while the kernel widens with a
time parameter; cluster counts and partition entropies that persist over
long stretches of time single out stable clusters.
"""

from .dataspace import Clustering, Dataset, TimeGrid, smi, validate_partition
from .estimator import HeatFlowClustering
from .potential import Kernel, SamplingGrid
from .stability import FlowResult, run_flow, stable_cluster_driver

__version__ = "0.1.0"

__all__ = [
    "Clustering",
    "Dataset",
    "FlowResult",
    "HeatFlowClustering",
    "Kernel",
    "SamplingGrid",
    "TimeGrid",
    "run_flow",
    "smi",
    "stable_cluster_driver",
    "validate_partition",
]
