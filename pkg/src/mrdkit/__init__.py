"""Mutual regression distances between sample sets."""
from mrdkit.baselines import SinkhornConfig, mmd2, sinkhorn
from mrdkit.data import LabeledCollection, gen_gaussian_clouds, gen_polygons, gen_spiral, perturb
from mrdkit.ddsc import ami, ari, ddsc, pairwise_distances
from mrdkit.errors import (
    ConvergenceError,
    DataError,
    InvalidInputError,
    MrdError,
    PairwiseError,
    SingularSystemError,
)
from mrdkit.kernels import KernelSpec, gram, kmrd, kmrd_heuristic, kmrd_oracle, kmrd_simplified, kmrd_tightened
from mrdkit.metrics import METRICS, MetricOptions, make_metric
from mrdkit.mrd import (
    MrdConfig,
    MrdResult,
    Variant,
    lambda_search,
    mrd,
    mrd_heuristic,
    mrd_oracle,
    mrd_simplified,
    mrd_tightened,
)
from mrdkit.robustness import check_kernel_bound, check_linear_bound

__version__ = "0.1.0"
