"""chainpool: combine draws from independent MCMC chains.

Run several off-the-shelf chains in parallel, carve the state space into
Voronoi elements, estimate each element's posterior mass by importance
sampling, and recombine the within-element averages into consistent
posterior summaries.
"""

from ._backend import NUMBA_ENABLED, backend_name
from .combine import (CombinedEstimate, combine, element_means, resample,
                      weighted_empirical)
from .diagnostics import Discretization, lag_autocorrelation, tv_distance
from .executor import (ChainError, DrawStore, derive_rng, derive_seed,
                       run_parallel_chains, run_parallel_replicates)
from .partition import Partition, cluster, element_counts
from .samplers import ChainConfig, run_chain
from .targets import (GaussianMixture, LohModel, ProbitModel, Target,
                      demo_mixture_2d, random_mixture)
from .weights import (MvtDist, WeightEstimate, estimate_weights,
                      fit_instrumental, ratio_weights)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "__version__",
    "ChainError",
    "DrawStore",
    "derive_rng",
    "derive_seed",
    "run_parallel_chains",
    "run_parallel_replicates",
    "ChainConfig",
    "run_chain",
    "Target",
    "GaussianMixture",
    "ProbitModel",
    "LohModel",
    "demo_mixture_2d",
    "random_mixture",
    "Partition",
    "cluster",
    "element_counts",
    "MvtDist",
    "WeightEstimate",
    "fit_instrumental",
    "estimate_weights",
    "ratio_weights",
    "CombinedEstimate",
    "element_means",
    "combine",
    "weighted_empirical",
    "resample",
    "Discretization",
    "tv_distance",
    "lag_autocorrelation",
]
