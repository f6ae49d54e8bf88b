"""Wasserstein k-means for histograms, with sparse simplex projection."""

from .barycenter import BarycenterConfig, BarycenterConvergenceWarning, barycenter
from .clustering import (
    ClusteringRun,
    IterationRecord,
    SspwConfig,
    euclidean_kmeans,
    gamma_schedule,
    sspw_kmeans,
    wasserstein_kmeans,
)
from .dataio import (
    LabeledDataset,
    intensity_histogram_1d,
    load_dataset,
    make_synthetic_dataset,
    pixel_histogram_2d,
    save_dataset,
    save_results,
)
from .errors import (
    ConfigurationError,
    EmptyClusterError,
    InvalidDataError,
    NumericalError,
    ParseError,
)
from .evaluation import MetricsReport, accuracy, evaluate, nmi, purity
from .histogram import (
    BinGeometry,
    GroundCost,
    Histogram,
    SparseHistogram,
    build_ground_cost,
    normalize_to_histogram,
)
from .projection import (
    ProjectionResult,
    inflate,
    shrink_cost,
    shrink_vector,
    sparse_simplex_project,
)
from .transport import TransportPlan, solve_ot, solve_ot_1d_closedform, wasserstein_distance

__version__ = "0.1.0"
