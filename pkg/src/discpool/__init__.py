"""Closed-form learned linear pooling for feature maps.

The operator maps each ``I x J x C`` feature map to ``I' x J' x C`` (or
``2C``) by a location-specific weighted sum over all input pixels, shared
across channels.  Weights maximize an LDA-style between/within class scatter
ratio, with a quadratic penalty keeping each output's weights near its
anchor pixel.
"""

from .estimator import LearnedPooling
from .exceptions import (
    DimensionMismatchError,
    EmptyClassError,
    MalformedFileError,
    NotPositiveDefiniteError,
    OutOfRangeError,
    PoolingError,
    ShapeMismatchError,
    SingularMatrixError,
)
from .fmap import (
    ChannelStats,
    FeatureMap,
    LabeledDataset,
    SpatialShape,
    compute_channel_stats,
    denormalize_channels,
    flatten,
    normalize_channels,
    unflatten,
)
from .geig import GeigSolution, kkt_residual, top_k_geig
from .locality import LocalityConfig, PenaltyDiagonal, coord_omega_big, penalty_vector
from .metrics import SeparabilityReport, compare, separability
from .pooling import (
    FitConfig,
    PoolingOperator,
    apply,
    average_pooling_operator,
    fit,
)
from .scatter import ScatterPair, compute_scatter

__version__ = "0.1.0"
