"""Shallow-network regression with random inner weights.

Estimators: full gradient-descent training of a one-hidden-layer logistic
network under a theoretical parameter schedule, a fast random-feature
linear least squares variant (plain and projected), and adam-trained
fully connected baselines, plus a simulation harness that benchmarks all
of them on six synthetic regression targets.
"""

__version__ = "0.1.0"

from .errors import RandnetError  # noqa: F401
from .estimator import TrainedEstimator, predict  # noqa: F401
from .numerics import RngStream  # noqa: F401
from .shallow import LabeledDataset, ShallowNetParams  # noqa: F401
