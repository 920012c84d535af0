"""Trained-estimator container shared by the three model families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .shallow import truncate


@dataclass
class TrainedEstimator:
    """A fitted predictor with a truncation level.

    raw_predict maps a (n, d) batch or single (d,) point to untruncated
    network outputs; predictions are clamped to [-beta_n, beta_n]
    (beta_n = inf marks an untruncated estimator).  ``trace`` optionally
    records the per-step objective of the fitting run.
    """

    kind: str
    raw_predict: Callable[[np.ndarray], Any]
    beta_n: float
    params: Any = None
    trace: Optional[np.ndarray] = field(default=None, repr=False)

    def predict(self, x):
        return truncate(self.beta_n, self.raw_predict(x))


def predict(est: TrainedEstimator, x):
    """Truncated prediction T_{beta_n}(raw(x))."""
    return est.predict(x)
