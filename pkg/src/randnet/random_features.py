"""Random-feature linear least squares estimator.

The hidden layer is frozen at random values and only the outer weights are
fit, which turns the network into a linear function space: a plain variant
with inner weights uniform on a sphere of radius B_n, and a projected
variant whose activation wraps the inner product into (-pi, pi] before
scaling (periodized features backed by a heavy-tailed direction law).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .estimator import TrainedEstimator
from .numerics import (RngLike, RngStream, sample_projected_direction,
                       sample_uniform_interval, sample_uniform_sphere,
                       solve_least_squares)
from .shallow import LabeledDataset, logistic

#: Per-sample ridge jitter used when no explicit ridge is given; guards
#: against exactly duplicated (saturated) feature columns without
#: measurably moving the fit.
DEFAULT_RIDGE_PER_SAMPLE = 1e-10


@dataclass
class RandomFeatureBasis:
    """Frozen inner weights defining the linear function space.

    kind    'plain' (sphere directions, feature sigma(b.x + g)) or
            'projected' (heavy-tailed directions, feature
            sigma(B_n * (Proj_(-pi,pi](b.x) + g)))
    betas   (K, d) inner weight vectors
    gammas  (K,) inner bias terms
    b_n     scale: sphere radius (plain) / multiplier inside the
            activation (projected)
    """

    kind: str
    betas: np.ndarray
    gammas: np.ndarray
    b_n: float

    def __post_init__(self):
        if self.kind not in ("plain", "projected"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        self.betas = np.asarray(self.betas, dtype=float)
        self.gammas = np.asarray(self.gammas, dtype=float)
        if self.betas.ndim != 2 or self.gammas.shape != (self.betas.shape[0],):
            raise DimensionMismatch(
                f"betas must be (K, d) with matching gammas, got "
                f"{self.betas.shape} and {self.gammas.shape}")

    @property
    def size(self) -> int:
        return self.betas.shape[0]

    @property
    def input_dim(self) -> int:
        return self.betas.shape[1]


def project_to_interval(z):
    """The unique value in (-pi, pi] congruent to z modulo 2*pi."""
    z = np.asarray(z, dtype=float)
    w = np.mod(z, 2.0 * math.pi)       # in [0, 2*pi)
    w = np.where(w > math.pi, w - 2.0 * math.pi, w)
    return float(w) if w.ndim == 0 else w


def sample_basis(k: int, b_n: float, d: int, rng: RngLike) -> RandomFeatureBasis:
    """Plain basis: directions uniform on the radius-B_n sphere, biases
    uniform on [-B_n sqrt(d), B_n sqrt(d)]."""
    if k < 1:
        raise ValueError(f"need K >= 1, got {k}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    betas = sample_uniform_sphere(d, b_n, gen, size=k)
    gammas = sample_uniform_interval(-b_n * math.sqrt(d), b_n * math.sqrt(d),
                                     gen, size=k)
    return RandomFeatureBasis("plain", betas, gammas, b_n)


def sample_projected_basis(k: int, b_n: float, d: int,
                           rng: RngLike) -> RandomFeatureBasis:
    """Projected basis: heavy-tailed directions, biases uniform on [-pi, pi]."""
    if k < 1:
        raise ValueError(f"need K >= 1, got {k}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    betas = sample_projected_direction(d, gen, size=k)
    gammas = sample_uniform_interval(-math.pi, math.pi, gen, size=k)
    return RandomFeatureBasis("projected", betas, gammas, b_n)


def feature_matrix(basis: RandomFeatureBasis, x: np.ndarray) -> np.ndarray:
    """Design matrix (n, K+1): constant column followed by the K features."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != basis.input_dim:
        raise DimensionMismatch(
            f"x has dimension {x.shape[1]}, basis expects {basis.input_dim}")
    inner = x @ basis.betas.T
    if basis.kind == "plain":
        feats = logistic(inner + basis.gammas)
    else:
        feats = logistic(basis.b_n * (project_to_interval(inner) + basis.gammas))
    out = np.hstack([np.ones((x.shape[0], 1)), feats])
    return out[0] if single else out


def feature_row(basis: RandomFeatureBasis, x: np.ndarray) -> np.ndarray:
    """Feature vector of a single point, length K+1 with leading 1."""
    return feature_matrix(basis, np.asarray(x, dtype=float))


@dataclass
class RandomFeatureModel:
    """Basis plus fitted outer weights (coef[0] is the constant term)."""

    basis: RandomFeatureBasis
    coef: np.ndarray

    def __call__(self, x):
        out = feature_matrix(self.basis, x) @ self.coef
        return float(out) if np.ndim(out) == 0 else out


def fit_lsq(basis: RandomFeatureBasis, data: LabeledDataset,
            beta_n: float = math.inf,
            ridge: float | None = None) -> TrainedEstimator:
    """Outer weights by linear least squares on the feature design.

    ``ridge=None`` applies the default numerical jitter
    ``DEFAULT_RIDGE_PER_SAMPLE * n``; pass 0 for the exact unpenalized
    solve (minimum-norm on rank-deficient designs).
    """
    design = feature_matrix(basis, data.x)
    if ridge is None:
        ridge = DEFAULT_RIDGE_PER_SAMPLE * len(data)
    coef = solve_least_squares(design, data.y, ridge=ridge)
    model = RandomFeatureModel(basis, coef)
    return TrainedEstimator(kind=f"rf-{basis.kind}", raw_predict=model,
                            beta_n=beta_n, params=model)


def to_json_dict(est: TrainedEstimator) -> dict:
    """JSON document for a fitted random-feature estimator."""
    model = est.params
    if not isinstance(model, RandomFeatureModel):
        raise TypeError(f"not a random-feature estimator: {est.kind}")
    return {
        "kind": model.basis.kind,
        "B_n": model.basis.b_n,
        "betas": model.basis.betas.tolist(),
        "gammas": model.basis.gammas.tolist(),
        "alphas": model.coef.tolist(),
        "beta_n": est.beta_n if math.isfinite(est.beta_n) else None,
    }


def from_json_dict(doc: dict) -> TrainedEstimator:
    """Rebuild a fitted estimator from :func:`to_json_dict` output."""
    basis = RandomFeatureBasis(doc["kind"], np.asarray(doc["betas"]),
                               np.asarray(doc["gammas"]), float(doc["B_n"]))
    model = RandomFeatureModel(basis, np.asarray(doc["alphas"], dtype=float))
    beta_n = math.inf if doc.get("beta_n") is None else float(doc["beta_n"])
    return TrainedEstimator(kind=f"rf-{basis.kind}", raw_predict=model,
                            beta_n=beta_n, params=model)


def save_estimator(est: TrainedEstimator, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(to_json_dict(est), fh)
    os.replace(tmp, path)


def load_estimator(path: str) -> TrainedEstimator:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
