"""One-hidden-layer logistic network: forward pass, penalized risk, gradient.

The network is f(x) = alpha0 + sum_k alpha_k * sigma(beta_k . x + gamma_k)
with the logistic squasher sigma.  The training objective adds an l2
penalty (c2/K) * sum_{k=0..K} alpha_k^2 on the outer weights, with the
constant term included in the sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput


@dataclass
class ShallowNetParams:
    """Weight vector (alpha, beta, gamma) of the shallow network.

    alpha0  outer constant term
    alpha   (K,) outer weights
    beta    (K, d) inner weight vectors
    gamma   (K,) inner bias terms
    """

    alpha0: float
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.beta.ndim != 2:
            raise DimensionMismatch(f"beta must be (K, d), got {self.beta.shape}")
        k = self.beta.shape[0]
        if self.alpha.shape != (k,) or self.gamma.shape != (k,):
            raise DimensionMismatch(
                f"alpha/gamma must have length K={k}, got "
                f"{self.alpha.shape} and {self.gamma.shape}")

    @property
    def hidden_count(self) -> int:
        return self.beta.shape[0]

    @property
    def input_dim(self) -> int:
        return self.beta.shape[1]

    @property
    def weight_count(self) -> int:
        """Total number of weights, 1 + K*(d+2)."""
        return 1 + self.hidden_count * (self.input_dim + 2)

    def copy(self) -> "ShallowNetParams":
        return ShallowNetParams(self.alpha0, self.alpha.copy(),
                                self.beta.copy(), self.gamma.copy())

    def to_vector(self) -> np.ndarray:
        """Flatten as (alpha0, alpha, beta rows, gamma)."""
        return np.concatenate(
            [[self.alpha0], self.alpha, self.beta.ravel(), self.gamma])

    @classmethod
    def from_vector(cls, vec: np.ndarray, k: int, d: int) -> "ShallowNetParams":
        vec = np.asarray(vec, dtype=float)
        if vec.size != 1 + k * (d + 2):
            raise DimensionMismatch(
                f"expected {1 + k * (d + 2)} entries, got {vec.size}")
        return cls(float(vec[0]), vec[1:1 + k],
                   vec[1 + k:1 + k + k * d].reshape(k, d), vec[1 + k + k * d:])


@dataclass
class LabeledDataset:
    """Regression sample: x is (n, d) with rows in [0,1]^d, y is (n,)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or self.y.ndim != 1:
            raise DimensionMismatch(
                f"x must be (n, d) and y (n,), got {self.x.shape}, {self.y.shape}")
        if self.x.shape[0] != self.y.shape[0] or self.x.shape[0] < 1:
            raise DimensionMismatch(
                f"x and y lengths differ: {self.x.shape[0]} vs {self.y.shape[0]}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise NonFiniteInput("dataset contains NaN/Inf")

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]


def logistic(x):
    """Stable logistic squasher 1/(1+exp(-x)), overflow-free on all floats."""
    arr = np.asarray(x, dtype=float)
    z = np.atleast_1d(arr)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ex = np.exp(z[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if arr.ndim == 0 else out


def truncate(level: float, y):
    """Clamp y to [-level, level]; level=inf passes values through."""
    if not level > 0:
        raise ValueError(f"truncation level must be positive, got {level}")
    clipped = np.clip(y, -level, level)
    return float(clipped) if np.ndim(y) == 0 else clipped


def _hidden_activations(params: ShallowNetParams, x: np.ndarray) -> np.ndarray:
    return logistic(x @ params.beta.T + params.gamma)


def forward(params: ShallowNetParams, x):
    """Network output at x; accepts a single point (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params.input_dim:
        raise DimensionMismatch(
            f"x has dimension {x.shape[1]}, network expects {params.input_dim}")
    out = params.alpha0 + _hidden_activations(params, x) @ params.alpha
    return float(out[0]) if single else out


def penalized_risk(params: ShallowNetParams, data: LabeledDataset,
                   c2: float, k_n: int) -> float:
    """Mean squared residual plus (c2/K) * (alpha0^2 + sum alpha_k^2)."""
    if k_n != params.hidden_count:
        raise DimensionMismatch(
            f"K mismatch: params have {params.hidden_count}, got k_n={k_n}")
    residual = forward(params, data.x) - data.y
    penalty = (c2 / k_n) * (params.alpha0 ** 2 + float(params.alpha @ params.alpha))
    return float(np.mean(residual ** 2) + penalty)


def risk_gradient(params: ShallowNetParams, data: LabeledDataset,
                  c2: float, k_n: int) -> ShallowNetParams:
    """Analytic gradient of :func:`penalized_risk` in params shape.

    With r_i = f(X_i) - Y_i and s_k = sigma(beta_k . X_i + gamma_k):
      d/dalpha0   = (2/n) sum r_i + 2 c2 alpha0 / K
      d/dalpha_k  = (2/n) sum r_i s_k + 2 c2 alpha_k / K
      d/dbeta_kj  = (2/n) sum r_i alpha_k s_k (1 - s_k) X_i^(j)
      d/dgamma_k  = (2/n) sum r_i alpha_k s_k (1 - s_k)
    """
    if k_n != params.hidden_count:
        raise DimensionMismatch(
            f"K mismatch: params have {params.hidden_count}, got k_n={k_n}")
    if data.dim != params.input_dim:
        raise DimensionMismatch(
            f"data dimension {data.dim} != network dimension {params.input_dim}")
    n = len(data)
    s = _hidden_activations(params, data.x)              # (n, K)
    residual = params.alpha0 + s @ params.alpha - data.y  # (n,)
    scale = 2.0 / n
    pen = 2.0 * c2 / k_n
    g_alpha0 = scale * float(residual.sum()) + pen * params.alpha0
    g_alpha = scale * (s.T @ residual) + pen * params.alpha
    dpre = residual[:, None] * (params.alpha * s * (1.0 - s))  # (n, K)
    g_beta = scale * (dpre.T @ data.x)
    g_gamma = scale * dpre.sum(axis=0)
    return ShallowNetParams(g_alpha0, g_alpha, g_beta, g_gamma)
