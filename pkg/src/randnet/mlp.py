"""Fully connected baselines trained by a from-scratch adam optimizer.

Architectures follow the comparison setup: one, three, or six hidden
layers of equal width, ReLU or sigmoid activation, linear scalar output,
trained full-batch on mean squared error with adam defaults
(lr 0.01, beta1 0.9, beta2 0.999, eps 1e-7) for a fixed number of epochs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss
from .estimator import TrainedEstimator
from .numerics import RngStream
from .shallow import LabeledDataset, logistic

ACTIVATIONS = ("relu", "sigmoid")


@dataclass
class MlpParams:
    """Layered weights of a fully connected scalar-output network.

    weights[s] has shape (k_{s-1}, k_s) so a batch propagates as h @ W + b;
    biases[s] has shape (k_s,).  out_weights/out_bias form the linear
    output layer.
    """

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    out_weights: np.ndarray
    out_bias: float
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise DimensionMismatch("need one bias vector per weight matrix")
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise DimensionMismatch(
                    f"bias length {b.shape[0]} != layer width {w.shape[1]}")
        if self.out_weights.shape != (self.weights[-1].shape[1],):
            raise DimensionMismatch("output weights must match last width")

    @property
    def layer_widths(self) -> List[int]:
        return [w.shape[1] for w in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases],
                         self.out_weights.copy(), self.out_bias,
                         self.activation)


def _act(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    return logistic(z)


def _act_prime(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        # subgradient at 0 fixed to 0
        return (z > 0).astype(float)
    s = logistic(z)
    return s * (1.0 - s)


def init_mlp(d: int, widths: Sequence[int], activation: str,
             rng: RngStream) -> MlpParams:
    """Glorot-uniform weights, zero biases (keras-style defaults)."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    dims = [d] + list(widths)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(gen.uniform(-lim, lim, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    lim = math.sqrt(6.0 / (dims[-1] + 1))
    out_w = gen.uniform(-lim, lim, size=dims[-1])
    return MlpParams(weights, biases, out_w, 0.0, activation)


def _forward_pass(params: MlpParams, x: np.ndarray):
    hidden_inputs, hidden_outputs = [], [x]
    h = x
    for w, b in zip(params.weights, params.biases):
        z = h @ w + b
        hidden_inputs.append(z)
        h = _act(z, params.activation)
        hidden_outputs.append(h)
    out = h @ params.out_weights + params.out_bias
    return out, hidden_inputs, hidden_outputs


def mlp_forward(params: MlpParams, x):
    """Network output; accepts a single point (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params.input_dim:
        raise DimensionMismatch(
            f"x has dimension {x.shape[1]}, network expects {params.input_dim}")
    out, _, _ = _forward_pass(params, x)
    return float(out[0]) if single else out


def mlp_loss(params: MlpParams, batch: LabeledDataset) -> float:
    """Mean squared error over the batch."""
    residual = mlp_forward(params, batch.x) - batch.y
    return float(np.mean(residual ** 2))


def mlp_gradient(params: MlpParams, batch: LabeledDataset) -> MlpParams:
    """Reverse-mode gradient of the batch MSE, in params shape."""
    x = np.asarray(batch.x, dtype=float)
    if x.shape[1] != params.input_dim:
        raise DimensionMismatch(
            f"batch dimension {x.shape[1]} != network dimension "
            f"{params.input_dim}")
    n = x.shape[0]
    out, hidden_inputs, hidden_outputs = _forward_pass(params, x)
    g_out = 2.0 * (out - batch.y) / n
    g_out_w = hidden_outputs[-1].T @ g_out
    g_out_b = float(g_out.sum())
    g_h = np.outer(g_out, params.out_weights)
    g_weights = [None] * len(params.weights)
    g_biases = [None] * len(params.biases)
    for s in range(len(params.weights) - 1, -1, -1):
        g_z = g_h * _act_prime(hidden_inputs[s], params.activation)
        g_weights[s] = hidden_outputs[s].T @ g_z
        g_biases[s] = g_z.sum(axis=0)
        if s > 0:
            g_h = g_z @ params.weights[s].T
    return MlpParams(g_weights, g_biases, g_out_w, g_out_b, params.activation)


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    first_moment: MlpParams
    second_moment: MlpParams
    step_count: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7


def init_adam(params: MlpParams, lr: float = 0.01, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-7) -> AdamState:
    zeros = MlpParams([np.zeros_like(w) for w in params.weights],
                      [np.zeros_like(b) for b in params.biases],
                      np.zeros_like(params.out_weights), 0.0,
                      params.activation)
    return AdamState(zeros, zeros.copy(), 0, lr, beta1, beta2, eps)


def _adam_update(m, v, g, t, state: AdamState):
    m = state.beta1 * m + (1.0 - state.beta1) * g
    v = state.beta2 * v + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return m, v, step


def adam_step(state: AdamState, params: MlpParams,
              grads: MlpParams) -> tuple[AdamState, MlpParams]:
    """One bias-corrected adam update; returns fresh (state, params)."""
    t = state.step_count + 1
    new_p = params.copy()
    new_m = state.first_moment.copy()
    new_v = state.second_moment.copy()
    for s in range(len(params.weights)):
        new_m.weights[s], new_v.weights[s], step = _adam_update(
            state.first_moment.weights[s], state.second_moment.weights[s],
            grads.weights[s], t, state)
        new_p.weights[s] = params.weights[s] - step
        new_m.biases[s], new_v.biases[s], step = _adam_update(
            state.first_moment.biases[s], state.second_moment.biases[s],
            grads.biases[s], t, state)
        new_p.biases[s] = params.biases[s] - step
    new_m.out_weights, new_v.out_weights, step = _adam_update(
        state.first_moment.out_weights, state.second_moment.out_weights,
        grads.out_weights, t, state)
    new_p.out_weights = params.out_weights - step
    m_b, v_b, step_b = _adam_update(
        np.float64(state.first_moment.out_bias),
        np.float64(state.second_moment.out_bias),
        np.float64(grads.out_bias), t, state)
    new_m.out_bias, new_v.out_bias = float(m_b), float(v_b)
    new_p.out_bias = params.out_bias - float(step_b)
    new_state = AdamState(new_m, new_v, t, state.lr, state.beta1,
                          state.beta2, state.eps)
    return new_state, new_p


def train_adam(data: LabeledDataset, widths: Sequence[int], activation: str,
               epochs: int, lr: float = 0.01,
               rng: RngStream = RngStream(0),
               batch_size: int | None = None) -> TrainedEstimator:
    """Adam-train an MLP from a fresh random initialization.

    ``batch_size=None`` (the default) trains full batch, so one epoch is
    exactly one adam step; the per-epoch loss is recorded as the trace.
    The returned predictor is untruncated (truncation level +inf).
    """
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    params = init_mlp(data.dim, widths, activation, gen)
    state = init_adam(params, lr=lr)
    n = len(data)
    losses = np.empty(epochs)
    for epoch in range(epochs):
        if batch_size is None or batch_size >= n:
            grads = mlp_gradient(params, data)
            state, params = adam_step(state, params, grads)
        else:
            order = gen.permutation(n)
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                batch = LabeledDataset(data.x[idx], data.y[idx])
                grads = mlp_gradient(params, batch)
                state, params = adam_step(state, params, grads)
        loss = mlp_loss(params, data)
        if not math.isfinite(loss):
            raise NonFiniteLoss(
                f"loss became {loss} at epoch {epoch + 1} (lr too high?)")
        losses[epoch] = loss
    return TrainedEstimator(
        kind=f"mlp-{activation}-{len(list(widths))}",
        raw_predict=lambda x, p=params: mlp_forward(p, x),
        beta_n=math.inf,
        params=params,
        trace=losses)


def mlp_to_json_dict(est: TrainedEstimator) -> dict:
    """JSON document mirroring the random-feature estimator scheme."""
    params = est.params
    if not isinstance(params, MlpParams):
        raise TypeError(f"not an MLP estimator: {est.kind}")
    return {
        "kind": "mlp",
        "activation": params.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "out_weights": params.out_weights.tolist(),
        "out_bias": params.out_bias,
        "beta_n": None,
    }


def mlp_from_json_dict(doc: dict) -> TrainedEstimator:
    params = MlpParams([np.asarray(w, dtype=float) for w in doc["weights"]],
                       [np.asarray(b, dtype=float) for b in doc["biases"]],
                       np.asarray(doc["out_weights"], dtype=float),
                       float(doc["out_bias"]), doc["activation"])
    return TrainedEstimator(
        kind=f"mlp-{params.activation}-{len(params.weights)}",
        raw_predict=lambda x, p=params: mlp_forward(p, x),
        beta_n=math.inf, params=params)
