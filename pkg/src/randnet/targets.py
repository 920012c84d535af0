"""The six benchmark regression functions and their noise-scale calibration.

Targets live on the unit cube of their respective dimension.  The noise
scale of target i is calibrated from the spread of the function values:
the interquartile range of 1e5 uniform evaluations, stabilized by taking
the median over 100 repetitions.  ``PAPER_LAMBDAS`` holds the published
reference values used by the simulation protocol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, DomainError
from .numerics import RngLike, RngStream

#: Published calibration constants for targets 1..6.
PAPER_LAMBDAS = {1: 0.24, 2: 0.11, 3: 8.76, 4: 0.04, 5: 0.36, 6: 9.11}

TARGET_DIMENSIONS = {1: 7, 2: 7, 3: 7, 4: 6, 5: 10, 6: 7}

#: Divisor convention inside the cosine product of target 1.  The printed
#: sqrt(i-1) divides by zero in the first factor; 'griewank' uses the
#: standard sqrt(i) and is the default.
M1_DIVISORS = ("griewank", "paper")


def _m1(x: np.ndarray, divisor: str = "griewank") -> np.ndarray:
    idx = np.arange(1, 8, dtype=float)
    div = np.sqrt(idx) if divisor == "griewank" else np.sqrt(idx - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (x ** 2).sum(axis=1) / 4000.0 - np.cos(x / div).prod(axis=1)


def _m2(x: np.ndarray) -> np.ndarray:
    return np.exp(0.5 * (x ** 2).sum(axis=1))


def _m3(x: np.ndarray) -> np.ndarray:
    lead, lag = x[:, :-1], x[:, 1:]
    return (10.0 * ((lag - lead ** 2) ** 2 + (lead - 1.0) ** 2)).sum(axis=1)


_M4_COEF = np.array([0.2, 0.9, 1.0, 1.0, 0.2, 0.6])


def _m4(x: np.ndarray) -> np.ndarray:
    return np.tanh(x @ _M4_COEF)


def _m5(x: np.ndarray) -> np.ndarray:
    norm = np.sqrt((x ** 2).sum(axis=1))
    return 1.0 / (1.0 + norm / 4.0) + x[:, 6] ** 2 + x[:, 3] * x[:, 4] * x[:, 1]


def _m6(x: np.ndarray) -> np.ndarray:
    z = x[:, 0] ** 2 + 2.0 * x[:, 1] + np.sin(6.0 * x[:, 3] ** 2 - 3.0)
    cot_arg = np.pi / (1.0 + np.exp(z))
    first = np.cos(cot_arg) / np.sin(cot_arg)
    second = np.exp(3.0 * x[:, 2] + 2.0 * x[:, 3] - 5.0 * x[:, 4]
                    + np.sqrt(x[:, 5] + 0.9 * x[:, 6] + 0.1))
    return first + second


@dataclass(frozen=True)
class TargetFunction:
    """A benchmark regression target with its calibrated noise scale."""

    index: int
    dimension: int
    lambda_i: float
    fn: Callable[[np.ndarray], np.ndarray]

    @property
    def name(self) -> str:
        return f"m{self.index}"

    def __call__(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.dimension:
            raise DimensionMismatch(
                f"target m{self.index} expects dimension {self.dimension}, "
                f"got {x.shape[1]}")
        out = self.fn(x)
        return float(out[0]) if single else out


def target_function(index: int, m1_divisor: str = "griewank",
                    lambda_i: float | None = None) -> TargetFunction:
    """Target i with its published noise scale (overridable)."""
    if index not in TARGET_DIMENSIONS:
        raise DomainError(f"target index must be 1..6, got {index}")
    if m1_divisor not in M1_DIVISORS:
        raise DomainError(f"m1 divisor must be one of {M1_DIVISORS}")
    fns = {1: lambda x: _m1(x, m1_divisor), 2: _m2, 3: _m3,
           4: _m4, 5: _m5, 6: _m6}
    lam = PAPER_LAMBDAS[index] if lambda_i is None else lambda_i
    return TargetFunction(index, TARGET_DIMENSIONS[index], lam, fns[index])


def eval_target(index: int, x, m1_divisor: str = "griewank"):
    """Evaluate target i at a point or batch of points."""
    return target_function(index, m1_divisor)(x)


def calibrate_target(target: TargetFunction, rng: RngLike,
                     draws: int = 100_000, repeats: int = 100) -> float:
    """Median over ``repeats`` of the IQR of ``draws`` uniform evaluations."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    iqrs = np.empty(repeats)
    for r in range(repeats):
        x = gen.uniform(size=(draws, target.dimension))
        q1, q3 = np.percentile(target(x), [25.0, 75.0])
        iqrs[r] = q3 - q1
    return float(np.median(iqrs))


def calibrate_lambda(index: int, rng: RngLike, draws: int = 100_000,
                     repeats: int = 100,
                     m1_divisor: str = "griewank") -> float:
    """Noise scale of target i by the empirical-spread procedure.

    Each repetition draws ``draws`` uniform points, evaluates the target
    and takes the interquartile range; the calibrated value is the median
    over ``repeats`` repetitions.
    """
    return calibrate_target(target_function(index, m1_divisor), rng,
                            draws=draws, repeats=repeats)
