"""Seeded splittable randomness, dense least squares, and samplers.

All samplers are pure functions of an :class:`RngStream`: calling a sampler
twice with the same stream yields bitwise-identical draws, and distinct
stream ids give statistically independent sequences (Philox is counter
based, so streams may be consumed in any order across workers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput, NonFiniteValue, SolveFailure

_MASK64 = 0xFFFFFFFFFFFFFFFF
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _part_bytes(part: Union[int, str]) -> bytes:
    if isinstance(part, str):
        return part.encode("utf-8") + b"\x00"
    return int(part & _MASK64).to_bytes(8, "little")


@dataclass(frozen=True)
class RngStream:
    """A reproducible, splittable random stream.

    The (seed, stream_id) pair keys a Philox counter-based generator, so the
    same pair produces the same sequence on every run and thread schedule.
    Substreams are derived by FNV-1a mixing of arbitrary int/str parts,
    which keeps derived streams stable across platforms and processes.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *parts: Union[int, str]) -> "RngStream":
        """Derive an independent child stream keyed by ``parts``."""
        h = _fnv1a64(_part_bytes(self.stream_id))
        for p in parts:
            h = _fnv1a64(_part_bytes(p), h)
        return RngStream(self.seed, h)


RngLike = Union[RngStream, np.random.Generator]


def _as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def solve_least_squares(a: np.ndarray, b: np.ndarray,
                        ridge: float = 0.0) -> np.ndarray:
    """Minimize ||Ax - b||^2 + ridge * ||x||^2.

    With ``ridge=0`` and a rank-deficient design the minimum-norm minimizer
    is returned (SVD-based rank-revealing solve).  The ridge case is solved
    exactly through the augmented system [A; sqrt(ridge) I].
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"expected A (n,p) and b (n,), got {a.shape} and {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise NonFiniteInput("least squares input contains NaN/Inf")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    if ridge > 0:
        p = a.shape[1]
        a = np.vstack([a, math.sqrt(ridge) * np.eye(p)])
        b = np.concatenate([b, np.zeros(p)])
    try:
        x, *_ = np.linalg.lstsq(a, b, rcond=None)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolveFailure(str(exc)) from exc
    if not np.isfinite(x).all():
        raise SolveFailure("least squares produced non-finite coefficients")
    return x


def sample_uniform_sphere(d: int, radius: float, rng: RngLike,
                          size: int | None = None) -> np.ndarray:
    """Uniform draws from the sphere {x in R^d : ||x|| = radius}.

    Normalized standard Gaussian directions scaled to ``radius``; zero-norm
    draws are retried internally.  Safe for radii up to ~1e15 because the
    direction is normalized before scaling.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    gen = _as_generator(rng)
    n = 1 if size is None else int(size)
    out = np.empty((n, d))
    filled = 0
    while filled < n:
        g = gen.standard_normal((n - filled, d))
        norms = np.linalg.norm(g, axis=1)
        ok = norms > 0
        m = int(ok.sum())
        out[filled:filled + m] = g[ok] / norms[ok, None]
        filled += m
    out *= radius
    return out[0] if size is None else out


def sample_uniform_interval(lo: float, hi: float, rng: RngLike,
                            size: int | None = None):
    """Uniform draw(s) from [lo, hi]; lo == hi returns lo exactly."""
    if lo > hi:
        raise ValueError(f"need lo <= hi, got {lo} > {hi}")
    gen = _as_generator(rng)
    return gen.uniform(lo, hi, size=size)


def ball_volume(d: int, radius: float) -> float:
    """Lebesgue volume of the radius-``radius`` ball in R^d."""
    return math.pi ** (d / 2) * radius ** d / math.gamma(d / 2 + 1)


def unit_sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d (2*pi^(d/2)/Gamma(d/2))."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def heavy_tail_inner_mass(d: int) -> float:
    """Probability mass of the ||w|| <= 2 component of the mixture density.

    The density is (1/4^(d+1)) * 1{||w||<=2} + c20 * 1{||w||>2} /
    (||w||^d (log ||w||)^2); the inner component integrates to
    vol(ball of radius 2) / 4^(d+1) and the remainder fixes c20.
    """
    return ball_volume(d, 2.0) / 4.0 ** (d + 1)


def heavy_tail_c20(d: int) -> float:
    """Normalizing constant of the outer mixture component.

    Integrating c20/(r^d (log r)^2) over ||w|| > 2 in polar coordinates
    gives c20 * area(S^{d-1}) * \\int_2^inf dr/(r (log r)^2)
    = c20 * area(S^{d-1}) / log 2, so c20 = (1 - inner_mass) * log 2 / area.
    """
    return (1.0 - heavy_tail_inner_mass(d)) * math.log(2.0) / unit_sphere_area(d)


# Outer radii follow P(R > r) = log2/log r, so float64 overflows with
# probability ~1e-3 per draw; the radial law is truncated at 1e300.
_MAX_OUTER_RADIUS = 1e300
_MAX_OUTER_U = 1.0 - math.log(2.0) / math.log(_MAX_OUTER_RADIUS)


def sample_projected_direction(d: int, rng: RngLike,
                               size: int | None = None) -> np.ndarray:
    """Draws from the radially symmetric heavy-tailed inner-weight density.

    Radius: with probability ``heavy_tail_inner_mass(d)`` from the radial
    law r^{d-1} on [0, 2] (r = 2 u^{1/d}); otherwise from the density
    proportional to 1/(r (log r)^2) on (2, inf) via the analytic inverse
    CDF r = exp(log 2 / (1 - u)).  Direction: uniform on the unit sphere.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    gen = _as_generator(rng)
    n = 1 if size is None else int(size)
    p_inner = heavy_tail_inner_mass(d)
    pick = gen.uniform(size=n)
    u = gen.uniform(size=n)
    radius = np.empty(n)
    inner = pick < p_inner
    radius[inner] = 2.0 * u[inner] ** (1.0 / d)
    uo = np.minimum(u[~inner], _MAX_OUTER_U)
    radius[~inner] = np.exp(math.log(2.0) / (1.0 - uo))
    direction = sample_uniform_sphere(d, 1.0, gen, size=n)
    out = direction * radius[:, None]
    return out[0] if size is None else out


def finite_difference_gradient(f: Callable[[np.ndarray], float],
                               x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / (2h)."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step.flat[i] = h
        hi = f(x + step)
        lo = f(x - step)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteValue(f"function non-finite near coordinate {i}")
        grad.flat[i] = (hi - lo) / (2.0 * h)
    return grad
