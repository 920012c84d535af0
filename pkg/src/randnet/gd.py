"""Gradient-descent training of the shallow network.

Covers the theoretical parameter schedule (neuron count, inner-weight
radius, smoothness scale, stepsize, step count, truncation level as
functions of the sample size), random initialization of the weights, the
fixed-step full-batch descent loop, and the truncated predictor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, NonFiniteRisk
from .estimator import TrainedEstimator
from .numerics import RngStream, sample_uniform_interval, sample_uniform_sphere
from .shallow import (LabeledDataset, ShallowNetParams, forward,
                      penalized_risk, risk_gradient)

#: Practical cap on descent steps; the theoretical step count grows like
#: n^{7/4} and is infeasible beyond toy sample sizes.
DEFAULT_STEP_CAP = 100_000


@dataclass(frozen=True)
class ScheduleConstants:
    """Free positive constants of the theoretical schedule.

    c2  outer-weight penalty scale
    c3  bound on the initial constant term
    c4  K-scaled bound on initial outer weights
    c5  truncation scale (beta_n = c5 * log n)
    c7  neuron-count scale (K_n = ceil(c7 * sqrt(n)))
    c8  smoothness scale (L_n = c8 * (log n)^6 * K_n^{5/2})
    """

    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    c5: float = 2.0
    c7: float = 1.0
    c8: float = 1.0


@dataclass(frozen=True)
class TheoreticalSchedule:
    """Derived hyperparameters for a sample size n in dimension d."""

    n: int
    d: int
    k_n: int          # hidden neurons
    b_n: float        # inner-weight sphere radius
    l_n: float        # smoothness scale; stepsize is its inverse
    lambda_n: float   # gradient stepsize
    t_n: int          # theoretical number of descent steps
    beta_n: float     # truncation level
    constants: ScheduleConstants = ScheduleConstants()

    def verify(self) -> None:
        """Assert every field is recomputable from (n, d, constants)."""
        ref = schedule_from_n(self.n, self.d, self.constants)
        for name in ("k_n", "b_n", "l_n", "lambda_n", "t_n", "beta_n"):
            if getattr(self, name) != getattr(ref, name):
                raise AssertionError(
                    f"schedule field {name} inconsistent: "
                    f"{getattr(self, name)} != {getattr(ref, name)}")


def schedule_from_n(n: int, d: int,
                    constants: ScheduleConstants = ScheduleConstants()
                    ) -> TheoreticalSchedule:
    """Evaluate the schedule formulas (natural logarithm throughout)."""
    if n < 2:
        raise DomainError(f"need n >= 2 so that log n > 0, got {n}")
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    log_n = math.log(n)
    k_n = math.ceil(constants.c7 * math.sqrt(n))
    b_n = (1.0 / math.sqrt(d)) * log_n ** 2 * k_n * n ** 2
    l_n = constants.c8 * log_n ** 6 * k_n ** 2.5
    t_n = math.ceil(k_n * log_n ** 2 * l_n)
    return TheoreticalSchedule(
        n=n, d=d, k_n=k_n, b_n=b_n, l_n=l_n, lambda_n=1.0 / l_n, t_n=t_n,
        beta_n=constants.c5 * log_n, constants=constants)


def init_weights(schedule: TheoreticalSchedule, mode: str,
                 rng: RngStream) -> ShallowNetParams:
    """Random starting weights.

    Inner weights are uniform on the radius-B_n sphere, inner biases
    uniform on [-B_n sqrt(d), B_n sqrt(d)].  Outer weights are all zero
    (``mode='zeros'``) or uniform on [-c4/K_n, c4/K_n] (``mode='uniform-small'``);
    both satisfy the initialization bounds |alpha0| <= c3, |alpha_k| <= c4/K_n.
    """
    if mode not in ("zeros", "uniform-small"):
        raise ValueError(f"unknown init mode {mode!r}")
    k, d, b = schedule.k_n, schedule.d, schedule.b_n
    c = schedule.constants
    gen = rng.generator()
    beta = sample_uniform_sphere(d, b, gen, size=k)
    gamma = sample_uniform_interval(-b * math.sqrt(d), b * math.sqrt(d),
                                    gen, size=k)
    if mode == "zeros":
        alpha0, alpha = 0.0, np.zeros(k)
    else:
        bound = c.c4 / k
        if bound > c.c3:
            raise DomainError(
                f"uniform-small init needs c4/K_n <= c3, got {bound} > {c.c3}")
        alpha0 = float(sample_uniform_interval(-bound, bound, gen))
        alpha = sample_uniform_interval(-bound, bound, gen, size=k)
    return ShallowNetParams(alpha0, alpha, beta, gamma)


def train_gd(data: LabeledDataset, schedule: TheoreticalSchedule,
             step_cap: int | None = DEFAULT_STEP_CAP,
             rng: RngStream = RngStream(0),
             init_mode: str = "zeros",
             init: ShallowNetParams | None = None,
             trace: bool = False) -> TrainedEstimator:
    """Fixed-step full-batch gradient descent on the penalized risk.

    Runs w(t+1) = w(t) - lambda_n * grad F(w(t)) for min(t_n, step_cap)
    steps from :func:`init_weights` (or an explicit ``init``).  When
    ``trace`` is set, the estimator records F at w(0), ..., w(T).
    """
    if data.dim != schedule.d:
        raise DomainError(
            f"data dimension {data.dim} != schedule dimension {schedule.d}")
    params = init.copy() if init is not None else init_weights(
        schedule, init_mode, rng)
    steps = schedule.t_n if step_cap is None else min(schedule.t_n, int(step_cap))
    c2, k_n, lam = schedule.constants.c2, schedule.k_n, schedule.lambda_n
    history = []
    if trace:
        history.append(penalized_risk(params, data, c2, k_n))
    for _ in range(steps):
        grad = risk_gradient(params, data, c2, k_n)
        params = ShallowNetParams(
            params.alpha0 - lam * grad.alpha0,
            params.alpha - lam * grad.alpha,
            params.beta - lam * grad.beta,
            params.gamma - lam * grad.gamma)
        if trace:
            value = penalized_risk(params, data, c2, k_n)
            if not math.isfinite(value):
                raise NonFiniteRisk(f"risk became {value} during descent")
            history.append(value)
    final_risk = penalized_risk(params, data, c2, k_n)
    if not math.isfinite(final_risk):
        raise NonFiniteRisk("final risk is not finite (check constants)")
    return TrainedEstimator(
        kind="shallow-gd",
        raw_predict=lambda x, p=params: forward(p, x),
        beta_n=schedule.beta_n,
        params=params,
        trace=np.asarray(history) if trace else None)


def custom_schedule(base: TheoreticalSchedule, **overrides) -> TheoreticalSchedule:
    """A schedule with explicit field overrides (lambda_n tracks l_n)."""
    out = replace(base, **overrides)
    if "l_n" in overrides and "lambda_n" not in overrides:
        out = replace(out, lambda_n=1.0 / out.l_n)
    return out


def descent_safe_smoothness(params0: ShallowNetParams, data: LabeledDataset,
                            c2: float, steps: int) -> float:
    """A provably sufficient smoothness constant for monotone descent.

    Returns L such that the gradient of the penalized risk is L-Lipschitz
    on the ball around ``params0`` that fixed-step descent with stepsize
    1/L can reach within ``steps`` steps; descending with that stepsize
    then produces a non-increasing risk sequence.

    The bound majorizes the Hessian 2/n sum_i (g_i g_i^T + r_i H_i)
    + (2 c2/K) P_alpha over the reach ball of radius
    rho = sqrt(8 * steps * max(F(w0), 1) / L) using sigma' <= 1/4,
    |sigma''| <= 0.1, and data-driven norms, then also enforces the
    companion gradient-norm condition by inflating L if necessary.
    """
    k = params0.hidden_count
    f0 = max(penalized_risk(params0, data, c2, k), 1.0)
    u_sq = float((data.x ** 2).sum(axis=1).max()) + 1.0  # max ||(X_i, 1)||^2
    y_max = float(np.abs(data.y).max())
    a0 = abs(params0.alpha0)
    a_l1 = float(np.abs(params0.alpha).sum())
    a_max = float(np.abs(params0.alpha).max()) if k else 0.0

    def hessian_bound(rho: float) -> float:
        amax = a_max + rho
        r_max = a0 + rho + a_l1 + math.sqrt(k) * rho + y_max
        g_sq = (1.0 + k) + amax ** 2 * k * u_sq / 16.0
        h_op = math.sqrt(u_sq) / 4.0 + 0.1 * amax * u_sq
        return 2.0 * g_sq + 2.0 * r_max * h_op + 2.0 * c2 / max(k, 1)

    def grad_bound(rho: float) -> float:
        amax = a_max + rho
        r_max = a0 + rho + a_l1 + math.sqrt(k) * rho + y_max
        g_norm = math.sqrt((1.0 + k) + amax ** 2 * k * u_sq / 16.0)
        pen = 2.0 * c2 * (a0 + a_l1 + (math.sqrt(k) + 1) * rho) / max(k, 1)
        return 2.0 * r_max * g_norm + pen

    # The map L -> hessian_bound(rho(L)) is decreasing in L, so one
    # evaluation at the L=1 ball radius gives a self-consistent constant.
    rho1 = math.sqrt(8.0 * steps * f0)
    lip = max(hessian_bound(rho1), 1.0)
    for _ in range(64):
        rho = math.sqrt(8.0 * steps * f0 / lip)
        if grad_bound(rho) <= math.sqrt(2.0 * steps * lip * f0):
            break
        lip *= 2.0
    return lip
