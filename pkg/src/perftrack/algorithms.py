"""Projected-gradient steps (exact and mini-batch), contraction diagnostics, and
performatively-stable-point solvers."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .distmap import GaussianLocationMap, SampleBatch, expected_gradient, sample
from .problem import ProblemInstance
from .projection import ConstraintSet, project

MODES = ("exact", "greedy", "lazy")


class ConvergenceError(RuntimeError):
    """Fixed-point iteration failed to reach tolerance within max_iter."""


class InfeasibleStepSizeError(ValueError):
    """No step size achieves the requested contraction ratio."""


class ContractionFactors(NamedTuple):
    rho: float
    lam: float
    contractive: bool


class StepSizeInterval(NamedTuple):
    lo: float
    hi: float


@dataclass(frozen=True)
class AlgorithmConfig:
    """Per-step step sizes and (for the stochastic modes) batch sizes."""

    step_sizes: np.ndarray
    mode: str = "exact"
    batch_sizes: Optional[np.ndarray] = None

    def __post_init__(self):
        etas = np.atleast_1d(np.asarray(self.step_sizes, dtype=float))
        if etas.ndim != 1 or not np.isfinite(etas).all() or np.any(etas <= 0):
            raise ValueError("step_sizes must be a 1-D array of positive floats")
        object.__setattr__(self, "step_sizes", etas)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "exact":
            if self.batch_sizes is not None:
                raise ValueError("exact mode takes no batch sizes")
            return
        if self.batch_sizes is None:
            raise ValueError(f"{self.mode} mode requires batch_sizes")
        batches = np.atleast_1d(np.asarray(self.batch_sizes))
        if batches.ndim != 1 or np.any(batches < 1) or np.any(batches != batches.astype(int)):
            raise ValueError("batch_sizes must be integers >= 1")
        batches = batches.astype(int)
        if self.mode == "greedy" and np.any(batches != 1):
            raise ValueError("greedy mode draws exactly one sample per step")
        object.__setattr__(self, "batch_sizes", batches)


def contraction_factor(alpha: float, beta: float, eps: float, eta: float) -> ContractionFactors:
    """rho = max(|1 - eta*alpha|, |1 - eta*beta|) for the frozen-distribution
    gradient map and lam = rho + eta*beta*eps once the decision feeds back into
    the data; the step contracts when lam < 1."""
    if not (alpha > 0 and beta >= alpha):
        raise ValueError("need 0 < alpha <= beta")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not eta > 0:
        raise ValueError("eta must be positive")
    rho = max(abs(1.0 - eta * alpha), abs(1.0 - eta * beta))
    lam = rho + eta * beta * eps
    return ContractionFactors(rho=rho, lam=lam, contractive=bool(lam < 1.0))


def step_size_interval(alpha: float, beta: float, eps: float, r: float) -> StepSizeInterval:
    """The interval [(1-r)/(alpha + beta*eps), (1+r)/(beta*(1+eps))] of step
    sizes targeting contraction ratio r; empty intervals raise.

    Every eta inside yields lam < 1.  When eps = 0 the interval is exactly the
    lam <= r region; for eps > 0 that region starts at the slightly larger
    (1-r)/(alpha - beta*eps) instead of at lo."""
    if not (alpha > 0 and beta >= alpha):
        raise ValueError("need 0 < alpha <= beta")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    lo = (1.0 - r) / (alpha + beta * eps)
    hi = (1.0 + r) / (beta * (1.0 + eps))
    if lo > hi:
        raise InfeasibleStepSizeError(
            f"no step size reaches contraction {r} (interval [{lo}, {hi}] empty); "
            "the sensitivity eps is too large for this ratio")
    return StepSizeInterval(lo=lo, hi=hi)


def opgd_step(x, grad, cset: ConstraintSet, eta: float) -> np.ndarray:
    """One exact online projected gradient step: project(x - eta * grad)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if x.shape != grad.shape:
        raise ValueError("x and grad must have equal shape")
    return project(cset, x - eta * grad)


def ospgd_step(x, batch: SampleBatch, loss, dist_map: GaussianLocationMap,
               cset: ConstraintSet, eta: float) -> tuple[np.ndarray, float]:
    """One mini-batch step.  Returns the next iterate and the realized gradient
    error xi = ||batch gradient - expected gradient at the induced distribution||."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    if batch.dim != x.size:
        raise ValueError(f"batch dimension {batch.dim} does not match x ({x.size})")
    g = loss.grad(x, batch.values).mean(axis=0)
    xi = float(np.linalg.norm(g - expected_gradient(dist_map, loss, x, x)))
    return project(cset, x - eta * g), xi


def solve_stable_point(instance: ProblemInstance, t: int, *, eta: Optional[float] = None,
                       tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """Fixed point of x -> project(x - eta * grad f_t(x, D_t(x))) at step t,
    found by iterating the contraction; eta defaults to 2/(alpha + beta)."""
    if not 0 <= t < instance.horizon:
        raise ValueError(f"step {t} outside horizon {instance.horizon}")
    alpha = float(instance.constants.alpha[t])
    beta = float(instance.constants.beta[t])
    eps = float(instance.constants.eps[t])
    if eta is None:
        eta = 2.0 / (alpha + beta)
    factors = contraction_factor(alpha, beta, eps, eta)
    if not factors.contractive:
        raise ValueError(
            f"step map is not contractive at step {t} (lambda = {factors.lam:.6g}); "
            "no convergence guarantee")
    loss, cset, dmap = instance.losses[t], instance.constraints[t], instance.maps[t]
    x = project(cset, np.zeros(instance.dim))
    for _ in range(max_iter):
        x_next = opgd_step(x, expected_gradient(dmap, loss, x, x), cset, eta)
        if float(np.linalg.norm(x_next - x)) <= tol:
            return x_next
        x = x_next
    raise ConvergenceError(f"stable point not reached in {max_iter} iterations at step {t}")


def stable_point_budget_kkt(gamma, kappa: float, mu_scale: float, capacity: float,
                            *, tol: float = 1e-12) -> np.ndarray:
    """Stable point of the separable quadratic family over sum(x) <= capacity,
    from the stationarity system x_i = (gamma_i - lam)/(mu_scale + 2*kappa) with
    the multiplier lam found by bisection on the budget residual."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if gamma.ndim != 1 or not np.isfinite(gamma).all():
        raise ValueError("gamma must be a finite 1-D array")
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if mu_scale < 0:
        raise ValueError("mu_scale must be nonnegative")
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    denom = mu_scale + 2.0 * kappa
    x_free = gamma / denom
    if float(x_free.sum()) <= capacity:
        return x_free
    # Budget binds; residual is strictly decreasing in lam with a root in [0, max gamma].
    lo, hi = 0.0, float(np.max(gamma))
    lam = 0.5 * (lo + hi)
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        residual = float(np.sum(gamma - lam)) / denom - capacity
        if abs(residual) <= tol:
            break
        if residual > 0:
            lo = lam
        else:
            hi = lam
    return (gamma - lam) / denom


@dataclass(frozen=True)
class RunRecord:
    """One trajectory: iterates (T, d), tracking error ||x_t - stable_t|| (T,),
    stable-point drift (T-1,), for stochastic modes the realized gradient errors
    xi (T-1,), and the seed the caller attaches for bookkeeping."""

    iterates: np.ndarray
    tracking_error: np.ndarray
    drift: np.ndarray
    xi_samples: Optional[np.ndarray] = None
    seed: Optional[int] = None


def _drift(stable_points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.diff(stable_points, axis=0), axis=1)


def _check_run_inputs(instance: ProblemInstance, x0, stable_points) -> tuple:
    x0 = np.asarray(x0, dtype=float)
    stable_points = np.asarray(stable_points, dtype=float)
    if x0.shape != (instance.dim,):
        raise ValueError(f"x0 must have shape ({instance.dim},)")
    if stable_points.shape != (instance.horizon, instance.dim):
        raise ValueError("stable_points must have shape (horizon, dim)")
    return x0, stable_points


def run_opgd(instance: ProblemInstance, x0, step_sizes,
             stable_points, seed: Optional[int] = None) -> RunRecord:
    """Exact-gradient trajectory x_{t+1} = project(x_t - eta_t * grad f_t(x_t, D_t(x_t)))."""
    x0, stable_points = _check_run_inputs(instance, x0, stable_points)
    T, d = instance.horizon, instance.dim
    etas = np.broadcast_to(np.asarray(step_sizes, dtype=float), (T,))
    iterates = np.empty((T, d))
    iterates[0] = x0
    x = x0
    for t in range(T - 1):
        g = expected_gradient(instance.maps[t], instance.losses[t], x, x)
        x = opgd_step(x, g, instance.constraints[t], float(etas[t]))
        iterates[t + 1] = x
    errors = np.linalg.norm(iterates - stable_points, axis=1)
    return RunRecord(iterates=iterates, tracking_error=errors,
                     drift=_drift(stable_points), seed=seed)


def run_ospgd(instance: ProblemInstance, x0, config: AlgorithmConfig,
              rng: np.random.Generator, stable_points,
              seed: Optional[int] = None) -> RunRecord:
    """Mini-batch trajectory; greedy mode (N=1) and lazy mode (N>1) differ only
    in the batch sizes carried by config."""
    if config.mode == "exact":
        raise ValueError("use run_opgd for exact mode")
    x0, stable_points = _check_run_inputs(instance, x0, stable_points)
    T, d = instance.horizon, instance.dim
    etas = np.broadcast_to(config.step_sizes, (T,))
    batches = np.broadcast_to(config.batch_sizes, (T,))
    iterates = np.empty((T, d))
    iterates[0] = x0
    xi = np.empty(T - 1)
    x = x0
    for t in range(T - 1):
        batch = sample(instance.maps[t], x, int(batches[t]), rng, step=t)
        x, xi[t] = ospgd_step(x, batch, instance.losses[t], instance.maps[t],
                              instance.constraints[t], float(etas[t]))
        iterates[t + 1] = x
    errors = np.linalg.norm(iterates - stable_points, axis=1)
    return RunRecord(iterates=iterates, tracking_error=errors,
                     drift=_drift(stable_points), xi_samples=xi, seed=seed)
