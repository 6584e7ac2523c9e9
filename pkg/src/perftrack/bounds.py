"""Tracking-error envelopes: deterministic, in-expectation, high-probability,
and Markov variants, plus the asymptotic and stable-versus-optimal gaps.

All envelope evaluators share one recursion.  With contraction factors lam_t and
per-step disturbances u_t, the bound on e_{t+1} is

    B[t] = lam_t * B[t-1] + u_t,   B[-1] = e0,

which equals the explicit product form prod(lam) * e0 + sum of partial products.
Entry B[t] bounds the error at time t+1; callers align to trajectories by
prepending the measured e0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class BoundInputs:
    """Per-step envelope inputs.  lambdas and phis cover the update steps
    (length T-1 for a horizon-T trajectory); the stochastic fields are only
    required by the evaluators that use them."""

    lambdas: np.ndarray
    phis: np.ndarray
    e0: float
    etas: Optional[np.ndarray] = None
    xi_means: Optional[np.ndarray] = None
    theta: Optional[float] = None
    nus: Optional[np.ndarray] = None
    delta: Optional[float] = None

    def __post_init__(self):
        lambdas = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        phis = np.atleast_1d(np.asarray(self.phis, dtype=float))
        if lambdas.ndim != 1 or lambdas.shape != phis.shape:
            raise ValueError("lambdas and phis must be 1-D arrays of equal length")
        if not np.isfinite(lambdas).all() or np.any(lambdas < 0):
            raise ValueError("lambdas must be nonnegative and finite")
        if not np.isfinite(phis).all() or np.any(phis < 0):
            raise ValueError("phis must be nonnegative and finite")
        if not (np.isfinite(self.e0) and self.e0 >= 0):
            raise ValueError("e0 must be nonnegative and finite")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "phis", phis)
        object.__setattr__(self, "e0", float(self.e0))
        for name in ("etas", "xi_means", "nus"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.atleast_1d(np.asarray(val, dtype=float))
            if arr.shape != lambdas.shape:
                raise ValueError(f"{name} must match lambdas in length")
            if not np.isfinite(arr).all() or np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative and finite")
            object.__setattr__(self, name, arr)
        if self.delta is not None and not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.theta is not None and not self.theta > 0:
            raise ValueError("theta must be positive")

    @property
    def steps(self) -> int:
        return self.lambdas.size


def _envelope(lambdas: np.ndarray, disturbances: np.ndarray, e0: float) -> np.ndarray:
    out = np.empty(lambdas.size)
    cur = e0
    for t in range(lambdas.size):
        cur = lambdas[t] * cur + disturbances[t]
        out[t] = cur
    return out


def _require(inputs: BoundInputs, *names: str) -> None:
    missing = [n for n in names if getattr(inputs, n) is None]
    if missing:
        raise ValueError(f"missing envelope inputs: {', '.join(missing)}")


def opgd_envelope(inputs: BoundInputs) -> np.ndarray:
    """Deterministic envelope: B[t] = lam_t*B[t-1] + phi_t bounds e_{t+1}."""
    return _envelope(inputs.lambdas, inputs.phis, inputs.e0)


def ospgd_expectation_envelope(inputs: BoundInputs) -> np.ndarray:
    """In-expectation envelope: the disturbance gains the mean gradient error,
    u_t = phi_t + eta_t * E[xi_t]."""
    _require(inputs, "etas", "xi_means")
    return _envelope(inputs.lambdas, inputs.phis + inputs.etas * inputs.xi_means, inputs.e0)


def hp_prefactor(theta: float, delta: float) -> float:
    """(2e/theta)**theta * log(2/delta)**theta, the sub-Weibull quantile factor."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return (2.0 * math.e / theta) ** theta * math.log(2.0 / delta) ** theta


def ospgd_hp_envelope(inputs: BoundInputs) -> np.ndarray:
    """High-probability envelope at level 1 - delta: the quantile prefactor
    multiplies the whole recursion run with disturbances phi_t + eta_t * nu_t,
    where nu_t is the per-step sub-Weibull proxy scale of xi_t."""
    _require(inputs, "etas", "nus", "theta", "delta")
    base = _envelope(inputs.lambdas, inputs.phis + inputs.etas * inputs.nus, inputs.e0)
    return hp_prefactor(inputs.theta, inputs.delta) * base


def markov_envelope(inputs: BoundInputs) -> np.ndarray:
    """Markov-inequality envelope at level 1 - delta: (1/delta) times the
    in-expectation envelope.  Needs only first moments of xi, at the price of a
    1/delta rather than polylog(1/delta) dependence."""
    _require(inputs, "etas", "xi_means", "delta")
    return ospgd_expectation_envelope(inputs) / inputs.delta


def limsup_bound(lambda_tilde: float, phi_tilde: float) -> float:
    """Asymptotic tracking error phi_tilde / (1 - lambda_tilde) under uniform
    bounds lam_t <= lambda_tilde < 1 and phi_t <= phi_tilde."""
    if not 0.0 <= lambda_tilde < 1.0:
        raise ValueError("lambda_tilde must lie in [0, 1)")
    if phi_tilde < 0:
        raise ValueError("phi_tilde must be nonnegative")
    return phi_tilde / (1.0 - lambda_tilde)


def stable_optimum_gap(eps: float, gamma_lip: float, alpha: float) -> float:
    """Bound 2*eps*gamma_lip/alpha on the distance between the performatively
    stable point and the performative optimum."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if eps < 0 or gamma_lip < 0:
        raise ValueError("eps and gamma_lip must be nonnegative")
    return 2.0 * eps * gamma_lip / alpha
