"""Time-varying decision-dependent problem instances.

A problem instance bundles, per step: a loss family with closed-form gradients,
a closed convex constraint set, a Gaussian location map, and the regularity
constants (strong convexity, smoothness, distributional sensitivity) that the
tracking envelopes consume.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .distmap import GaussianLocationMap
from .projection import ConstraintSet, set_dim


@dataclass(frozen=True)
class RegularityConstants:
    """Per-step alpha (strong convexity), beta (joint smoothness in decision and
    data), eps (Wasserstein sensitivity of the map), and optionally gamma_lip
    (Lipschitz constant of the loss in its data argument, used only by the
    stable-versus-optimal gap)."""

    alpha: np.ndarray
    beta: np.ndarray
    eps: np.ndarray
    gamma_lip: Optional[np.ndarray] = None

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        eps = np.atleast_1d(np.asarray(self.eps, dtype=float))
        if not (alpha.shape == beta.shape == eps.shape) or alpha.ndim != 1:
            raise ValueError("alpha, beta, eps must be 1-D arrays of equal length")
        if not np.isfinite(alpha).all() or np.any(alpha <= 0):
            raise ValueError("alpha must be positive and finite")
        if not np.isfinite(beta).all() or np.any(beta < alpha):
            raise ValueError("beta must be finite and >= alpha")
        if not np.isfinite(eps).all() or np.any(eps < 0):
            raise ValueError("eps must be nonneg and finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "eps", eps)
        if self.gamma_lip is not None:
            glip = np.atleast_1d(np.asarray(self.gamma_lip, dtype=float))
            if glip.shape != alpha.shape:
                raise ValueError("gamma_lip must match the other constants in length")
            if not np.isfinite(glip).all() or np.any(glip < 0):
                raise ValueError("gamma_lip must be nonneg and finite")
            object.__setattr__(self, "gamma_lip", glip)

    @property
    def horizon(self) -> int:
        return self.alpha.size


@dataclass(frozen=True)
class ContractionReport:
    """Per-step existence-condition ratios eps*beta/alpha and their verdicts."""

    ratios: np.ndarray
    ok: np.ndarray
    all_ok: bool


def validate_contraction(constants: RegularityConstants) -> ContractionReport:
    """Check the stable-point existence condition eps*beta/alpha < 1 per step."""
    if np.any(constants.alpha <= 0) or np.any(constants.beta <= 0):
        raise ValueError("alpha and beta must be positive")
    ratios = constants.eps * constants.beta / constants.alpha
    ok = ratios < 1.0
    return ContractionReport(ratios=ratios, ok=ok, all_ok=bool(ok.all()))


@dataclass(frozen=True)
class AdditiveNoiseLoss:
    """sum_i (x_i**2 + z_i): quadratic cost with purely additive noise, so the
    gradient in x is noise-free.  The scalar case admits closed-form optima."""

    dim: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def value(self, x, z) -> float:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return float(np.sum(x**2) + np.sum(z))

    def grad(self, x, z) -> np.ndarray:
        # z enters additively; per-sample gradients coincide with 2x.
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.broadcast_to(2.0 * x, z.shape).copy()

    def expected_grad(self, x, z_mean) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 2.0 * x


@dataclass(frozen=True)
class SeparableQuadraticLoss:
    """sum_i (z_i*x_i - gamma_i*x_i + kappa_i*x_i**2): per-coordinate strongly
    convex quadratic with linear exposure to the data."""

    gamma: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        kappa = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        if gamma.shape != kappa.shape or gamma.ndim != 1:
            raise ValueError("gamma and kappa must be 1-D arrays of equal length")
        if not np.isfinite(gamma).all():
            raise ValueError("gamma must be finite")
        if not np.isfinite(kappa).all() or np.any(kappa <= 0):
            raise ValueError("kappa must be positive and finite")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "kappa", kappa)

    @property
    def dim(self) -> int:
        return self.gamma.size

    def value(self, x, z) -> float:
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return float(np.sum(z * x - self.gamma * x + self.kappa * x**2))

    def grad(self, x, z) -> np.ndarray:
        # Affine in z, so batch means commute with the gradient.
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return z - self.gamma + 2.0 * self.kappa * x

    def expected_grad(self, x, z_mean) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z_mean = np.asarray(z_mean, dtype=float)
        return z_mean - self.gamma + 2.0 * self.kappa * x


Loss = Union[AdditiveNoiseLoss, SeparableQuadraticLoss]


def _loss_dim(loss: Loss) -> int:
    return loss.dim


def derive_constants(losses: Sequence[Loss],
                     maps: Sequence[GaussianLocationMap]) -> RegularityConstants:
    """Regularity constants recomputed from the family parameters: alpha and the
    decision-smoothness part of beta are Hessian eigenvalue bounds, the data
    part of beta is the Lipschitz constant of the gradient in z (1 for the
    quadratic family, 0 for additive noise), eps is the map sensitivity."""
    if len(losses) != len(maps):
        raise ValueError("losses and maps must have equal length")
    alpha, beta, eps, glip = [], [], [], []
    have_glip = True
    for loss, dmap in zip(losses, maps):
        if isinstance(loss, AdditiveNoiseLoss):
            alpha.append(2.0)
            beta.append(2.0)
            # d(loss)/dz is the all-ones vector.
            glip.append(float(np.sqrt(loss.dim)))
        elif isinstance(loss, SeparableQuadraticLoss):
            alpha.append(2.0 * float(np.min(loss.kappa)))
            beta.append(max(2.0 * float(np.max(loss.kappa)), 1.0))
            # d(loss)/dz = x is unbounded over unbounded sets; no finite constant.
            have_glip = False
        else:
            raise TypeError(f"unsupported loss family {type(loss).__name__}")
        eps.append(dmap.sensitivity)
    return RegularityConstants(
        alpha=np.array(alpha), beta=np.array(beta), eps=np.array(eps),
        gamma_lip=np.array(glip) if have_glip else None)


@dataclass(frozen=True)
class ProblemInstance:
    """Horizon-length sequences of losses, constraint sets, and maps, plus the
    regularity constants the envelopes consume.  Supplied constants that differ
    from the family-derived ones trigger a warning, not an error."""

    losses: tuple
    constraints: tuple
    maps: tuple
    constants: RegularityConstants

    def __post_init__(self):
        losses = tuple(self.losses)
        constraints = tuple(self.constraints)
        maps = tuple(self.maps)
        object.__setattr__(self, "losses", losses)
        object.__setattr__(self, "constraints", constraints)
        object.__setattr__(self, "maps", maps)
        T = len(losses)
        if T < 1:
            raise ValueError("horizon must be >= 1")
        if len(constraints) != T or len(maps) != T:
            raise ValueError("losses, constraints, maps must have equal length")
        if self.constants.horizon != T:
            raise ValueError(
                f"constants cover {self.constants.horizon} steps, horizon is {T}")
        d = _loss_dim(losses[0])
        for t in range(T):
            if _loss_dim(losses[t]) != d or set_dim(constraints[t]) != d or maps[t].dim != d:
                raise ValueError(f"dimension mismatch at step {t}")
        derived = derive_constants(losses, maps)
        same = (np.allclose(derived.alpha, self.constants.alpha, rtol=1e-9)
                and np.allclose(derived.beta, self.constants.beta, rtol=1e-9)
                and np.allclose(derived.eps, self.constants.eps, rtol=1e-9))
        if not same:
            warnings.warn(
                "supplied regularity constants differ from family-derived values; "
                "envelopes will use the supplied ones", UserWarning)

    @property
    def horizon(self) -> int:
        return len(self.losses)

    @property
    def dim(self) -> int:
        return _loss_dim(self.losses[0])


@dataclass(frozen=True)
class ClosedFormSummary:
    performative_optimum: float
    stable_point: float
    gap_bound: float


def additive_noise_closed_forms(mu_scale: float) -> ClosedFormSummary:
    """Closed forms for the scalar additive-noise family under a Gaussian
    location map with slope mu_scale: minimizing E_{z~D(x)}[x**2 + z] =
    x**2 + mu_scale*x gives the optimum -mu_scale/2; the stable point (where the
    decision-induced distribution is taken as fixed) is 0; the gap bound
    2*eps*gamma_lip/alpha evaluates to mu_scale."""
    if not (mu_scale >= 0 and np.isfinite(mu_scale)):
        raise ValueError("mu_scale must be nonnegative and finite")
    return ClosedFormSummary(
        performative_optimum=-mu_scale / 2.0,
        stable_point=0.0,
        gap_bound=mu_scale)
