"""Sub-Weibull tail descriptors: closure algebra, tail/quantile conversion, fitting.

A descriptor (theta, nu) certifies that the k-th moment roots of a random variable
grow at most like nu * k**theta: theta = 1/2 behaves sub-Gaussian, theta = 1
sub-exponential, larger theta heavier.  Descriptors are conservative certificates,
not distributions; the algebra only propagates valid upper bounds and never
tightens them.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

MIN_FIT_SAMPLES = 100
# Higher empirical moments are noise-dominated at desk-scale sample sizes.
DEFAULT_MOMENT_CAP = 10


@dataclass(frozen=True)
class SubWeibull:
    """Tail class of variables z with ||z||_k <= nu * k**theta for all k >= 1."""

    theta: float
    nu: float

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError("theta must be positive and finite")
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError("nu must be positive and finite")


def sw_sum(a: SubWeibull, b: SubWeibull) -> SubWeibull:
    """Descriptor of z + y, valid under arbitrary dependence between the terms."""
    return SubWeibull(max(a.theta, b.theta), a.nu + b.nu)


def sw_product(a: SubWeibull, b: SubWeibull) -> SubWeibull:
    """Descriptor of z * y; the moment-matching factor is
    (t1+t2)**(t1+t2) / (t1**t1 * t2**t2)."""
    theta = a.theta + b.theta
    psi = theta**theta / (a.theta**a.theta * b.theta**b.theta)
    return SubWeibull(theta, psi * a.nu * b.nu)


def sw_affine(a: SubWeibull, scale: float, shift: float) -> SubWeibull:
    """Descriptor of scale * z + shift."""
    nu = abs(scale) * a.nu + abs(shift)
    if nu == 0.0:
        raise ValueError("scale and shift cannot both be zero (degenerate descriptor)")
    return SubWeibull(a.theta, nu)


def tail_bound(a: SubWeibull, epsilon: float) -> float:
    """Upper bound on P(|z| >= epsilon), clamped into (0, 1]."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    exponent = (a.theta / (2.0 * math.e)) * (epsilon / a.nu) ** (1.0 / a.theta)
    return min(1.0, 2.0 * math.exp(-exponent))


def hp_quantile(a: SubWeibull, delta: float) -> float:
    """The epsilon at which tail_bound reaches delta; exact inverse of tail_bound."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return (2.0 * math.e / a.theta) ** a.theta * math.log(2.0 / delta) ** a.theta * a.nu


def sw_vector_norm(dim: int, per_coord: SubWeibull) -> SubWeibull:
    """Descriptor of the Euclidean norm of a dim-vector whose coordinates each
    satisfy the per-coordinate descriptor."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return SubWeibull(per_coord.theta, 2.0**per_coord.theta * math.sqrt(dim) * per_coord.nu)


def sw_bounded(lo: float, hi: float) -> SubWeibull:
    """Descriptor of z - E[z] for any z supported on [lo, hi]."""
    if not hi > lo:
        raise ValueError("hi must exceed lo")
    return SubWeibull(0.5, (hi - lo) / math.sqrt(2.0))


def sw_gaussian(sigma: float, constant: float = 1.0) -> SubWeibull:
    """Descriptor of a centered Gaussian with standard deviation sigma.

    The sub-Gaussian-to-descriptor conversion carries an absolute constant the
    usual references leave unspecified; it is exposed with default 1.0.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if not constant > 0:
        raise ValueError("constant must be positive")
    return SubWeibull(0.5, constant * sigma)


def fit_subweibull(samples, theta: float, k_max: int = DEFAULT_MOMENT_CAP) -> float:
    """Empirical proxy scale: max over k <= k_max of the k-th absolute moment
    root divided by k**theta.

    theta is supplied rather than estimated; joint estimation of (theta, nu) is
    ill-posed at moderate sample sizes.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    z = np.abs(np.asarray(samples, dtype=float).ravel())
    if z.size < MIN_FIT_SAMPLES:
        raise ValueError(f"need at least {MIN_FIT_SAMPLES} samples, got {z.size}")
    if not np.isfinite(z).all():
        raise ValueError("samples must be finite")
    if np.all(z == 0.0):
        warnings.warn("all samples are zero; returning degenerate nu = 0", RuntimeWarning)
        return 0.0
    ks = np.arange(1, k_max + 1, dtype=float)
    roots = np.array([np.mean(z**k) ** (1.0 / k) for k in ks])
    return float(np.max(roots / ks**theta))
