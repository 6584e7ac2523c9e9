"""Decision-dependent Gaussian location maps: sampling, closed-form expected
gradients, and empirical 1-D Wasserstein machinery."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussianLocationMap:
    """z | x has independent coordinates Normal(mu_scale * x_i, sigma**2).

    A translation family: changing the decision shifts the distribution without
    reshaping it, so the Wasserstein-1 sensitivity equals |mu_scale| exactly.
    """

    mu_scale: float
    sigma: float
    dim: int

    def __post_init__(self):
        if not (np.isfinite(self.mu_scale)):
            raise ValueError("mu_scale must be finite")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError("sigma must be positive and finite")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def mean(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.mu_scale * x

    @property
    def sensitivity(self) -> float:
        return abs(self.mu_scale)


@dataclass(frozen=True)
class SampleBatch:
    """n i.i.d. draws (rows) from the map at a fixed decision, tagged with the step."""

    values: np.ndarray
    step: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"values must be (n, dim), got shape {values.shape}")
        if values.shape[0] < 1:
            raise ValueError("batch must contain at least one sample")
        if not np.isfinite(values).all():
            raise ValueError("samples must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def sample(dist_map: GaussianLocationMap, x, n: int, rng: np.random.Generator,
           step: int = 0) -> SampleBatch:
    """n i.i.d. draws from the distribution induced by decision x."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    if x.shape != (dist_map.dim,):
        raise ValueError(f"x must have shape ({dist_map.dim},), got {x.shape}")
    values = dist_map.mean(x) + dist_map.sigma * rng.standard_normal((n, dist_map.dim))
    return SampleBatch(values=values, step=step)


def expected_gradient(dist_map: GaussianLocationMap, loss, x, y) -> np.ndarray:
    """Gradient in x of E[loss(x, z)] with z drawn from the distribution induced
    by y.  Exact for the supported families, whose gradients are affine in z, so
    expectation and gradient interchange and only the mean of z enters."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    expected_grad = getattr(loss, "expected_grad", None)
    if expected_grad is None:
        raise TypeError(
            f"loss family {type(loss).__name__} does not define expected_grad")
    return expected_grad(x, dist_map.mean(y))


def w1_empirical_1d(a, b) -> float:
    """Empirical Wasserstein-1 distance between two scalar samples: the mean
    absolute difference of order statistics.  Unequal lengths are truncated to
    the shorter sample with a warning."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("samples must be finite")
    if a.size != b.size:
        warnings.warn(
            f"unequal sample sizes {a.size} and {b.size}; truncating to the shorter",
            RuntimeWarning)
        m = min(a.size, b.size)
        a, b = a[:m], b[:m]
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


def w1_translation(dist_map: GaussianLocationMap, x, x_prime) -> float:
    """Closed-form Wasserstein-1 distance between the distributions induced by
    x and x_prime; for a location family it is the norm of the mean shift."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    return float(np.linalg.norm(dist_map.mean(x) - dist_map.mean(x_prime)))


def sensitivity_estimate(dist_map: GaussianLocationMap, x, x_prime, n: int,
                         rng: np.random.Generator) -> float:
    """Monte Carlo estimate of W1(D(x), D(x')) / ||x - x'|| using common random
    numbers, which are exact for translation families up to sorting noise."""
    x = np.asarray(x, dtype=float)
    x_prime = np.asarray(x_prime, dtype=float)
    gap = float(np.linalg.norm(x - x_prime))
    if gap == 0.0:
        raise ValueError("x and x_prime must differ")
    if n < 1:
        raise ValueError("n must be >= 1")
    noise = dist_map.sigma * rng.standard_normal((n, dist_map.dim))
    a = dist_map.mean(x) + noise
    b = dist_map.mean(x_prime) + noise
    per_coord = np.array([w1_empirical_1d(a[:, j], b[:, j]) for j in range(dist_map.dim)])
    return float(np.linalg.norm(per_coord) / gap)
