"""Independent reference computations used to freeze expected test values.

Everything here is deliberately written against the underlying math, not
against the package internals, so a bug in the library cannot silently
propagate into the expectations.
"""
from __future__ import annotations

import math

import numpy as np

from perftrack.projection import (
    Box,
    BudgetHalfspace,
    ConstraintSet,
    EuclideanBall,
    FullSpace,
    NonnegBudget,
)


def gaussian_abs_moment_root(k: int) -> float:
    """k-th root of E|Z|^k for Z ~ N(0, 1), via the closed-form moment.

    E|Z|^k = 2^(k/2) * Gamma((k + 1) / 2) / sqrt(pi).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    moment = 2.0 ** (k / 2.0) * math.gamma((k + 1) / 2.0) / math.sqrt(math.pi)
    return moment ** (1.0 / k)


def gaussian_fit_oracle(theta: float, k_max: int = 10) -> float:
    """Population value of the moment-ratio tail fit for a standard Gaussian."""
    return max(
        gaussian_abs_moment_root(k) / k**theta for k in range(1, k_max + 1)
    )


def chi_mean(d: int) -> float:
    """E||Z|| for Z ~ N(0, I_d): sqrt(2) * Gamma((d+1)/2) / Gamma(d/2)."""
    return math.sqrt(2.0) * math.gamma((d + 1) / 2.0) / math.gamma(d / 2.0)


def _feasible_mask(cset: ConstraintSet, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized membership test for an (n, d) array of candidate points."""
    if isinstance(cset, FullSpace):
        return np.ones(pts.shape[0], dtype=bool)
    if isinstance(cset, Box):
        return np.all((pts >= cset.lo - tol) & (pts <= cset.hi + tol), axis=1)
    if isinstance(cset, EuclideanBall):
        center = np.asarray(cset.center, dtype=float)
        return np.linalg.norm(pts - center, axis=1) <= cset.radius + tol
    if isinstance(cset, BudgetHalfspace):
        return pts.sum(axis=1) <= cset.capacity + tol
    if isinstance(cset, NonnegBudget):
        return (np.all(pts >= -tol, axis=1)) & (pts.sum(axis=1) <= cset.capacity + tol)
    raise TypeError(f"unsupported constraint set {type(cset).__name__}")


def grid_local_best(
    cset: ConstraintSet,
    y: np.ndarray,
    candidate: np.ndarray,
    *,
    resolution: float = 1e-3,
    box_radius: float = 0.025,
) -> np.ndarray:
    """Best feasible grid point near `candidate` at the given resolution.

    The grid covers the cube candidate +/- box_radius with spacing exactly
    `resolution`.  Because the squared distance to y is convex and the
    feasible region is convex, a candidate that is optimal among all
    feasible points of a dense neighborhood grid is globally optimal up to
    the grid spacing.  So comparing `candidate` against the returned point
    certifies (or refutes) the projection without searching the whole set.
    """
    y = np.asarray(y, dtype=float)
    candidate = np.asarray(candidate, dtype=float)
    d = y.size
    n_side = int(round(2 * box_radius / resolution)) + 1
    axes = [
        candidate[i] + np.linspace(-box_radius, box_radius, n_side)
        for i in range(d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    feas = _feasible_mask(cset, pts)
    if not feas.any():
        raise RuntimeError("no feasible grid point near candidate")
    pts = pts[feas]
    dists = np.linalg.norm(pts - y, axis=1)
    return pts[int(np.argmin(dists))]


def envelope_explicit(
    lambdas: np.ndarray, disturbances: np.ndarray, e0: float
) -> np.ndarray:
    """Closed-form product-sum expansion of the error recursion.

    B[t] = e0 * prod_{i<=t} lam_i + sum_{j<=t} u_j * prod_{j<i<=t} lam_i,
    computed directly so it cannot share a bug with the iterative form.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    disturbances = np.asarray(disturbances, dtype=float)
    T = lambdas.size
    out = np.empty(T)
    for t in range(T):
        acc = e0 * np.prod(lambdas[: t + 1])
        for j in range(t + 1):
            acc += disturbances[j] * np.prod(lambdas[j + 1 : t + 1])
        out[t] = acc
    return out
