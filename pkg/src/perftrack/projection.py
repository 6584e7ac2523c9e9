"""Euclidean projections onto the closed convex sets used by the tracking algorithms.

Every projection is exact and closed-form (the nonnegative-budget variant uses an
O(d log d) sort-based threshold), so iterate-versus-envelope comparisons carry no
inner-solver noise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

FEASIBILITY_TOL = 1e-12


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class FullSpace:
    """All of R^d; projection is the identity."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


@dataclass(frozen=True)
class Box:
    """Coordinatewise bounds lo <= x <= hi."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, "lo")
        hi = _as_vector(self.hi, "hi")
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have equal length")
        if np.any(hi < lo):
            raise ValueError("hi must be >= lo coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size


@dataclass(frozen=True)
class EuclideanBall:
    """{x : ||x - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = _as_vector(self.center, "center")
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValueError("radius must be positive and finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.size


@dataclass(frozen=True)
class BudgetHalfspace:
    """{x : sum(x) <= capacity}."""

    capacity: float
    dim: int

    def __post_init__(self):
        if not np.isfinite(self.capacity):
            raise ValueError("capacity must be finite")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "capacity", float(self.capacity))


@dataclass(frozen=True)
class NonnegBudget:
    """{x : x >= 0, sum(x) <= capacity}; empty for capacity < 0, hence disallowed."""

    capacity: float
    dim: int

    def __post_init__(self):
        if not (self.capacity >= 0 and np.isfinite(self.capacity)):
            raise ValueError("capacity must be nonnegative and finite")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "capacity", float(self.capacity))


ConstraintSet = Union[FullSpace, Box, EuclideanBall, BudgetHalfspace, NonnegBudget]


def set_dim(cset: ConstraintSet) -> int:
    return cset.dim


def _simplex_threshold(y: np.ndarray, total: float) -> np.ndarray:
    # Threshold lam with sum_i max(0, y_i - lam) = total, found exactly by sorting.
    u = np.sort(y)[::-1]
    cssv = np.cumsum(u) - total
    idx = np.arange(1, y.size + 1)
    rho = idx[u - cssv / idx > 0][-1]
    lam = cssv[rho - 1] / rho
    return np.maximum(y - lam, 0.0)


def project(cset: ConstraintSet, y) -> np.ndarray:
    """Exact Euclidean projection argmin_{v in cset} ||y - v||_2."""
    y = _as_vector(y, "y")
    if y.size != cset.dim:
        raise ValueError(f"dimension mismatch: y has {y.size}, set has {cset.dim}")
    if isinstance(cset, FullSpace):
        return y.copy()
    if isinstance(cset, Box):
        return np.clip(y, cset.lo, cset.hi)
    if isinstance(cset, EuclideanBall):
        diff = y - cset.center
        nrm = float(np.linalg.norm(diff))
        if nrm <= cset.radius:
            return y.copy()
        return cset.center + diff * (cset.radius / nrm)
    if isinstance(cset, BudgetHalfspace):
        excess = float(y.sum()) - cset.capacity
        if excess <= 0.0:
            return y.copy()
        return y - excess / y.size
    if isinstance(cset, NonnegBudget):
        clipped = np.maximum(y, 0.0)
        if float(clipped.sum()) <= cset.capacity:
            return clipped
        if cset.capacity == 0.0:
            return np.zeros_like(y)
        return _simplex_threshold(y, cset.capacity)
    raise TypeError(f"unsupported constraint set {type(cset).__name__}")


def contains(cset: ConstraintSet, y, tol: float = FEASIBILITY_TOL) -> bool:
    """Membership up to tolerance tol."""
    y = _as_vector(y, "y")
    if y.size != cset.dim:
        raise ValueError(f"dimension mismatch: y has {y.size}, set has {cset.dim}")
    if isinstance(cset, FullSpace):
        return True
    if isinstance(cset, Box):
        return bool(np.all(y >= cset.lo - tol) and np.all(y <= cset.hi + tol))
    if isinstance(cset, EuclideanBall):
        return float(np.linalg.norm(y - cset.center)) <= cset.radius + tol
    if isinstance(cset, BudgetHalfspace):
        return float(y.sum()) <= cset.capacity + tol
    if isinstance(cset, NonnegBudget):
        return bool(np.all(y >= -tol)) and float(y.sum()) <= cset.capacity + tol
    raise TypeError(f"unsupported constraint set {type(cset).__name__}")
