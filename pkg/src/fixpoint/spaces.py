"""Finite-dimensional Euclidean primitives: points, norms, convex domains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, WeightValidationError

SIMPLEX_TOL = 1e-12


class _Unbounded:
    """Marker for the diameter of an unbounded set."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unbounded"

    def __reduce__(self):
        return (_Unbounded, ())


UNBOUNDED = _Unbounded()


def as_point(x) -> np.ndarray:
    """Return `x` as a read-only 1-D float array with finite entries."""
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"a point must be a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("point has non-finite coordinates")
    arr.setflags(write=False)
    return arr


def norm(x) -> float:
    x = as_point(x)
    return float(math.sqrt(float(np.dot(x, x))))


def distance(x, y) -> float:
    x, y = as_point(x), as_point(y)
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.size} vs {y.size}")
    return norm(x - y)


def check_weights(weights, tol: float = SIMPLEX_TOL) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0:
        raise WeightValidationError("empty weight vector")
    if not np.all(np.isfinite(w)):
        raise WeightValidationError("non-finite weight")
    if np.any(w < 0):
        raise WeightValidationError(f"negative weight in {w.tolist()}")
    total = math.fsum(w.tolist())
    if abs(total - 1.0) > tol:
        raise WeightValidationError(f"weights sum to {total!r}, not 1")
    return w


def convex_combine(weights: Sequence[float], points: Sequence) -> np.ndarray:
    """Return ``sum(w_i * p_i)`` for simplex weights `w`."""
    w = check_weights(weights)
    pts = [as_point(p) for p in points]
    if len(pts) != w.size:
        raise InvalidInputError(f"{w.size} weights for {len(pts)} points")
    dim = pts[0].size
    if any(p.size != dim for p in pts):
        raise InvalidInputError("points of different dimensions")
    # fixed left-to-right accumulation keeps results reproducible
    out = np.zeros(dim)
    for wi, p in zip(w, pts):
        out += wi * p
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """A closed convex subset of R^d.

    ``box`` holds finite per-coordinate bounds, ``halfline-interval`` allows
    infinite ones (so R, [0, inf) and half-spaces along axes fit), and
    ``ball`` is the closed Euclidean ball.
    """

    kind: str
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind in ("box", "halfline-interval"):
            lo = np.array(self.lo, dtype=float).reshape(-1)
            hi = np.array(self.hi, dtype=float).reshape(-1)
            if lo.shape != hi.shape or lo.size == 0:
                raise InvalidInputError("lo and hi must be vectors of equal length")
            if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
                raise InvalidInputError("NaN bound")
            if np.any(lo > hi):
                raise InvalidInputError(f"empty {self.kind}: lo > hi")
            if self.kind == "box" and not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise InvalidInputError("box bounds must be finite; use halfline-interval")
            lo.setflags(write=False)
            hi.setflags(write=False)
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        elif self.kind == "ball":
            center = as_point(self.center)
            radius = float(self.radius)
            if not (radius > 0 and math.isfinite(radius)):
                raise InvalidInputError(f"ball radius must be positive, got {self.radius}")
            object.__setattr__(self, "center", center)
            object.__setattr__(self, "radius", radius)
        else:
            raise InvalidInputError(f"unknown domain kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.center.size if self.kind == "ball" else self.lo.size

    @property
    def bounded(self) -> bool:
        if self.kind == "ball":
            return True
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    @property
    def diameter(self):
        if self.kind == "ball":
            return 2.0 * self.radius
        if not self.bounded:
            return UNBOUNDED
        return norm(self.hi - self.lo)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "ball":
            return self.center - self.radius, self.center + self.radius
        return self.lo, self.hi

    def to_dict(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}
        return {"kind": self.kind, "lo": self.lo.tolist(), "hi": self.hi.tolist()}


def box(lo, hi) -> DomainSpec:
    return DomainSpec("box", lo=lo, hi=hi)


def ball(center, radius: float) -> DomainSpec:
    return DomainSpec("ball", center=center, radius=radius)


def halfline(lo=-math.inf, hi=math.inf, dim: int = 1) -> DomainSpec:
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)) if np.ndim(lo) == 0 else lo
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)) if np.ndim(hi) == 0 else hi
    return DomainSpec("halfline-interval", lo=lo, hi=hi)


def contains_batch(K: DomainSpec, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Row-wise membership of the points `X` (shape ``(N, d)``) in `K` inflated by `tol`."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != K.dim:
        raise InvalidInputError(f"dimension mismatch: domain has {K.dim}, points have {X.shape[1]}")
    if K.kind == "ball":
        return np.linalg.norm(X - K.center, axis=1) <= K.radius + tol
    return np.all((X >= K.lo - tol) & (X <= K.hi + tol), axis=1)


def domain_contains(K: DomainSpec, x, tol: float = 0.0) -> bool:
    x = as_point(x)
    return bool(contains_batch(K, x[None, :], tol)[0])


class ConvexityFunction:
    """Gauge ``g`` in the uniform-convexity inequality for convex combinations.

    Only the Hilbert-space instance ``g(t) = t**2`` ships (:data:`SQUARE`).
    """

    def __init__(self, fn: Callable[[float], float], name: str = "custom"):
        self._fn = fn
        self.name = name

    def __call__(self, t):
        return self._fn(t)

    def __repr__(self):
        return f"ConvexityFunction({self.name})"


SQUARE = ConvexityFunction(lambda t: t * t, "square")


def check_convexity_function(g: ConvexityFunction, t_max: float = 10.0, num: int = 1001) -> bool:
    """Check g(0)=0, strict monotonicity and midpoint convexity on a grid."""
    t = np.linspace(0.0, t_max, num)
    vals = np.array([g(float(s)) for s in t])
    if vals[0] != 0.0:
        return False
    if np.any(np.diff(vals) <= 0):
        return False
    mids = np.array([g(float(s)) for s in 0.5 * (t[:-2] + t[2:])])
    return bool(np.all(mids <= 0.5 * (vals[:-2] + vals[2:]) + 1e-12))
