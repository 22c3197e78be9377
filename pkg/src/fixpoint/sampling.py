"""Deterministic stratified sampling of point pairs in a bounded region.

Half of the budget goes to a lattice (refined next to declared
discontinuity loci), the rest to seeded uniform draws.  Pairs join lattice
neighbours along every axis plus seeded random index pairs.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError
from .spaces import DomainSpec, contains_batch


def _axis_values(lo, hi, k, loci_here):
    ax = np.linspace(lo, hi, k) if hi > lo else np.array([lo])
    if ax.size < 2 or not loci_here:
        return ax
    h = ax[1] - ax[0]
    mids = 0.5 * (ax[:-1] + ax[1:])
    near = np.zeros(mids.size, dtype=bool)
    for v in loci_here:
        near |= np.abs(mids - v) <= 2 * h
    return np.sort(np.concatenate([ax, mids[near]]))


def lattice(region: DomainSpec, n_grid: int, loci=()):
    """Lattice points of `region` and index pairs of lattice neighbours."""
    lo, hi = region.bounding_box()
    d = region.dim
    k = max(2, int(math.floor(n_grid ** (1.0 / d) + 1e-9)))
    axes = [_axis_values(lo[a], hi[a], k, [v for ax_, v in loci if ax_ == a]) for a in range(d)]
    shape = tuple(ax.size for ax in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.ravel() for m in mesh], axis=1)
    idx = np.arange(X.shape[0]).reshape(shape)
    I, J = [], []
    for a in range(d):
        if shape[a] < 2:
            continue
        I.append(idx.take(range(0, shape[a] - 1), axis=a).ravel())
        J.append(idx.take(range(1, shape[a]), axis=a).ravel())
    I = np.concatenate(I) if I else np.zeros(0, dtype=np.intp)
    J = np.concatenate(J) if J else np.zeros(0, dtype=np.intp)
    if region.kind == "ball":
        keep = contains_batch(region, X)
        remap = np.full(X.shape[0], -1)
        remap[keep] = np.arange(int(keep.sum()))
        X = X[keep]
        ok = keep[I] & keep[J]
        I, J = remap[I[ok]], remap[J[ok]]
    return X, I.astype(np.intp), J.astype(np.intp)


def uniform_points(region: DomainSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    d = region.dim
    if region.kind == "ball":
        g = rng.standard_normal((count, d))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        r = region.radius * rng.random(count) ** (1.0 / d)
        return region.center + g * r[:, None]
    lo, hi = region.bounding_box()
    return lo + (hi - lo) * rng.random((count, d))


def stratified_pairs(region: DomainSpec, samples: int, seed: int, loci=()):
    """Return ``(X, I, J)``: sample points and the index pairs to compare.

    Results depend only on ``(region, samples, seed, loci)``.
    """
    if not region.bounded:
        raise ConfigurationError("sampling needs a bounded region; supply a sampling box")
    if samples < 2:
        raise ConfigurationError("need at least two samples", "samples")
    rng = np.random.default_rng(seed)
    n_grid = (samples + 1) // 2
    G, I, J = lattice(region, n_grid, loci)
    R = uniform_points(region, samples - n_grid, rng)
    X = np.concatenate([G, R]) if R.size else G
    N = X.shape[0]
    ri = rng.integers(0, N, size=N)
    rj = rng.integers(0, N - 1, size=N)
    rj = rj + (rj >= ri)
    return X, np.concatenate([I, ri]).astype(np.intp), np.concatenate([J, rj]).astype(np.intp)


def sampling_region(domain: DomainSpec, clip: float = 10.0) -> DomainSpec:
    """The domain itself when bounded, else a box of side ``2 * clip`` inside it."""
    if domain.bounded:
        return domain
    lo = np.where(np.isfinite(domain.lo), domain.lo, np.where(np.isfinite(domain.hi), domain.hi - 2 * clip, -clip))
    hi = np.where(np.isfinite(domain.hi), domain.hi, lo + 2 * clip)
    return DomainSpec("box", lo=lo, hi=hi)
