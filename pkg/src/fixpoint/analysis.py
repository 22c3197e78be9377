"""Sequence envelopes, convexity-inequality checks, sampled class certifiers
and the expanding-map counterexample.

The sup estimators return lower bounds of the true supremum together with a
witness pair: a reported violation is exact, a clean report only means no
violation was found at the sampled resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConfigurationError, DivisionGuardError, InvalidInputError
from .mappings import DOMAIN_TOL, Mapping, ScaleMap, power_batch
from .params import SequenceRule
from .sampling import stratified_pairs
from .spaces import SQUARE, ConvexityFunction, DomainSpec, as_point, check_weights, contains_batch, halfline

DIVISION_GUARD = 1e-14
STABLE_STEP = 1e-10


# -- recursive sequence envelope ---------------------------------------------


@dataclass
class SequenceEnvelope:
    """Envelope ``a_{n+1} = (1 + alpha_n) a_n + b_n`` for n = 1..N.

    ``values[k]`` is a_{k+1}; ``products[k]`` and ``sums[k]`` are the running
    product of ``(1 + alpha_j)`` and running sum of ``b_j`` over j <= k.
    """

    values: np.ndarray
    products: np.ndarray
    sums: np.ndarray
    bound: float
    bounded: bool
    first_stable_n: int | None

    @property
    def stabilized(self) -> bool:
        return self.first_stable_n is not None


def sequence_bound(a1: float, alpha: SequenceRule, b: SequenceRule, N: int) -> SequenceEnvelope:
    if not (a1 >= 0 and math.isfinite(a1)):
        raise InvalidInputError(f"a1 must be finite and nonnegative, got {a1!r}")
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    for name, rule in (("alpha", alpha), ("b", b)):
        if not rule.summable:
            raise ConfigurationError(f"{rule.kind} rule {rule.to_dict()} is not summable", name)
    al, bl = alpha.terms(N), b.terms(N)
    values = kernels.linear_envelope(a1, al, bl)
    products = np.cumprod(1.0 + al)
    sums = np.cumsum(bl)
    bound = math.exp(math.fsum(al)) * (a1 + math.fsum(bl))
    steps = np.abs(np.diff(values))
    small = np.flatnonzero(steps < STABLE_STEP)
    return SequenceEnvelope(
        values=values,
        products=products,
        sums=sums,
        bound=bound,
        bounded=bool(np.all(values <= bound * (1 + 1e-12))),
        first_stable_n=int(small[0]) + 1 if small.size else None,
    )


# -- convexity inequality ------------------------------------------------------


def check_convexity_inequality(weights, points, s: int, t: int, g: ConvexityFunction = SQUARE) -> float:
    """Margin ``sum a_i ||x_i||^2 - a_s a_t g(||x_s - x_t||) - ||sum a_i x_i||^2``.

    Nonnegative means the inequality holds.
    """
    w = check_weights(weights)
    pts = np.array([as_point(p) for p in points])
    if pts.shape[0] != w.size:
        raise InvalidInputError(f"{w.size} weights for {pts.shape[0]} points")
    if s == t:
        raise IndexError("s and t must differ")
    if not (0 <= s < w.size and 0 <= t < w.size):
        raise IndexError(f"indices ({s}, {t}) out of range for {w.size} points")
    combo = w @ pts
    rhs = float(w @ np.einsum("ij,ij->i", pts, pts)) - w[s] * w[t] * g(float(np.linalg.norm(pts[s] - pts[t])))
    return rhs - float(combo @ combo)


@dataclass
class ConvexityAudit:
    instances: int
    min_margin: float
    worst_instance: int


def convexity_audit(instances: int, seed: int, max_dim: int = 8, max_points: int = 5, g: ConvexityFunction = SQUARE) -> ConvexityAudit:
    """Seeded random instances of the convexity inequality."""
    rng = np.random.default_rng(seed)
    worst, where = math.inf, -1
    for k in range(instances):
        d = int(rng.integers(1, max_dim + 1))
        r = int(rng.integers(2, max_points + 1))
        w = rng.dirichlet(np.ones(r))
        w[-1] = 1.0 - math.fsum(w[:-1].tolist())
        if w[-1] < 0:
            w[-1] = 0.0
            w /= math.fsum(w.tolist())
        pts = rng.uniform(-10, 10, size=(r, d))
        s, t = rng.choice(r, size=2, replace=False)
        margin = check_convexity_inequality(w, pts, int(s), int(t), g)
        if margin < worst:
            worst, where = margin, k
    return ConvexityAudit(instances, worst, where)


# -- nearly-Lipschitz constant and intermediate defect --------------------------


@dataclass
class NearlyLipschitzEntry:
    n: int
    eta_hat: float
    a_n: float
    k_n: float | None
    sample_count: int
    skipped: int
    witness_pair: tuple | None

    @property
    def within_declared(self) -> bool | None:
        if self.k_n is None:
            return None
        return self.eta_hat <= self.k_n + 1e-10


def _check_region(T: Mapping, region: DomainSpec):
    if not region.bounded:
        raise ConfigurationError("estimation needs a bounded region", "region")
    if region.dim != T.dim:
        raise InvalidInputError("region and mapping dimensions differ")


def _pair_quantities(T: Mapping, n: int, X, I, J):
    if not np.all(contains_batch(T.domain, X, DOMAIN_TOL)):
        raise ConfigurationError("sampled region is not inside the mapping's domain", "region")
    P = power_batch(T, n, X, check_domain=False)
    return kernels.pair_norms(X, I, J), kernels.pair_norms(P, I, J)


def eta_from_pairs(T: Mapping, n: int, a_n: float, xs, ys, k_n: float | None = None) -> NearlyLipschitzEntry:
    """Max of ``||T^n x - T^n y|| / (||x - y|| + a_n)`` over the given pairs."""
    xs = np.array(xs, dtype=float, ndmin=2)
    ys = np.array(ys, dtype=float, ndmin=2)
    if xs.shape != ys.shape:
        raise InvalidInputError("xs and ys must have the same shape")
    X = np.concatenate([xs, ys])
    I = np.arange(xs.shape[0])
    return _eta(T, n, a_n, X, I, I + xs.shape[0], k_n)


def _eta(T, n, a_n, X, I, J, k_n):
    if not a_n >= 0:
        raise InvalidInputError("a_n must be nonnegative")
    dist, img = _pair_quantities(T, n, X, I, J)
    if a_n == 0 and np.any(dist == 0):
        raise DivisionGuardError("a_n = 0 with a coincident pair")
    top, k, skipped = kernels.ratio_max(img, dist + a_n, DIVISION_GUARD)
    witness = None if k < 0 else (X[I[k]].tolist(), X[J[k]].tolist())
    return NearlyLipschitzEntry(n, max(0.0, float(top)), float(a_n), k_n, int(I.size), int(skipped), witness)


def estimate_eta(
    T: Mapping, n: int, a_n: float, region: DomainSpec, samples: int, seed: int, k_n: float | None = None
) -> NearlyLipschitzEntry:
    """Sampled nearly-Lipschitz constant of ``T^n`` relative to `a_n`."""
    _check_region(T, region)
    X, I, J = stratified_pairs(region, samples, seed, T.discontinuities)
    return _eta(T, n, a_n, X, I, J, k_n)


def estimate_intermediate_defect(T: Mapping, n: int, region: DomainSpec, samples: int, seed: int) -> tuple[float, float]:
    """``(a_hat, sigma_hat)``: sampled ``max(||T^n x - T^n y|| - ||x - y||)`` and its positive part."""
    _check_region(T, region)
    X, I, J = stratified_pairs(region, samples, seed, T.discontinuities)
    dist, img = _pair_quantities(T, n, X, I, J)
    a_hat = float(np.max(img - dist))
    return a_hat, max(0.0, a_hat)


@dataclass
class ChainCheck:
    """Sampled check of one class-inclusion bound for n = 1..n_max."""

    margins: list
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def asymptotic_chain_check(
    T: Mapping, mu: SequenceRule, n_max: int, region: DomainSpec, samples: int, seed: int, slack: float = 1e-10
) -> ChainCheck:
    """``||T^n x - T^n y|| <= ||x - y|| + diam(K) mu_n`` on sampled pairs.

    Applies to maps with ``||T^n x - T^n y|| <= (1 + mu_n) ||x - y||``.
    """
    _check_region(T, region)
    diam = region.diameter
    X, I, J = stratified_pairs(region, samples, seed, T.discontinuities)
    margins, bad = [], 0
    for n in range(1, n_max + 1):
        dist, img = _pair_quantities(T, n, X, I, J)
        margin = float(np.min(dist + diam * mu(n) - img))
        margins.append(margin)
        bad += margin < -slack
    return ChainCheck(margins, bad)


def nearly_chain_check(
    T: Mapping, a: SequenceRule, n_max: int, region: DomainSpec, samples: int, seed: int, slack: float = 1e-9
) -> ChainCheck:
    """``sup(||T^n x - T^n y|| - ||x - y||) <= (k_n - 1) diam(K) + k_n a_n`` on one sample set.

    ``k_n = max(eta_hat, 1)``: any factor >= eta_hat satisfies the
    nearly-Lipschitz inequality on these samples, and the bound needs k_n >= 1.
    """
    _check_region(T, region)
    diam = region.diameter
    X, I, J = stratified_pairs(region, samples, seed, T.discontinuities)
    margins, bad = [], 0
    for n in range(1, n_max + 1):
        a_n = a(n)
        entry = _eta(T, n, a_n, X, I, J, None)
        dist, img = _pair_quantities(T, n, X, I, J)
        k_n = max(entry.eta_hat, 1.0)
        margin = (k_n - 1.0) * diam + k_n * a_n - float(np.max(img - dist))
        margins.append(margin)
        bad += margin < -slack
    return ChainCheck(margins, bad)


# -- expanding-map counterexample ------------------------------------------------


@dataclass
class CounterexampleRow:
    n: int
    step_diff: float
    image_diff_log10: float
    closed_form_log10: float
    direct: float | None


LOG10_3 = math.log10(3.0)


def counterexample_demo(N: int, factor: float = 3.0) -> list[CounterexampleRow]:
    """``x_n = 1 + 1/n`` under ``T x = 3 x``: steps shrink, image gaps explode.

    The gap ``|T^{n+1} x_{n+1} - T^{n+1} x_n|`` is evaluated in log space
    from the map's log-magnitude power and checked against
    ``(n+1) log10 3 - log10(n (n+1))``.
    """
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    T = ScaleMap(factor, halfline())
    rows = []
    for n in range(1, N + 1):
        x_n, x_next = 1.0 + 1.0 / n, 1.0 + 1.0 / (n + 1)
        # T is linear, so the gap is |T^{n+1}(x_n - x_{n+1})|; subtracting the
        # two log-magnitudes instead would cancel ~n digits away
        _, log_gap = T.log_power(n + 1, x_n - x_next)
        image_log10 = float(log_gap) / math.log(10.0)
        closed = (n + 1) * math.log10(factor) - math.log10(n * (n + 1.0))
        if abs(image_log10 - closed) > 1e-9 * max(1.0, abs(closed)):
            raise ArithmeticError(f"log-space gap disagrees with the closed form at n={n}")
        try:
            scale = factor ** (n + 1)
            direct = abs(scale * x_next - scale * x_n)
            direct = direct if math.isfinite(direct) else None
        except OverflowError:
            direct = None
        rows.append(CounterexampleRow(n, 1.0 / n - 1.0 / (n + 1), image_log10, closed, direct))
    return rows
