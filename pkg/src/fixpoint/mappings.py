"""Self-maps of convex domains, their iterates T^n, and sampled class checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import ConfigurationError, DomainError, InvalidInputError, NumericRangeError
from .params import ParameterSequences
from .sampling import sampling_region, stratified_pairs
from .spaces import DomainSpec, as_point, box, contains_batch, domain_contains

MAX_ITERATED_APPLICATIONS = 10**6
DOMAIN_TOL = 1e-9
FIXED_POINT_TOL = 1e-10


def _finite_or_raise(Y: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(Y)):
        raise NumericRangeError(f"{what} left the floating-point range")
    return Y


class Mapping:
    """Base class for the tagged family of self-maps ``T: K -> K``.

    Subclasses implement :meth:`_apply` on row-stacked points and may provide
    a closed form for ``T^n`` in :meth:`_closed_power`.
    """

    kind = "abstract"
    has_closed_power = False

    def __init__(self, domain: DomainSpec, fixed_points=()):
        self.domain = domain
        self.known_fixed_points = tuple(as_point(p) for p in fixed_points)
        for p in self.known_fixed_points:
            if p.size != domain.dim:
                raise InvalidInputError("fixed point dimension does not match the domain")

    @property
    def dim(self) -> int:
        return self.domain.dim

    #: (axis, value) hyperplanes where the map jumps; sampling refines there.
    discontinuities: tuple = ()

    def _apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _closed_power(self, n: int, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _iterate(self, n: int, X: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n):
                X = self._apply(X)
                if not np.all(np.isfinite(X)):
                    break
        return X

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class AffineMap(Mapping):
    """``x -> A x + b``; the closed power is opt-in via `closed_power`."""

    kind = "affine"

    def __init__(self, A, b, domain: DomainSpec, fixed_points=(), closed_power: bool = False):
        super().__init__(domain, fixed_points)
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float, ndmin=1)
        if A.shape != (domain.dim, domain.dim) or b.shape != (domain.dim,):
            raise InvalidInputError(f"affine map shapes {A.shape}, {b.shape} do not fit dimension {domain.dim}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("affine coefficients must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        self.A, self.b = A, b
        self.has_closed_power = bool(closed_power)

    def _apply(self, X):
        return X @ self.A.T + self.b

    def _iterate(self, n, X):
        return kernels.affine_iterate(self.A, self.b, X, n)

    def power_coefficients(self, n: int):
        """``(P, c)`` with ``T^n x = P x + c``, by binary powering."""
        d = self.dim
        P, S = np.eye(d), np.zeros((d, d))
        base_P, base_S = self.A.copy(), np.eye(d)
        k = n
        with np.errstate(over="ignore", invalid="ignore"):
            while k:
                if k & 1:
                    P, S = base_P @ P, base_P @ S + base_S
                k >>= 1
                if k:
                    base_P, base_S = base_P @ base_P, base_P @ base_S + base_S
        return P, S @ self.b

    def _closed_power(self, n, X):
        P, c = self.power_coefficients(n)
        with np.errstate(over="ignore", invalid="ignore"):
            return X @ P.T + c

    def to_dict(self):
        d = {"kind": "affine", "matrix": self.A.tolist(), "offset": self.b.tolist(), "domain": self.domain.to_dict()}
        if self.has_closed_power:
            d["closed_power"] = True
        return d


def identity(domain: DomainSpec) -> AffineMap:
    d = domain.dim
    return AffineMap(np.eye(d), np.zeros(d), domain, closed_power=True)


class ScaleMap(Mapping):
    """``x -> c x``.  Its power ``c**n x`` is always available in closed form,
    together with a sign/log-magnitude form that cannot overflow."""

    kind = "scale"
    has_closed_power = True

    def __init__(self, factor: float, domain: DomainSpec, fixed_points=None):
        if fixed_points is None:
            origin = np.zeros(domain.dim)
            fixed_points = (origin,) if domain_contains(domain, origin) else ()
        super().__init__(domain, fixed_points)
        factor = float(factor)
        if not math.isfinite(factor):
            raise InvalidInputError("scale factor must be finite")
        self.factor = factor

    def _apply(self, X):
        return self.factor * X

    def _closed_power(self, n, X):
        try:
            cn = self.factor ** n
        except OverflowError:
            raise NumericRangeError(f"{self.factor}**{n} overflows; use log_power") from None
        with np.errstate(over="ignore", invalid="ignore"):
            return cn * X

    def log_power(self, n: int, x):
        """Return ``(sign, log|c**n x|)`` coordinate-wise (natural log)."""
        x = np.asarray(x, dtype=float)
        c = self.factor
        sign = np.sign(x) * (np.sign(c) ** n if c != 0 else 0.0)
        with np.errstate(divide="ignore"):
            mag = n * math.log(abs(c)) + np.log(np.abs(x)) if c != 0 else np.full(x.shape, -np.inf)
        return sign, mag

    def to_dict(self):
        return {"kind": "scale", "factor": self.factor, "domain": self.domain.to_dict()}


class SahuStepMap(Mapping):
    """The step map on [0, 1]: 1/2 on [0, 1/2] and 0 on (1/2, 1]."""

    kind = "sahu-step"
    has_closed_power = True
    discontinuities = ((0, 0.5),)

    def __init__(self):
        super().__init__(box([0.0], [1.0]), fixed_points=([0.5],))

    def _apply(self, X):
        return np.where(X <= 0.5, 0.5, 0.0)

    def _closed_power(self, n, X):
        # T^2 maps everything to 1/2, a fixed point
        return self._apply(X) if n == 1 else np.full(X.shape, 0.5)

    def to_dict(self):
        return {"kind": "sahu-step"}


class ConstantMap(Mapping):
    kind = "constant"
    has_closed_power = True

    def __init__(self, value, domain: DomainSpec):
        value = as_point(value)
        super().__init__(domain, fixed_points=(value,))
        self.value = value

    def _apply(self, X):
        return np.broadcast_to(self.value, X.shape).copy()

    def _closed_power(self, n, X):
        return self._apply(X)

    def to_dict(self):
        return {"kind": "constant", "value": self.value.tolist(), "domain": self.domain.to_dict()}


class ComposedMap(Mapping):
    """Members applied in listed order: first element acts first."""

    kind = "composed"

    def __init__(self, maps, fixed_points=()):
        maps = tuple(maps)
        if not maps:
            raise InvalidInputError("composition of zero maps")
        if any(m.dim != maps[0].dim for m in maps):
            raise InvalidInputError("composed maps must share a dimension")
        super().__init__(maps[0].domain, fixed_points)
        self.maps = maps

    @property
    def discontinuities(self):
        return self.maps[0].discontinuities

    def _apply(self, X):
        for m in self.maps:
            X = m._apply(X)
        return X

    def to_dict(self):
        return {"kind": "composed", "maps": [m.to_dict() for m in self.maps]}


def _as_rows(T: Mapping, X) -> np.ndarray:
    X = np.array(X, dtype=float, ndmin=2)
    if X.shape[1] != T.dim:
        raise InvalidInputError(f"points have dimension {X.shape[1]}, map expects {T.dim}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("non-finite input point")
    return X


def power_batch(T: Mapping, n: int, X, method: str = "auto", check_domain: bool = True) -> np.ndarray:
    """``T^n`` applied to each row of `X`.

    `method` is ``"closed"``, ``"iterate"`` or ``"auto"`` (closed form when
    the map has one).
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"power must be a positive integer, got {n!r}")
    n = int(n)
    X = _as_rows(T, X)
    if check_domain and not np.all(contains_batch(T.domain, X, DOMAIN_TOL)):
        raise DomainError("point outside the mapping's domain")
    if method == "auto":
        method = "closed" if T.has_closed_power else "iterate"
    if method == "closed":
        if not T.has_closed_power:
            raise ConfigurationError(f"{T.kind} map has no closed-form power")
        Y = T._closed_power(n, X)
    elif method == "iterate":
        if n > MAX_ITERATED_APPLICATIONS:
            raise NumericRangeError(f"n={n} exceeds the cap of {MAX_ITERATED_APPLICATIONS} applications")
        Y = T._iterate(n, X)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _finite_or_raise(np.asarray(Y, dtype=float), f"T^{n}")


def apply(T: Mapping, x) -> np.ndarray:
    return apply_power(T, 1, x)


def apply_power(T: Mapping, n: int, x, method: str = "auto") -> np.ndarray:
    x = as_point(x)
    y = power_batch(T, n, x[None, :], method)[0]
    y.setflags(write=False)
    return y


def linearized_bound(params: ParameterSequences, n: int, dist: float) -> float:
    """``(1 + mu_n M*) dist + mu_n phi(M) + l_n``: a bound on ``||T^n x - T^n y||``."""
    if not (dist >= 0 and math.isfinite(dist)):
        raise InvalidInputError(f"distance must be finite and nonnegative, got {dist!r}")
    mu, ell, phi = params.mu(n), params.ell(n), params.phi
    return (1.0 + mu * phi.M_star) * dist + mu * phi.phi_M + ell


def validate_mapping(T: Mapping, samples: int = 1000, seed: int = 0, sampling_box: DomainSpec | None = None) -> None:
    """Sampled check that `T` is a self-map with consistent powers and fixed points."""
    region = sampling_box or sampling_region(T.domain)
    X, _, _ = stratified_pairs(region, samples, seed, T.discontinuities)
    if not np.all(contains_batch(T.domain, X, DOMAIN_TOL)):
        raise ConfigurationError("sampling box is not inside the mapping's domain")
    with np.errstate(over="ignore", invalid="ignore"):
        Y = T._apply(X)
    if not np.all(contains_batch(T.domain, Y, DOMAIN_TOL)):
        bad = int(np.argmin(contains_batch(T.domain, Y, DOMAIN_TOL)))
        raise ConfigurationError(f"{T.kind} map sends {X[bad].tolist()} outside its domain")
    if T.has_closed_power:
        sub = X[:: max(1, X.shape[0] // 100)]
        for n in range(1, 9):
            try:
                a = power_batch(T, n, sub, "closed")
                b = power_batch(T, n, sub, "iterate")
            except NumericRangeError:
                continue
            if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
                raise ConfigurationError(f"closed-form power disagrees with iteration at n={n}")
    for p in T.known_fixed_points:
        if not domain_contains(T.domain, p, DOMAIN_TOL):
            raise ConfigurationError(f"fixed point {p.tolist()} outside the domain")
        Tp = power_batch(T, 1, p[None, :])[0]
        if np.linalg.norm(Tp - p) > FIXED_POINT_TOL:
            raise ConfigurationError(f"{p.tolist()} is not a fixed point (moved by {np.linalg.norm(Tp - p):.3g})")


@dataclass
class MarginRow:
    n: int
    worst_margin: float
    violations: int
    witness: tuple
    first_violation: tuple | None = None


@dataclass
class TotalAsymptoticReport:
    """Per-power worst margin of ``||x-y|| + mu_n phi(||x-y||) + l_n - ||T^n x - T^n y||``."""

    rows: list = field(default_factory=list)
    sample_count: int = 0
    pair_count: int = 0
    slack: float = 1e-10

    @property
    def violations(self) -> int:
        return sum(r.violations for r in self.rows)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_total_asymptotic(
    T: Mapping,
    params: ParameterSequences,
    n_max: int,
    samples: int = 2000,
    seed: int = 0,
    sampling_box: DomainSpec | None = None,
    slack: float = 1e-10,
) -> TotalAsymptoticReport:
    region = sampling_box if sampling_box is not None else T.domain
    if not region.bounded:
        raise ConfigurationError("unbounded domain: supply a sampling box")
    X, I, J = stratified_pairs(region, samples, seed, T.discontinuities)
    if not np.all(contains_batch(T.domain, X, DOMAIN_TOL)):
        raise ConfigurationError("sampling box is not inside the mapping's domain")
    dist = kernels.pair_norms(X, I, J)
    report = TotalAsymptoticReport(sample_count=X.shape[0], pair_count=I.size, slack=slack)
    phi_d = params.phi(dist)
    for n in range(1, n_max + 1):
        P = power_batch(T, n, X, check_domain=False)
        lhs = kernels.pair_norms(P, I, J)
        margin = dist + params.mu(n) * phi_d + params.ell(n) - lhs
        k = int(np.argmin(margin))
        bad = np.flatnonzero(margin < -slack)
        first = (X[I[bad[0]]].tolist(), X[J[bad[0]]].tolist()) if bad.size else None
        report.rows.append(
            MarginRow(n, float(margin[k]), int(bad.size), (X[I[k]].tolist(), X[J[k]].tolist()), first)
        )
    return report
