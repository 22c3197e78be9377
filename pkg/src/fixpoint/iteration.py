"""Multi-map averaged iteration

    x_{n+1} = a_{0n} x_n + sum_i a_{in} T_i^n x_n

with per-step diagnostics and trace export.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, FixpointError, InvalidInputError, WeightValidationError
from .mappings import DOMAIN_TOL, FIXED_POINT_TOL, Mapping, power_batch
from .params import ParameterSequences
from .spaces import SIMPLEX_TOL, as_point, convex_combine, domain_contains, norm

MAX_FAMILY = 64


class WeightSchedule:
    """Convex weights ``(a_0n, ..., a_mn)`` confined to ``[gamma1, gamma2]``.

    `kind` is ``"constant"`` (one vector, uniform ``1/(m+1)`` by default),
    ``"cyclic"`` (a list of vectors used in turn) or ``"rule"`` (a callable
    ``n -> vector``).  Every vector is checked when it is produced.
    """

    def __init__(self, m: int, gamma1: float = 0.05, gamma2: float = 0.95, kind: str = "constant", values=None, rule: Callable | None = None):
        if not 0 < gamma1 < gamma2 < 1:
            raise WeightValidationError(f"need 0 < gamma1 < gamma2 < 1, got gamma1={gamma1}, gamma2={gamma2}")
        if not 1 <= m <= MAX_FAMILY:
            raise InvalidInputError(f"family size must be in 1..{MAX_FAMILY}, got {m}")
        self.m, self.gamma1, self.gamma2, self.kind = m, float(gamma1), float(gamma2), kind
        if kind == "constant":
            vec = np.full(m + 1, 1.0 / (m + 1)) if values is None else np.asarray(values, dtype=float)
            self._vectors = [self._check(vec)]
        elif kind == "cyclic":
            if not values:
                raise WeightValidationError("cyclic schedule needs at least one weight vector")
            self._vectors = [self._check(np.asarray(v, dtype=float)) for v in values]
        elif kind == "rule":
            if rule is None:
                raise WeightValidationError("rule schedule needs a callable")
            self._rule = rule
        else:
            raise WeightValidationError(f"unknown weight schedule kind {kind!r}")

    def _check(self, w: np.ndarray, n: int | None = None) -> np.ndarray:
        where = f" at n={n}" if n is not None else ""
        if w.shape != (self.m + 1,):
            raise WeightValidationError(f"expected {self.m + 1} weights{where}, got {w.shape}")
        if np.any(w < self.gamma1) or np.any(w > self.gamma2):
            raise WeightValidationError(f"weights {w.tolist()}{where} leave [{self.gamma1}, {self.gamma2}]")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise WeightValidationError(f"weights{where} sum to {total!r}")
        w = w.copy()
        w.setflags(write=False)
        return w

    def __call__(self, n: int) -> np.ndarray:
        if self.kind == "constant":
            return self._vectors[0]
        if self.kind == "cyclic":
            return self._vectors[(n - 1) % len(self._vectors)]
        return self._check(np.asarray(self._rule(n), dtype=float), n)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "gamma1": self.gamma1, "gamma2": self.gamma2}
        if self.kind == "constant":
            d["values"] = self._vectors[0].tolist()
        elif self.kind == "cyclic":
            d["values"] = [v.tolist() for v in self._vectors]
        return d


@dataclass
class IterationConfig:
    family: Sequence[tuple[Mapping, ParameterSequences]]
    weights: WeightSchedule
    x1: np.ndarray
    max_iters: int = 10_000
    residual_tol: float = 1e-8
    reference_point: np.ndarray | None = None

    def __post_init__(self):
        self.family = tuple((T, p) for T, p in self.family)
        m = len(self.family)
        if not 1 <= m <= MAX_FAMILY:
            raise ConfigurationError(f"family size must be in 1..{MAX_FAMILY}, got {m}", "family")
        if self.weights.m != m:
            raise ConfigurationError(f"weight schedule built for m={self.weights.m}, family has {m}", "weights")
        domain = self.family[0][0].domain
        for i, (T, _) in enumerate(self.family):
            if T.dim != domain.dim or T.domain.to_dict() != domain.to_dict():
                raise ConfigurationError("all mappings must share one domain", f"family[{i}]")
        self.x1 = as_point(self.x1)
        if self.x1.size != domain.dim:
            raise ConfigurationError("x1 has the wrong dimension", "x1")
        if not domain_contains(domain, self.x1, DOMAIN_TOL):
            raise ConfigurationError(f"x1={self.x1.tolist()} is outside the domain", "x1")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigurationError("max_iters must be a positive integer", "max_iters")
        if not self.residual_tol >= 0:
            raise ConfigurationError("residual_tol must be nonnegative", "residual_tol")
        if self.reference_point is not None:
            p = as_point(self.reference_point)
            self.reference_point = p
            for i, (T, _) in enumerate(self.family):
                moved = norm(power_batch(T, 1, p[None, :])[0] - p)
                if moved > FIXED_POINT_TOL:
                    raise ConfigurationError(
                        f"reference point is not fixed by map {i + 1} (moved {moved:.3g})", "reference_point"
                    )

    @property
    def domain(self):
        return self.family[0][0].domain

    @property
    def m(self) -> int:
        return len(self.family)


@dataclass
class IterationTrace:
    """Row ``k`` describes step ``n[k]``: the iterate, its residuals
    ``||x_n - T_i^n x_n||``, ``||x_{n+1} - x_n||``, ``||x_n - p||`` and the
    running a-priori bound on ``||x_n - p||``."""

    n: list = field(default_factory=list)
    points: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    step_diff: list = field(default_factory=list)
    dist_to_p: list | None = None
    distance_bound: list | None = None
    next_point: np.ndarray | None = None
    stop_reason: str | None = None

    def __len__(self):
        return len(self.n)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals[-1])) if self.n else math.nan

    def point_after(self, k: int) -> np.ndarray:
        """The iterate following row `k`."""
        return self.points[k + 1] if k + 1 < len(self.points) else self.next_point

    # -- export ---------------------------------------------------------
    def header(self) -> list:
        d = len(self.points[0])
        m = len(self.residuals[0])
        return (
            ["n"] + [f"coord_{j}" for j in range(d)] + [f"residual_{i + 1}" for i in range(m)]
            + ["step_diff", "dist_to_p", "distance_bound"]
        )

    def rows(self):
        for k, n in enumerate(self.n):
            dist = "" if self.dist_to_p is None else _fmt(self.dist_to_p[k])
            bound = "" if self.distance_bound is None else _fmt(self.distance_bound[k])
            yield (
                [str(n)] + [_fmt(v) for v in self.points[k]] + [_fmt(v) for v in self.residuals[k]]
                + [_fmt(self.step_diff[k]), dist, bound]
            )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            w.writerows(self.rows())

    @classmethod
    def from_csv(cls, path) -> "IterationTrace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            head = next(reader)
            d = sum(h.startswith("coord_") for h in head)
            m = sum(h.startswith("residual_") for h in head)
            tr = cls()
            dists, bounds = [], []
            for row in reader:
                tr.n.append(int(row[0]))
                tr.points.append(np.array([float(v) for v in row[1 : 1 + d]]))
                tr.residuals.append(np.array([float(v) for v in row[1 + d : 1 + d + m]]))
                tr.step_diff.append(float(row[1 + d + m]))
                dists.append(row[2 + d + m])
                bounds.append(row[3 + d + m] if len(row) > 3 + d + m else "")
        if dists and all(dists):
            tr.dist_to_p = [float(v) for v in dists]
        if bounds and all(bounds):
            tr.distance_bound = [float(v) for v in bounds]
        return tr

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "steps": [
                {
                    "n": n,
                    "x": list(map(float, self.points[k])),
                    "residuals": list(map(float, self.residuals[k])),
                    "step_diff": float(self.step_diff[k]),
                    "dist_to_p": None if self.dist_to_p is None else float(self.dist_to_p[k]),
                    "distance_bound": None if self.distance_bound is None else float(self.distance_bound[k]),
                }
                for k, n in enumerate(self.n)
            ],
            "next_point": None if self.next_point is None else list(map(float, self.next_point)),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _images(config: IterationConfig, n: int, x: np.ndarray) -> list:
    return [power_batch(T, n, x[None, :])[0] for T, _ in config.family]


def step(config: IterationConfig, n: int, x_n) -> np.ndarray:
    """One step of the scheme from `x_n` at index `n`."""
    x_n = as_point(x_n)
    w = config.weights(n)
    return convex_combine(w, [x_n] + _images(config, n, x_n))


def _perturbation(params: ParameterSequences, n: int, d: float) -> float:
    """``mu_n phi(M) + mu_n M* d + l_n``."""
    mu = params.mu(n)
    return mu * params.phi.phi_M + mu * params.phi.M_star * d + params.ell(n)


def _envelope_coefficients(config: IterationConfig, n: int, w: np.ndarray):
    """Coefficients ``(alpha_n, b_n)`` with ``||x_{n+1}-p||^2 <= (1+alpha_n)||x_n-p||^2 + b_n``.

    From ``2 d c <= beta (1 + d^2) + 2 mu M* d^2`` and
    ``c^2 <= 2 beta^2 + 2 (mu M*)^2 d^2`` where ``c = beta + mu M* d``.
    """
    alpha = b = 0.0
    for i, (_, params) in enumerate(config.family):
        mu = params.mu(n)
        beta = mu * params.phi.phi_M + params.ell(n)
        lip = mu * params.phi.M_star
        alpha += w[i + 1] * (beta + 2 * lip + 2 * lip * lip)
        b += w[i + 1] * (beta + 2 * beta * beta)
    return alpha, b


def run(config: IterationConfig) -> IterationTrace:
    """Iterate until ``max_i ||x_n - T_i^n x_n|| <= residual_tol`` or `max_iters`."""
    p = config.reference_point
    trace = IterationTrace()
    if p is not None:
        trace.dist_to_p, trace.distance_bound = [], []
        envelope = norm(config.x1 - p) ** 2
    x = config.x1
    for n in range(1, config.max_iters + 1):
        try:
            w = config.weights(n)
            images = _images(config, n, x)
            x_next = convex_combine(w, [x] + images)
        except FixpointError as exc:
            err = type(exc)(f"step {n}: {exc}")
            err.step = n
            raise err from exc
        residuals = np.array([norm(x - y) for y in images])
        trace.n.append(n)
        trace.points.append(x)
        trace.residuals.append(residuals)
        trace.step_diff.append(norm(x_next - x))
        if p is not None:
            trace.dist_to_p.append(norm(x - p))
            trace.distance_bound.append(math.sqrt(envelope))
            alpha, b = _envelope_coefficients(config, n, w)
            envelope = (1.0 + alpha) * envelope + b
        if residuals.max() <= config.residual_tol:
            trace.stop_reason = "residual_tol"
            break
        x = x_next
    else:
        trace.stop_reason = "max_iters"
    trace.next_point = x_next
    return trace


@dataclass
class FejerReport:
    """Per-step audit of
    ``||x_{n+1}-p||^2 <= ||x_n-p||^2 + sum_i a_in (2 ||x_n-p|| c_in + c_in^2)``."""

    worst_margin: float
    steps_checked: int
    steps_satisfied: int
    violations: list
    slack: float

    @property
    def ok(self) -> bool:
        return not self.violations


def check_fejer_bound(trace: IterationTrace, config: IterationConfig, slack: float = 1e-9) -> FejerReport:
    p = config.reference_point
    if p is None:
        raise ConfigurationError("the Fejer audit needs a reference point", "reference_point")
    worst = math.inf
    violations = []
    for k, n in enumerate(trace.n):
        x, x_next = np.asarray(trace.points[k]), trace.point_after(k)
        d = norm(x - p)
        w = config.weights(n)
        extra = 0.0
        for i, (_, params) in enumerate(config.family):
            c = _perturbation(params, n, d)
            extra += w[i + 1] * (2 * d * c + c * c)
        margin = d * d + extra - norm(np.asarray(x_next) - p) ** 2
        worst = min(worst, margin)
        if margin < -slack:
            violations.append(n)
    checked = len(trace.n)
    return FejerReport(worst, checked, checked - len(violations), violations, slack)
