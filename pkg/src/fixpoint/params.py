"""Parameter sequences (mu_n, l_n, a_n) and the gauge phi attached to a mapping.

Sequence rules come from a closed set whose series sums are known in closed
form, so summability is certified rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

RULE_KINDS = ("zero", "inverse-power", "geometric", "finite")


@dataclass(frozen=True)
class SequenceRule:
    """A nonnegative null sequence n -> value, indexed from n = 1.

    kinds
        ``zero``; ``inverse-power`` c / n**p (summable iff p > 1);
        ``geometric`` c * q**n with 0 < q < 1; ``finite`` explicit leading
        values followed by zeros.
    """

    kind: str
    c: float = 1.0
    p: float = 2.0
    q: float = 0.5
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ConfigurationError(f"unknown sequence kind {self.kind!r}; expected one of {RULE_KINDS}", "kind")
        if self.kind in ("inverse-power", "geometric") and not (self.c >= 0 and math.isfinite(self.c)):
            raise ConfigurationError("c must be finite and nonnegative", "c")
        if self.kind == "inverse-power" and not self.p > 0:
            raise ConfigurationError("inverse-power needs p > 0", "p")
        if self.kind == "geometric" and not 0 < self.q < 1:
            raise ConfigurationError("geometric needs 0 < q < 1", "q")
        if self.kind == "finite":
            vals = tuple(float(v) for v in self.values)
            if any(not (v >= 0 and math.isfinite(v)) for v in vals):
                raise ConfigurationError("finite values must be finite and nonnegative", "values")
            object.__setattr__(self, "values", vals)

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError("sequences are indexed from n = 1")
        if self.kind == "zero":
            return 0.0
        if self.kind == "inverse-power":
            return self.c / float(n) ** self.p
        if self.kind == "geometric":
            return self.c * self.q ** n
        return self.values[n - 1] if n <= len(self.values) else 0.0

    def terms(self, N: int) -> np.ndarray:
        """Values for n = 1..N."""
        n = np.arange(1, N + 1, dtype=float)
        if self.kind == "zero":
            return np.zeros(N)
        if self.kind == "inverse-power":
            return self.c / n ** self.p
        if self.kind == "geometric":
            return self.c * self.q ** n
        out = np.zeros(N)
        k = min(N, len(self.values))
        out[:k] = self.values[:k]
        return out

    @property
    def summable(self) -> bool:
        return self.kind != "inverse-power" or self.p > 1

    @property
    def series_bound(self) -> float:
        """Upper bound for the full series sum (``inf`` when divergent)."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "geometric":
            return self.c * self.q / (1.0 - self.q)
        if self.kind == "finite":
            return math.fsum(self.values)
        if self.p <= 1:
            return math.inf
        if self.p == 2:
            return self.c * math.pi ** 2 / 6.0
        # integral test: zeta(p) <= 1 + 1/(p - 1)
        return self.c * (1.0 + 1.0 / (self.p - 1.0))

    @property
    def monotone(self) -> bool:
        if self.kind != "finite":
            return True
        return all(a >= b for a, b in zip(self.values, self.values[1:]))

    def certify_summable(self, checkpoints=(10, 100, 1000, 10_000)) -> bool:
        """Partial sums at `checkpoints` never exceed the declared series bound."""
        if not self.summable:
            return False
        bound = self.series_bound
        partial = np.cumsum(self.terms(max(checkpoints)))
        return all(partial[N - 1] <= bound * (1 + 1e-12) + 1e-300 for N in checkpoints)

    def to_dict(self) -> dict:
        if self.kind == "zero":
            return {"kind": "zero"}
        if self.kind == "inverse-power":
            return {"kind": self.kind, "c": self.c, "p": self.p}
        if self.kind == "geometric":
            return {"kind": self.kind, "c": self.c, "q": self.q}
        return {"kind": "finite", "values": list(self.values)}


ZERO = SequenceRule("zero")


@dataclass(frozen=True)
class PhiSpec:
    """Strictly increasing gauge phi with phi(0) = 0 and constants M, M_star.

    The constants must satisfy ``phi(lam) <= M_star * lam`` for ``lam >= M``;
    :meth:`validate` checks this on a geometric grid.
    """

    kind: str = "identity"
    M: float = 1.0
    M_star: float = 1.0
    exponent: float = 1.0
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in ("identity", "power", "user-table"):
            raise ConfigurationError(f"unknown phi kind {self.kind!r}", "kind")
        if not (self.M > 0 and math.isfinite(self.M)):
            raise ConfigurationError("M must be positive", "M")
        if not (self.M_star > 0 and math.isfinite(self.M_star)):
            raise ConfigurationError("M_star must be positive", "M_star")
        if self.kind == "power" and not self.exponent > 0:
            raise ConfigurationError("power exponent must be positive", "exponent")
        if self.kind == "user-table":
            pts = tuple((float(a), float(b)) for a, b in self.table)
            if len(pts) < 2 or pts[0] != (0.0, 0.0):
                raise ConfigurationError("table needs at least two knots starting at (0, 0)", "table")
            lam, val = zip(*pts)
            if any(b <= a for a, b in zip(lam, lam[1:])) or any(b <= a for a, b in zip(val, val[1:])):
                raise ConfigurationError("table knots must be strictly increasing", "table")
            object.__setattr__(self, "table", pts)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.kind == "identity":
            out = lam.copy()
        elif self.kind == "power":
            out = lam ** self.exponent
        else:
            xs = np.array([a for a, _ in self.table])
            ys = np.array([b for _, b in self.table])
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            out = np.where(lam <= xs[-1], np.interp(lam, xs, ys), ys[-1] + slope * (lam - xs[-1]))
        return float(out) if out.ndim == 0 else out

    @property
    def phi_M(self) -> float:
        return float(self(self.M))

    def validate(self, lam_max: float = 1e6, num: int = 400) -> None:
        if self(0.0) != 0.0:
            raise ConfigurationError("phi(0) must be 0", "phi")
        grid = np.concatenate([[0.0], np.geomspace(1e-6, lam_max, num)])
        vals = self(grid)
        if np.any(np.diff(vals) <= 0):
            raise ConfigurationError("phi must be strictly increasing", "phi")
        tail = np.geomspace(self.M, max(lam_max, self.M * 10), num)
        if np.any(self(tail) > self.M_star * tail * (1 + 1e-12)):
            raise ConfigurationError(
                f"phi(lam) <= M_star*lam fails for lam >= M={self.M} (M_star={self.M_star})", "phi.M_star"
            )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "M": self.M, "M_star": self.M_star}
        if self.kind == "power":
            d["exponent"] = self.exponent
        if self.kind == "user-table":
            d["table"] = [list(t) for t in self.table]
        return d


@dataclass(frozen=True)
class ParameterSequences:
    """The sequences (mu_n), (l_n), (a_n) and gauge phi of one mapping."""

    mu: SequenceRule = ZERO
    ell: SequenceRule = ZERO
    a: SequenceRule = ZERO
    phi: PhiSpec = field(default_factory=PhiSpec)

    def __post_init__(self):
        for name in ("mu", "ell"):
            rule = getattr(self, name)
            if not rule.certify_summable():
                raise ConfigurationError(f"{name} must be a summable rule, got {rule.to_dict()}", name)
        if not self.a.monotone:
            raise ConfigurationError("a must be nonincreasing", "a")
        self.phi.validate()

    def to_dict(self) -> dict:
        return {"mu": self.mu.to_dict(), "ell": self.ell.to_dict(), "a": self.a.to_dict(), "phi": self.phi.to_dict()}
