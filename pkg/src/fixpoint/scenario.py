"""Scenario files: YAML documents describing runs.

Grammar (see README for a full example)::

    scenarios:
      - name: <identifier, unique>
        kind: iterate | certify | lemma-audit | counterexample
        seed: <int, optional>
        output: <file path, optional; default <name>.csv>
        payload: {...}          # kind-specific, described in README

Every scenario in a file is built and validated before anything runs;
errors name the offending field, e.g. ``scenarios[0].payload.weights.gamma1``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigurationError, FixpointError
from .iteration import IterationConfig, WeightSchedule
from .mappings import AffineMap, ComposedMap, ConstantMap, Mapping, SahuStepMap, ScaleMap, identity, validate_mapping
from .params import ParameterSequences, PhiSpec, SequenceRule
from .spaces import DomainSpec

KINDS = ("iterate", "certify", "lemma-audit", "counterexample")
_NAME = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass
class Scenario:
    name: str
    kind: str
    payload: dict
    output_path: str
    seed: int
    source: str | None = None
    raw: dict = field(default_factory=dict, repr=False)


class _Node:
    """A mapping in the document together with its path, for error messages."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigurationError(f"expected a mapping, got {type(data).__name__}", path)
        self.data, self.path = data, path

    def sub(self, key):
        return f"{self.path}.{key}"

    def get(self, key, kind=None, default=..., convert=None):
        if key not in self.data:
            if default is ...:
                raise ConfigurationError("required field missing", self.sub(key))
            return default
        value = self.data[key]
        try:
            if convert is not None:
                value = convert(value)
            elif kind is not None and not isinstance(value, kind):
                raise TypeError(f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc), self.sub(key)) from None
        return value

    def node(self, key, default=...):
        if key not in self.data and default is not ...:
            return default
        return _Node(self.get(key), self.sub(key))

    def check_keys(self, allowed):
        extra = set(self.data) - set(allowed)
        if extra:
            raise ConfigurationError(f"unknown field(s) {sorted(extra)}", self.path)


def _vector(v):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError("expected a non-empty list of finite numbers")
    return arr


def _matrix(v):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise ValueError("expected a matrix of finite numbers")
    return arr


def _posint(v):
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise ValueError(f"expected a positive integer, got {v!r}")
    return int(v)


def _nonneg(v):
    v = float(v)
    if not v >= 0:
        raise ValueError(f"expected a nonnegative number, got {v!r}")
    return v


def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigurationError as exc:
        inner = f".{exc.path}" if exc.path else ""
        raise ConfigurationError(exc.message, path + inner) from None
    except FixpointError as exc:
        raise ConfigurationError(str(exc), path) from None


def build_domain(node: _Node) -> DomainSpec:
    kind = node.get("kind", str)
    if kind == "ball":
        node.check_keys(("kind", "center", "radius"))
        return _wrap(node.path, DomainSpec, "ball", center=node.get("center", convert=_vector), radius=node.get("radius", convert=float))
    node.check_keys(("kind", "lo", "hi"))
    lo = node.get("lo", convert=lambda v: np.asarray(v, dtype=float).reshape(-1))
    hi = node.get("hi", convert=lambda v: np.asarray(v, dtype=float).reshape(-1))
    return _wrap(node.path, DomainSpec, kind, lo=lo, hi=hi)


def build_map(node: _Node, default_domain: DomainSpec | None) -> Mapping:
    kind = node.get("kind", str)
    domain = build_domain(node.node("domain")) if "domain" in node.data else default_domain
    fixed = node.get("fixed_points", default=(), convert=lambda v: [_vector(p) for p in v])
    if kind == "sahu-step":
        node.check_keys(("kind", "domain", "fixed_points"))
        T = SahuStepMap()
        if domain is not None and domain.to_dict() != T.domain.to_dict():
            raise ConfigurationError("sahu-step lives on the box [0, 1]", node.sub("domain"))
    elif kind == "composed":
        node.check_keys(("kind", "maps", "fixed_points"))
        members = node.get("maps", list)
        maps = [build_map(_Node(m, f"{node.sub('maps')}[{k}]"), domain) for k, m in enumerate(members)]
        T = _wrap(node.path, ComposedMap, maps, fixed)
    else:
        if domain is None:
            raise ConfigurationError("no domain given for the map or the payload", node.sub("domain"))
        if kind == "affine":
            node.check_keys(("kind", "domain", "fixed_points", "matrix", "offset", "closed_power"))
            T = _wrap(
                node.path, AffineMap, node.get("matrix", convert=_matrix), node.get("offset", convert=_vector),
                domain, fixed, closed_power=node.get("closed_power", bool, default=False),
            )
        elif kind == "identity":
            node.check_keys(("kind", "domain"))
            T = identity(domain)
        elif kind == "scale":
            node.check_keys(("kind", "domain", "fixed_points", "factor"))
            T = _wrap(node.path, ScaleMap, node.get("factor", convert=float), domain, fixed or None)
        elif kind == "constant":
            node.check_keys(("kind", "domain", "value"))
            T = _wrap(node.path, ConstantMap, node.get("value", convert=_vector), domain)
        else:
            raise ConfigurationError(f"unknown map kind {kind!r}", node.sub("kind"))
    _wrap(node.path, validate_mapping, T)
    return T


def build_rule(node: _Node) -> SequenceRule:
    node.check_keys(("kind", "c", "p", "q", "values"))
    kwargs = {k: node.get(k, convert=float) for k in ("c", "p", "q") if k in node.data}
    if "values" in node.data:
        kwargs["values"] = tuple(node.get("values", list))
    return _wrap(node.path, SequenceRule, node.get("kind", str), **kwargs)


def build_phi(node: _Node) -> PhiSpec:
    node.check_keys(("kind", "M", "M_star", "exponent", "table"))
    kwargs = {k: node.get(k, convert=float) for k in ("M", "M_star", "exponent") if k in node.data}
    if "table" in node.data:
        kwargs["table"] = tuple(tuple(t) for t in node.get("table", list))
    return _wrap(node.path, PhiSpec, node.get("kind", str, default="identity"), **kwargs)


def build_params(node: _Node | None) -> ParameterSequences:
    if node is None:
        return ParameterSequences()
    node.check_keys(("mu", "ell", "a", "phi"))
    kwargs = {k: build_rule(node.node(k)) for k in ("mu", "ell", "a") if k in node.data}
    if "phi" in node.data:
        kwargs["phi"] = build_phi(node.node("phi"))
    return _wrap(node.path, ParameterSequences, **kwargs)


def _build_iterate(p: _Node, overrides: dict) -> dict:
    p.check_keys(("domain", "family", "weights", "x1", "max_iters", "residual_tol", "reference_point", "fejer_audit"))
    domain = build_domain(p.node("domain")) if "domain" in p.data else None
    members = p.get("family", list)
    family = []
    for k, item in enumerate(members):
        item = _Node(item, f"{p.sub('family')}[{k}]")
        item.check_keys(("map", "params"))
        family.append((build_map(item.node("map"), domain), build_params(item.node("params", None))))
    w = p.node("weights", None)
    if w is None:
        weights = _wrap(p.sub("weights"), WeightSchedule, len(family))
    else:
        w.check_keys(("kind", "gamma1", "gamma2", "values"))
        g1 = w.get("gamma1", convert=float, default=0.05)
        g2 = w.get("gamma2", convert=float, default=0.95)
        if not 0 < g1 < g2 < 1:
            raise ConfigurationError(f"need 0 < gamma1 < gamma2 < 1, got gamma1={g1}, gamma2={g2}", w.sub("gamma1"))
        weights = _wrap(
            w.path, WeightSchedule, len(family), g1, g2,
            kind=w.get("kind", str, default="constant"), values=w.get("values", list, default=None),
        )
    max_iters = overrides.get("max_iters") or p.get("max_iters", convert=_posint, default=10_000)
    tol = overrides.get("tol")
    if tol is None:
        tol = p.get("residual_tol", convert=_nonneg, default=1e-8)
    ref = p.get("reference_point", convert=_vector, default=None)
    config = _wrap(
        p.path, IterationConfig, family, weights, p.get("x1", convert=_vector), max_iters=max_iters,
        residual_tol=tol, reference_point=ref,
    )
    return {"config": config, "fejer_audit": p.get("fejer_audit", bool, default=ref is not None)}


def _build_certify(p: _Node, overrides: dict) -> dict:
    p.check_keys(("map", "params", "n_max", "samples", "sampling_box", "asymptotic_factor"))
    T = build_map(p.node("map"), None)
    box_ = build_domain(p.node("sampling_box")) if "sampling_box" in p.data else None
    region = box_ or T.domain
    if not region.bounded:
        raise ConfigurationError("unbounded domain: a sampling_box is required", p.sub("sampling_box"))
    factor = build_rule(p.node("asymptotic_factor")) if "asymptotic_factor" in p.data else None
    return {
        "map": T,
        "params": build_params(p.node("params", None)),
        "n_max": p.get("n_max", convert=_posint, default=8),
        "samples": p.get("samples", convert=_posint, default=2000),
        "region": region,
        "asymptotic_factor": factor,
    }


def _build_lemma(p: _Node, overrides: dict) -> dict:
    p.check_keys(("a1", "alpha", "b", "N", "convexity"))
    out = {
        "a1": p.get("a1", convert=_nonneg),
        "alpha": build_rule(p.node("alpha")),
        "b": build_rule(p.node("b")),
        "N": p.get("N", convert=_posint),
    }
    for name in ("alpha", "b"):
        if not out[name].summable:
            raise ConfigurationError("rule is not summable", p.sub(name))
    c = p.node("convexity", None)
    if c is not None:
        c.check_keys(("instances", "max_dim", "max_points"))
        out["convexity"] = {
            "instances": c.get("instances", convert=_posint),
            "max_dim": c.get("max_dim", convert=_posint, default=8),
            "max_points": c.get("max_points", convert=_posint, default=5),
        }
    return out


def _build_counterexample(p: _Node, overrides: dict) -> dict:
    p.check_keys(("N",))
    return {"N": p.get("N", convert=_posint)}


_BUILDERS = {
    "iterate": _build_iterate,
    "certify": _build_certify,
    "lemma-audit": _build_lemma,
    "counterexample": _build_counterexample,
}


def _default_seed() -> int:
    env = os.environ.get("FIXPOINT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigurationError(f"FIXPOINT_SEED must be an integer, got {env!r}") from None


def parse_text(text: str, source: str = "<string>", overrides: dict | None = None) -> list[Scenario]:
    overrides = overrides or {}
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigurationError(f"parse error at {where}: {exc.problem}", source) from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"parse error: {exc}", source) from None
    if doc is None:
        return []
    root = _Node(doc, source)
    root.check_keys(("scenarios",))
    items = root.get("scenarios", default=[]) or []
    if not isinstance(items, list):
        raise ConfigurationError("expected a list", root.sub("scenarios"))
    out, seen = [], set()
    for k, item in enumerate(items):
        node = _Node(item, f"scenarios[{k}]")
        node.check_keys(("name", "kind", "seed", "output", "payload"))
        name = node.get("name", str)
        if not _NAME.match(name):
            raise ConfigurationError("names may contain letters, digits, '_', '-', '.'", node.sub("name"))
        if name in seen:
            raise ConfigurationError(f"duplicate scenario name {name!r}", node.sub("name"))
        seen.add(name)
        kind = node.get("kind", str)
        if kind not in KINDS:
            raise ConfigurationError(f"unknown kind {kind!r}; expected one of {KINDS}", node.sub("kind"))
        seed = overrides.get("seed")
        if seed is None:
            seed = node.get("seed", convert=int, default=None)
        if seed is None:
            seed = _default_seed()
        payload = _BUILDERS[kind](node.node("payload"), overrides)
        out.append(Scenario(name, kind, payload, node.get("output", str, default=f"{name}.csv"), int(seed), source, item))
    return out


def load_scenarios(path, overrides: dict | None = None, only: str | None = None) -> list[Scenario]:
    """Load one scenario file, or every ``*.yaml``/``*.yml`` in a directory (sorted)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix in (".yaml", ".yml"))
    elif path.exists():
        files = [path]
    else:
        raise ConfigurationError(f"no such scenario file or directory: {path}")
    scenarios, seen = [], {}
    for f in files:
        for s in parse_text(f.read_text(), str(f), overrides):
            if s.name in seen:
                raise ConfigurationError(f"duplicate scenario name {s.name!r} (also in {seen[s.name]})", str(f))
            seen[s.name] = str(f)
            scenarios.append(s)
    if only is not None:
        scenarios = [s for s in scenarios if s.name == only]
        if not scenarios:
            raise ConfigurationError(f"no scenario named {only!r}")
    return scenarios
