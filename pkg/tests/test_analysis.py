import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixpoint.analysis import (
    asymptotic_chain_check,
    check_convexity_inequality,
    convexity_audit,
    counterexample_demo,
    estimate_eta,
    estimate_intermediate_defect,
    eta_from_pairs,
    nearly_chain_check,
    sequence_bound,
)
from fixpoint.errors import ConfigurationError, DivisionGuardError
from fixpoint.mappings import AffineMap, ConstantMap, SahuStepMap, ScaleMap, identity, power_batch
from fixpoint.params import SequenceRule
from fixpoint.sampling import stratified_pairs
from fixpoint.spaces import box, halfline

ZERO = SequenceRule("zero")
INV2 = SequenceRule("inverse-power", c=1.0, p=2)
GEOM = SequenceRule("geometric", c=1.0, q=0.5)
UNIT = box([0], [1])


# -- sequence envelope -------------------------------------------------------


def test_envelope_trivial_cases():
    env = sequence_bound(2.5, ZERO, ZERO, 50)
    assert np.all(env.values == 2.5)
    env = sequence_bound(0.0, INV2, ZERO, 50)
    assert np.all(env.values == 0.0)


def test_envelope_inverse_square():
    env = sequence_bound(1.0, INV2, INV2, 10_000)
    # direct recurrence, independent of the kernel
    a, vals = 1.0, [1.0]
    for n in range(1, 10_001):
        a = (1 + 1 / n**2) * a + 1 / n**2
        vals.append(a)
    np.testing.assert_allclose(env.values, vals, rtol=1e-13)
    limit = math.exp(math.pi**2 / 6) * (1 + math.pi**2 / 6)
    assert env.bound <= limit and env.values.max() <= 13.7
    assert env.bounded
    np.testing.assert_allclose(env.products[-1], np.prod(1 + 1 / np.arange(1, 10_001) ** 2), rtol=1e-12)


def test_envelope_rejects_divergent_rule():
    with pytest.raises(ConfigurationError, match="alpha"):
        sequence_bound(1.0, SequenceRule("inverse-power", p=1), ZERO, 10)


def test_envelope_stabilises_for_geometric_rules():
    env = sequence_bound(1.0, GEOM, GEOM, 200)
    assert env.stabilized and env.first_stable_n < 60


def test_envelope_dominates_random_sequences():
    rng = np.random.default_rng(2024)
    env = sequence_bound(1.0, INV2, INV2, 500)
    al, bl = INV2.terms(500), INV2.terms(500)
    for _ in range(100):
        u = rng.random(500)
        a, seq = 1.0, [1.0]
        for k in range(500):
            a = (1 + al[k]) * a + bl[k] * u[k]
            seq.append(a)
        assert np.all(env.values >= np.array(seq) - 1e-12)


# -- convexity inequality ------------------------------------------------------


def test_convexity_examples():
    assert abs(check_convexity_inequality([0.5, 0.5], [[1, 0], [-1, 0]], 0, 1)) <= 1e-12
    assert check_convexity_inequality([1.0, 0.0, 0.0], [[1, 2], [3, 4], [5, 6]], 0, 1) == 0.0


def test_convexity_index_errors():
    with pytest.raises(IndexError):
        check_convexity_inequality([0.5, 0.5], [[0], [1]], 1, 1)
    with pytest.raises(IndexError):
        check_convexity_inequality([0.5, 0.5], [[0], [1]], 0, 2)


@given(st.integers(0, 2**31))
@settings(max_examples=300, deadline=None)
def test_convexity_margin_matches_pairwise_identity(seed):
    # Hilbert identity: margin = sum_{i<j, (i,j) != (s,t)} a_i a_j ||x_i - x_j||^2
    rng = np.random.default_rng(seed)
    r, d = int(rng.integers(2, 6)), int(rng.integers(1, 9))
    w = rng.dirichlet(np.ones(r))
    w[-1] = max(0.0, 1 - math.fsum(w[:-1].tolist()))
    x = rng.uniform(-5, 5, (r, d))
    s, t = (int(v) for v in rng.choice(r, 2, replace=False))
    oracle = sum(
        w[i] * w[j] * float(np.sum((x[i] - x[j]) ** 2))
        for i in range(r) for j in range(i + 1, r) if {i, j} != {s, t}
    )
    margin = check_convexity_inequality(w, x, s, t)
    assert margin >= -1e-10
    assert margin == pytest.approx(oracle, abs=1e-9)


def test_convexity_audit():
    audit = convexity_audit(2000, seed=9)
    assert audit.min_margin >= -1e-10


# -- nearly-Lipschitz constant --------------------------------------------------


def test_eta_sahu_first_power_against_dense_grid():
    entry = estimate_eta(SahuStepMap(), 1, 0.5, UNIT, samples=20_000, seed=0)
    assert entry.eta_hat >= 0.99
    x, y = entry.witness_pair
    assert min(x[0], y[0]) <= 0.5 < max(x[0], y[0])
    # brute force over all pairs of a 2001-point grid
    g = np.linspace(0, 1, 2001)
    T = np.where(g <= 0.5, 0.5, 0.0)
    dense = np.max(np.abs(T[:, None] - T[None, :]) / (np.abs(g[:, None] - g[None, :]) + 0.5))
    assert dense < 1 and entry.eta_hat <= 1
    assert entry.eta_hat >= dense - 1e-3


def test_eta_is_zero_for_constant_powers():
    assert estimate_eta(SahuStepMap(), 2, 0.25, UNIT, 2000, 0).eta_hat == 0
    C = ConstantMap([0.3, 0.3], box([0, 0], [1, 1]))
    for n in (1, 4):
        assert estimate_eta(C, n, 0.1, C.domain, 500, 1).eta_hat == 0


def test_eta_definitional_bound_on_samples():
    T = AffineMap([[0.5, 1.0], [0.0, 0.5]], [0, 0], box([-1, -0.5], [1, 0.5]), closed_power=True)
    X, I, J = stratified_pairs(T.domain, 3000, 4)
    for n in (1, 2, 3):
        entry = estimate_eta(T, n, GEOM(n), T.domain, 3000, 4)
        P = power_batch(T, n, X)
        lhs = np.linalg.norm(P[I] - P[J], axis=1)
        rhs = entry.eta_hat * (np.linalg.norm(X[I] - X[J], axis=1) + GEOM(n))
        assert np.all(lhs <= rhs + 1e-12)


def test_eta_monotone_in_sample_set(rng):
    T = SahuStepMap()
    xs, ys = rng.random((300, 1)), rng.random((300, 1))
    small = eta_from_pairs(T, 1, 0.5, xs[:100], ys[:100])
    large = eta_from_pairs(T, 1, 0.5, xs, ys)
    assert large.eta_hat >= small.eta_hat


def test_eta_declared_constant():
    entry = estimate_eta(SahuStepMap(), 1, 0.5, UNIT, 2000, 0, k_n=1.0)
    assert entry.within_declared


def test_eta_division_guard():
    with pytest.raises(DivisionGuardError):
        eta_from_pairs(identity(UNIT), 1, 0.0, [[0.3]], [[0.3]])
    entry = eta_from_pairs(identity(UNIT), 1, 1e-16, [[0.3], [0.1]], [[0.3], [0.2]])
    assert entry.skipped == 1 and entry.eta_hat == pytest.approx(0.1 / (0.1 + 1e-16))


def test_eta_deterministic():
    a = estimate_eta(SahuStepMap(), 1, 0.5, UNIT, 5000, 3)
    b = estimate_eta(SahuStepMap(), 1, 0.5, UNIT, 5000, 3)
    assert a == b


def test_unbounded_region_rejected():
    with pytest.raises(ConfigurationError):
        estimate_eta(ScaleMap(3.0, halfline()), 1, 0.1, halfline(), 100, 0)


# -- intermediate defect -----------------------------------------------------------


def test_intermediate_defect_examples():
    a_hat, sigma = estimate_intermediate_defect(identity(UNIT), 3, UNIT, 1000, 0)
    assert a_hat <= 0 and sigma == 0
    X, I, J = stratified_pairs(UNIT, 1000, 0, SahuStepMap.discontinuities)
    a_hat, sigma = estimate_intermediate_defect(SahuStepMap(), 2, UNIT, 1000, 0)
    assert a_hat == pytest.approx(-np.min(np.abs(X[I] - X[J])), abs=1e-15) and sigma == 0
    X, I, J = stratified_pairs(UNIT, 1000, 0)
    a_hat, sigma = estimate_intermediate_defect(ScaleMap(3.0, halfline()), 1, UNIT, 1000, 0)
    # 3|x-y| - |x-y| = 2|x-y|, so the widest sampled pair wins
    assert a_hat == pytest.approx(2 * np.max(np.abs(X[I] - X[J])), rel=1e-12) and sigma == a_hat
    assert 1.9 < a_hat <= 2.0


# -- inclusion chains ---------------------------------------------------------------


def test_chains_on_asymptotically_nonexpansive_map():
    K = box([-1, -0.5], [1, 0.5])
    T = AffineMap([[0.5, 1.0], [0.0, 0.5]], [0, 0], K, closed_power=True)
    assert asymptotic_chain_check(T, GEOM, 8, K, 3000, 0).ok
    assert nearly_chain_check(T, GEOM, 8, K, 3000, 0).ok
    # without the factor the first power escapes ||x - y||
    assert not asymptotic_chain_check(T, ZERO, 1, K, 3000, 0).ok


def test_chains_on_sahu_step():
    assert nearly_chain_check(SahuStepMap(), GEOM, 6, UNIT, 4000, 0).ok


# -- counterexample ------------------------------------------------------------------


def test_counterexample_rows():
    rows = counterexample_demo(20)
    assert rows[0].step_diff == 0.5
    assert 10 ** rows[0].image_diff_log10 == pytest.approx(4.5, rel=1e-12)
    assert rows[9].step_diff == pytest.approx(1 / 110, abs=1e-15)
    # 3^18 / (17 * 18) = 387420489 / 306
    assert rows[16].image_diff_log10 == pytest.approx(math.log10(387420489 / 306), abs=1e-12)
    assert rows[16].image_diff_log10 > 6


def test_counterexample_log_and_direct_agree():
    rows = counterexample_demo(700)
    for r in rows:
        if r.n <= 640:
            assert r.direct is not None
            assert abs(10 ** (r.image_diff_log10 - math.log10(r.direct)) - 1) <= 1e-9
        assert abs(r.image_diff_log10 - r.closed_form_log10) <= 1e-9 * max(1, abs(r.closed_form_log10))
    assert rows[-1].direct is None  # 3^701 overflows a double
    assert all(b.image_diff_log10 > a.image_diff_log10 for a, b in zip(rows[1:], rows[2:]))
    assert all(b.step_diff < a.step_diff for a, b in zip(rows, rows[1:]))
