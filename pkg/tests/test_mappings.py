import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixpoint.errors import ConfigurationError, DomainError, NumericRangeError
from fixpoint.mappings import (
    AffineMap,
    ComposedMap,
    ConstantMap,
    SahuStepMap,
    ScaleMap,
    apply,
    apply_power,
    identity,
    linearized_bound,
    validate_mapping,
    verify_total_asymptotic,
)
from fixpoint.params import ParameterSequences, PhiSpec, SequenceRule
from fixpoint.spaces import box, halfline

GEOM = SequenceRule("geometric", c=1.0, q=0.5)


def test_sahu_step_values():
    T = SahuStepMap()
    assert apply(T, [0.3])[0] == 0.5
    assert apply(T, [0.5])[0] == 0.5
    assert apply(T, [0.8])[0] == 0.0
    assert apply_power(T, 2, [0.8])[0] == 0.5
    for x in np.linspace(0, 1, 101):
        assert apply_power(T, 5, [x])[0] == 0.5


def test_scale_values():
    T = ScaleMap(3.0, halfline())
    assert apply(T, [1.0])[0] == 3
    assert apply_power(T, 3, [1.0])[0] == 27
    assert apply_power(T, 3, [1.0], method="iterate")[0] == 3.0 * 3.0 * 3.0


def test_identity_power():
    T = identity(box([0, 0], [5, 5]))
    np.testing.assert_array_equal(apply_power(T, 7, [1, 2]), [1, 2])


def test_domain_error():
    with pytest.raises(DomainError):
        apply(SahuStepMap(), [1.5])
    # inside the tolerance band
    assert apply(SahuStepMap(), [1.0 + 1e-10])[0] == 0.0


def test_overflow_is_reported_not_inf():
    T = ScaleMap(3.0, halfline())
    with pytest.raises(NumericRangeError):
        apply_power(T, 700, [1.0])
    with pytest.raises(NumericRangeError):
        apply_power(T, 700, [1.0], method="iterate")
    A = AffineMap([[10.0]], [0.0], halfline())
    with pytest.raises(NumericRangeError):
        apply_power(A, 400, [1.0])


def test_log_power_survives_overflow():
    T = ScaleMap(3.0, halfline())
    sign, mag = T.log_power(1000, np.array([2.0]))
    assert sign[0] == 1
    assert mag[0] == pytest.approx(1000 * math.log(3) + math.log(2), rel=1e-15)
    sign, _ = ScaleMap(-3.0, halfline()).log_power(3, np.array([1.0]))
    assert sign[0] == -1


def test_iteration_cap():
    T = AffineMap([[0.5]], [0.0], box([-1], [1]))
    with pytest.raises(NumericRangeError, match="cap"):
        apply_power(T, 10**6 + 1, [0.1], method="iterate")


def test_affine_closed_power_matches_iteration(rng):
    A = rng.uniform(-0.3, 0.3, (3, 3))
    b = rng.uniform(-0.1, 0.1, 3)
    T = AffineMap(A, b, halfline(dim=3), closed_power=True)
    x = rng.uniform(-1, 1, 3)
    for n in (1, 2, 3, 7, 8, 31, 64):
        np.testing.assert_allclose(apply_power(T, n, x, "closed"), apply_power(T, n, x, "iterate"), rtol=1e-9, atol=1e-13)


@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_semigroup_law(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(-0.6, 0.6, (2, 2))
    b = rng.uniform(-1, 1, 2)
    maps = [
        AffineMap(A, b, halfline(dim=2), closed_power=True),
        AffineMap(A, b, halfline(dim=2)),
        ScaleMap(1.5, halfline(dim=2)),
    ]
    x = rng.uniform(-1, 1, 2)
    for T in maps:
        lhs = apply_power(T, m + n, x)
        rhs = apply_power(T, m, apply_power(T, n, x))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)
    S = SahuStepMap()
    y = [rng.random()]
    assert apply_power(S, m + n, y)[0] == apply_power(S, m, apply_power(S, n, y))[0]


def test_fixed_points_stay_fixed():
    p = np.array([0.2, -0.1])
    A = np.array([[0.4, 0.1], [-0.2, 0.3]])
    T = AffineMap(A, p - A @ p, box([-1, -1], [1, 1]), fixed_points=[p])
    for n in range(1, 33):
        assert np.linalg.norm(apply_power(T, n, p) - p) <= n * 1e-9
    assert apply_power(SahuStepMap(), 9, [0.5])[0] == 0.5


def test_constant_and_composed():
    K = box([0, 0], [1, 1])
    C = ConstantMap([0.25, 0.75], K)
    np.testing.assert_array_equal(apply_power(C, 4, [0.9, 0.1]), [0.25, 0.75])
    swap = AffineMap([[0, 1], [1, 0]], [0, 0], K)
    half = AffineMap(0.5 * np.eye(2), [0, 0], K)
    T = ComposedMap([swap, half])
    np.testing.assert_allclose(apply(T, [1.0, 0.0]), [0.0, 0.5])
    validate_mapping(T)


def test_validate_mapping_catches_escape():
    with pytest.raises(ConfigurationError, match="outside"):
        validate_mapping(ScaleMap(3.0, box([0], [1])))
    with pytest.raises(ConfigurationError, match="not a fixed point"):
        validate_mapping(AffineMap([[0.5]], [0.1], box([-1], [1]), fixed_points=[[0.0]]))
    for T in (SahuStepMap(), identity(box([0], [1])), ScaleMap(-0.5, box([-1], [1]))):
        validate_mapping(T)


def test_linearized_bound_examples():
    assert linearized_bound(ParameterSequences(), 3, 0.7) == 0.7
    params = ParameterSequences(
        mu=SequenceRule("finite", values=(0.1,)),
        ell=SequenceRule("finite", values=(0.01,)),
        phi=PhiSpec("identity", M=1.0, M_star=2.0),
    )
    # (1 + 0.1*2)*1 + 0.1*1 + 0.01
    assert linearized_bound(params, 1, 1.0) == pytest.approx(1.31, abs=1e-15)
    params = ParameterSequences(mu=SequenceRule("finite", values=(0.1,)), phi=PhiSpec("identity", M=1.0, M_star=1.0))
    assert linearized_bound(params, 1, 0.0) == pytest.approx(0.1, abs=1e-15)


def test_linearized_bound_dominates_gauge(rng):
    phi = PhiSpec("power", exponent=0.5, M=1.0, M_star=1.0)
    params = ParameterSequences(mu=GEOM, ell=GEOM, phi=phi)
    for d in rng.uniform(0, 50, 200):
        for n in (1, 2, 5):
            assert d + params.mu(n) * phi(d) + params.ell(n) <= linearized_bound(params, n, d) + 1e-12


def test_verify_sahu_step_with_vanishing_offsets():
    params = ParameterSequences(a=GEOM, ell=GEOM)
    rep = verify_total_asymptotic(SahuStepMap(), params, n_max=6, samples=4000, seed=1)
    assert rep.ok
    # the jump across 1/2 nearly uses the full offset l_1 = 1/2
    assert rep.rows[0].worst_margin < 1e-3


def test_verify_identity_and_expanding_map():
    rep = verify_total_asymptotic(identity(box([0, 0], [1, 1])), ParameterSequences(), n_max=3, samples=500, seed=0)
    assert rep.ok
    T = ScaleMap(3.0, halfline())
    with pytest.raises(ConfigurationError):
        verify_total_asymptotic(T, ParameterSequences(), 2, 500, 0)
    rep = verify_total_asymptotic(T, ParameterSequences(), 2, 500, 0, sampling_box=box([0], [1]))
    assert not rep.ok
    x, y = rep.rows[0].first_violation
    assert 3 * abs(x[0] - y[0]) > abs(x[0] - y[0])


def test_verification_is_deterministic():
    params = ParameterSequences(a=GEOM, ell=GEOM)
    r1 = verify_total_asymptotic(SahuStepMap(), params, 3, 1000, 42)
    r2 = verify_total_asymptotic(SahuStepMap(), params, 3, 1000, 42)
    assert [(r.worst_margin, r.witness) for r in r1.rows] == [(r.worst_margin, r.witness) for r in r2.rows]
