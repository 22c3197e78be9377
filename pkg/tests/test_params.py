import math

import numpy as np
import pytest

from fixpoint.errors import ConfigurationError
from fixpoint.params import ParameterSequences, PhiSpec, SequenceRule


@pytest.mark.parametrize(
    "rule, total",
    [
        (SequenceRule("zero"), 0.0),
        (SequenceRule("inverse-power", c=2.0, p=2), 2 * math.pi**2 / 6),
        (SequenceRule("geometric", c=1.0, q=0.5), 1.0),
        (SequenceRule("finite", values=(0.5, 0.25)), 0.75),
    ],
)
def test_series_bounds(rule, total):
    assert rule.series_bound == pytest.approx(total)
    assert rule.certify_summable()
    assert rule.terms(50).sum() <= total + 1e-12


def test_integral_bound_for_general_exponent():
    rule = SequenceRule("inverse-power", c=1.0, p=3)
    assert rule.terms(100_000).sum() <= rule.series_bound
    assert rule.series_bound == 1.5


def test_divergent_rule_is_not_summable():
    rule = SequenceRule("inverse-power", c=1.0, p=1)
    assert not rule.summable
    assert rule.series_bound == math.inf
    with pytest.raises(ConfigurationError, match="mu"):
        ParameterSequences(mu=rule)
    # allowed as the a_n sequence
    ParameterSequences(a=rule)


def test_rule_terms_match_calls():
    for rule in (SequenceRule("geometric", c=3, q=0.25), SequenceRule("finite", values=(1, 0.5, 0.1))):
        np.testing.assert_allclose(rule.terms(6), [rule(n) for n in range(1, 7)], rtol=1e-15)


@pytest.mark.parametrize("kwargs", [dict(kind="geometric", q=1.0), dict(kind="inverse-power", p=0), dict(kind="nope")])
def test_rule_validation(kwargs):
    with pytest.raises(ConfigurationError):
        SequenceRule(**kwargs)


def test_phi_kinds():
    assert PhiSpec()(2.5) == 2.5
    assert PhiSpec("power", exponent=0.5)(4.0) == 2.0
    tab = PhiSpec("user-table", table=((0, 0), (1, 2), (2, 3)))
    assert tab(0.5) == 1.0 and tab(3.0) == 4.0


def test_phi_growth_constant_checked():
    PhiSpec("power", exponent=0.5, M=1.0, M_star=1.0).validate()
    with pytest.raises(ConfigurationError, match="M_star"):
        PhiSpec("power", exponent=2.0, M=1.0, M_star=5.0).validate()
    with pytest.raises(ConfigurationError, match="M_star"):
        ParameterSequences(phi=PhiSpec("identity", M=1.0, M_star=0.5))


def test_phi_table_must_increase():
    with pytest.raises(ConfigurationError):
        PhiSpec("user-table", table=((0, 0), (1, 1), (1, 2)))
