"""Averaged multi-map fixed-point iteration for families of total
asymptotically nonexpansive mappings, with sampled class certifiers."""

from ._backend import BACKEND
from .analysis import (
    check_convexity_inequality,
    counterexample_demo,
    estimate_eta,
    estimate_intermediate_defect,
    sequence_bound,
)
from .errors import (
    ConfigurationError,
    DivisionGuardError,
    DomainError,
    FixpointError,
    InvalidInputError,
    NumericRangeError,
    WeightValidationError,
)
from .iteration import IterationConfig, IterationTrace, WeightSchedule, check_fejer_bound, run, step
from .mappings import (
    AffineMap,
    ComposedMap,
    ConstantMap,
    SahuStepMap,
    ScaleMap,
    apply,
    apply_power,
    identity,
    linearized_bound,
    verify_total_asymptotic,
)
from .params import ParameterSequences, PhiSpec, SequenceRule
from .spaces import SQUARE, UNBOUNDED, DomainSpec, ball, box, convex_combine, domain_contains, halfline, norm

__version__ = "0.1.0"
