"""Certified machine unlearning for strongly convex empirical risk minimization."""

from .errors import NumericalFailure, ParseError, SchemaError, UnsupportedOracle
from .losses import (
    Anchor,
    Classification,
    Dataset,
    ForgetSpec,
    LossConstants,
    LossModel,
    Regression,
    quadratic_anchor,
    reg_logistic,
    ridge,
)
from .numkit import RngHandle
from .unlearn import (
    CertBudget,
    Certificate,
    NoiseSpec,
    UnlearnReport,
    pipeline_noisy_minimizer,
    pipeline_trimgrad,
    verify_certificate,
)

__version__ = "0.1.0"
