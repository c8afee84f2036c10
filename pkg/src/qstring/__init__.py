"""Recurrence coefficients of the q-lattice weight ``((q x)^4; q^4)_inf |x|^kappa``.

The positive solution of the associated string equation is computed
two ways: from the moments of the weight (Gram recursion) and by
positivity shooting on the first coefficient.
"""
from .dynamics import equivalence_check, forward_orbit, perturbation_probe, residual, shoot_a1, step_a, step_b
from .exceptions import (
    DegenerateStep,
    DomainError,
    InvalidBracket,
    NonFiniteValue,
    PrecisionExhausted,
    QStringError,
    ToleranceUnreachable,
)
from .moments import MomentTable, build_table, moment_by_quadrature, verify_recursion
from .opoly import CoeffSequence, MonicPolySeq, ladder_coeffs, recurrence_from_moments
from .qcore import PrecisionCfg, QParams, q_bracket, q_integral, q_pochhammer_inf
from .weight import NormalizedWeight, normalize, weight_eval

__version__ = "0.1.0"

__all__ = [
    "QParams",
    "PrecisionCfg",
    "q_bracket",
    "q_integral",
    "q_pochhammer_inf",
    "NormalizedWeight",
    "normalize",
    "weight_eval",
    "MomentTable",
    "build_table",
    "moment_by_quadrature",
    "verify_recursion",
    "MonicPolySeq",
    "CoeffSequence",
    "recurrence_from_moments",
    "ladder_coeffs",
    "step_a",
    "step_b",
    "forward_orbit",
    "residual",
    "equivalence_check",
    "shoot_a1",
    "perturbation_probe",
    "QStringError",
    "DomainError",
    "ToleranceUnreachable",
    "NonFiniteValue",
    "PrecisionExhausted",
    "DegenerateStep",
    "InvalidBracket",
]
