"""
Strongly convex, smooth objectives with exact derivatives and reference minimizers.
"""

from .base import ObjectiveConstants, ObjectiveProblem, ReferenceSolution
from .logistic import LogisticObjective, logistic_from_dataset, power_iteration
from .quadratic import QuadraticObjective
from .reference import solve_reference
from .synthetic import (
    parse_synthetic_spec,
    quadratic_from_spectrum,
    synthetic_logistic,
    synthetic_quadratic,
)

__all__ = [
    'LogisticObjective',
    'ObjectiveConstants',
    'ObjectiveProblem',
    'QuadraticObjective',
    'ReferenceSolution',
    'logistic_from_dataset',
    'parse_synthetic_spec',
    'power_iteration',
    'quadratic_from_spectrum',
    'solve_reference',
    'synthetic_logistic',
    'synthetic_quadratic',
]
