"""
Diagonal preconditioners: update rules, curvature sources and running state
"""

from .curvature import RngStream, information_matrix
from .rules import (
    PRESETS,
    Beta2Mode,
    PrecondRule,
    Source,
    Variant,
    Wiring,
    beta2_schedule,
    rule_from_name,
    theory_C,
)
from .state import DEFAULT_FLOOR, PreconditionerState, info_squared, initialize, update

__all__ = [
    'PRESETS',
    'Beta2Mode',
    'DEFAULT_FLOOR',
    'PrecondRule',
    'PreconditionerState',
    'RngStream',
    'Source',
    'Variant',
    'Wiring',
    'beta2_schedule',
    'info_squared',
    'information_matrix',
    'initialize',
    'rule_from_name',
    'theory_C',
    'update',
]
