"""
Preconditioned Heavy-Ball and Nesterov methods, theory parameters and the run driver
"""

from .params import (
    AveragingWeights,
    PnParams,
    averaged_output,
    effective_constants,
    l2_conversion,
    momentum_F,
    phb_complexity,
    phb_theory_gamma,
    pn_complexity,
    pn_theory_params,
    weight_ratio,
)
from .phb import PhbState, phb_step
from .pn import PnState, pn_step
from .runner import (
    METHOD_ALIASES,
    STOP_BUDGET,
    STOP_DIVERGED,
    STOP_GAP,
    STOP_TOLERANCE,
    THEORY,
    IterationRecord,
    RunConfig,
    RunReport,
    measure_bounds,
    run,
)

__all__ = [
    'AveragingWeights',
    'IterationRecord',
    'METHOD_ALIASES',
    'PhbState',
    'PnParams',
    'PnState',
    'RunConfig',
    'RunReport',
    'STOP_BUDGET',
    'STOP_DIVERGED',
    'STOP_GAP',
    'STOP_TOLERANCE',
    'THEORY',
    'averaged_output',
    'effective_constants',
    'l2_conversion',
    'measure_bounds',
    'momentum_F',
    'phb_complexity',
    'phb_step',
    'phb_theory_gamma',
    'pn_complexity',
    'pn_step',
    'pn_theory_params',
    'run',
    'weight_ratio',
]
