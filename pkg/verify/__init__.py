"""
Theory oracles over recorded trajectories

The suites live in verify.suites; they drive the optimizers, which import
verify.trace, so they are not re-exported here.
"""

from .trace import FULL_SNAPSHOT_MAX_DIM, VerifyTrace
from .checks import (
    CheckReport,
    check_hb_descent,
    check_pn_lyapunov,
    check_gradient_gap,
    check_norm_sandwich,
    check_ultra_bound,
    check_rate_envelope,
    check_smoothness,
    check_strong_convexity,
    finite_diff_check,
    hessian_vec_check,
    lyapunov_values,
    merge_reports,
    relative_margin,
    summarize,
)

__all__ = [
    'FULL_SNAPSHOT_MAX_DIM',
    'CheckReport',
    'VerifyTrace',
    'check_hb_descent',
    'check_pn_lyapunov',
    'check_gradient_gap',
    'check_norm_sandwich',
    'check_ultra_bound',
    'check_rate_envelope',
    'check_smoothness',
    'check_strong_convexity',
    'finite_diff_check',
    'hessian_vec_check',
    'lyapunov_values',
    'merge_reports',
    'relative_margin',
    'summarize',
]
