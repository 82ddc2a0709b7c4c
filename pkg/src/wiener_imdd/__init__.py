"""Analytic Wiener filtering for dispersive intensity-modulation / direct-detection links."""
from .channel import (
    Cir,
    ConvOperator,
    LinkParams,
    build_conv_operator,
    cd_frequency_response,
    forward_simulate,
    sample_cir,
)
from .config import ExperimentConfig
from .constellation import Constellation, TaylorCoeffs, build_pam, predistort, taylor_coeffs
from .errors import DomainError, ResolutionError, SingularityError
from .shaping import ShapingResult, optimize_span
from .sim import (
    PowerBudget,
    SweepPoint,
    achievable_rate_lb,
    calibrate_noise,
    electrical_receive_power,
    launch_power,
    run_monte_carlo,
    run_sweep,
    shape_at_snr,
)
from .wiener import (
    OutputStats,
    WienerFilter,
    analytic_esr,
    cross_covariance,
    design_filter,
    matched_wf,
    mismatched_wf,
    naive_wf,
    output_covariance,
    output_mean,
    output_stats,
    solve_wf,
)

__version__ = "0.1.0"
