"""Numerical laboratory for chordal Loewner evolution and SLE."""

from .core import (
    FlowResult,
    HalfPlanePoint,
    SlitMapChain,
    TipProfile,
    arc_length,
    forward_flow,
    forward_observables,
    inverse_map,
    reverse_flow_tip,
    shifted_inverse,
    shifted_inverse_deriv,
    slit_forward,
    slit_forward_deriv,
    slit_reverse,
    slit_reverse_deriv,
    tip_profile,
    trace,
    trace_point,
)
from .driving import DrivingPath, deterministic_driver, refine_dyadic, sample_brownian, sample_generator
from .errors import (
    DegenerateArcError,
    DomainError,
    LoewnerLabError,
    ParameterError,
    RangeError,
    ResourceError,
)
from .estimators import (
    beta_histogram,
    estimate_count_scaling,
    estimate_moment,
    forward_martingale_test,
    radial_theta_simulate,
    reverse_martingale_test,
)
from .harmonic import estimate_tip_harmonic_measure
from .spectra import (
    dims_of_beta,
    exponents_from_beta,
    exponents_from_lambda,
    exponents_from_r,
    f_bulk,
    f_tip,
    figure1_curves,
    forward_exponents,
    rho_forward,
    rho_of_beta,
    spectrum_params,
    spectrum_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]
