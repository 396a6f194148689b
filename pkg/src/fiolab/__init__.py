"""Sampled Fourier integral operators, modulation-space norms and sharpness experiments."""

from .grid import GridError, GridSpec, SampledFunction, fourier, inner, lp_norm, sample, shift
from .stft import GaborCoefficients, Window, bump_window, gaussian_window, istft, stft
from .norms import NormEstimate, bessel, equivalence_report, fl_norm, mp_norm
from .fio import (
    FioOperator,
    Phase,
    Symbol,
    adjoint_apply,
    apply_fio,
    change_of_variables_phase,
    check_nondegeneracy,
    gabor_matrix,
    linear_phase,
    phase_fl1_bound,
    product_symbol,
    radial_phase,
)
from .decomp import (
    DilationIndices,
    LPSystem,
    almost_orthogonality,
    apply_multiplier,
    conjugation_residual,
    dilate,
    dyadic_piece,
    lp_system,
)
from .sharpness import (
    Diffeo,
    ExperimentResult,
    default_diffeo,
    default_family,
    fit_exponent,
    make_fn,
    sharpness_experiment,
    vdc_check,
)

__version__ = "0.1.0"
