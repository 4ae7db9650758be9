"""Estimation of beta-mixing coefficients of stationary geometrically
ergodic Markov processes from a single sample path.

Two estimators are provided: a bivariate-KDE estimator for real-valued
paths and a frequency-count estimator for finite alphabets, together with
exact / quadrature ground-truth oracles, seeded process generators, the
closed-form error-bound calculators, and a CLI experiment harness.
"""

from .errors import NumericalError, ParameterError
from .core import (
    BetaEstimate,
    BlockPlan,
    BoundParams,
    MixingEnvelope,
    SamplePath,
    SmoothnessSpec,
    block_count,
    expected_error_bound_continuous,
    expected_error_bound_finite,
    expected_error_bound_multi,
    highprob_error_bound_continuous,
    pair_indices,
    skip_length_continuous,
    skip_length_finite,
    skip_length_multi,
)
from .kde import (
    BandwidthRule,
    DensityGrid,
    GridPolicy,
    GridSpec,
    KernelSpec,
    bandwidth,
    estimate_beta_kde,
    gaussian_kernel,
    grid_for_pairs,
    kde_on_grid,
    marginalize_x,
    product_order4_kernel,
    tv_half_distance,
)
from .finite import (
    EmpiricalPairMeasure,
    beta_hat_finite,
    count_pairs,
    estimate_beta_finite,
    estimate_beta_sup,
)
from .oracles import (
    ARSpec,
    AcfEstimate,
    FiniteChainSpec,
    JanssonBounds,
    QuadraturePolicy,
    acf_estimate,
    ar1_envelope,
    beta_bivariate_gaussian,
    beta_exact_finite,
    beta_from_acf,
    beta_gaussian_ar1,
    jansson_bounds,
    skip_length_ar1,
)
from .generate import (
    derive_seed,
    gen_ar1,
    gen_finite_chain,
    gen_lognormal_ar1,
    read_path_file,
    stationary_distribution,
    write_path_file,
)

__version__ = "0.1.0"
