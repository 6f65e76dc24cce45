"""Representation Jensen-Renyi divergence from kernel Gram-matrix spectra."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateBandwidthError,
    InputError,
    JrdError,
    NumericalError,
    ParseError,
)
from .jrd import (
    DivergenceResult,
    Method,
    MixtureGram,
    build_mixture,
    divergence,
    indicator_gram,
    jrd_block,
    jrd_exact,
    jrd_from_block_spectra,
    jrd_from_gram,
    jrd_population_form,
    jrd_upper_bound,
    trace_ratio,
)
from .kernels import (
    BandwidthRule,
    KernelSpec,
    SampleSet,
    bandwidth_mean_sqdist,
    bandwidth_median,
    eval_kernel,
    gram_matrix,
)
from .rff import RffMap, feature_map, jrd_rff, rff_spectrum, sample_rff
from .spectral import Spectrum, entropy_alpha, joint_entropy, mutual_information, spectrum
from .subsample import (
    Strategy,
    SubsampleConfig,
    SubsampleResult,
    balance_dataset,
    evaluate_subset,
    select_subset,
)
from .two_sample import (
    SweepSpec,
    TestConfig,
    TestResult,
    gen_mean_shift,
    gen_variance_shift,
    mmd_biased,
    permutation_test,
    rejection_sweep,
)
