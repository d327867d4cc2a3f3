"""MCMC approximation of the Bayesian ideal observer for SKE/BKS
signal detection tasks with pluggable stochastic object models."""
from ._kernels import BACKEND as KERNEL_BACKEND
from .chains import (
    BIRTH_DEATH,
    WALK_ONLY,
    ChainConfig,
    ChainRecord,
    MoveMix,
    gaussian_log_acceptance,
    lumpy_propose,
    pcn_propose,
    run_latent_chain,
    run_lumpy_chain,
)
from .diagnostics import (
    autocorrelation,
    diagnostic_report,
    psfr,
    psfr_from_log,
    running_psfr,
    save_report,
)
from .evaluation import (
    ROCResult,
    auc_hanley_mcneil_se,
    auc_mann_whitney,
    auc_stderr,
    empirical_roc,
    radial_power_spectrum,
    save_summary,
    spectra_to_csv,
)
from .generator import (
    GeneratorNet,
    GsomFormatError,
    SOMBinding,
    fit_linear_surrogate,
    generated_background,
    generator_forward,
    load_generator,
    make_linear_generator,
    save_generator,
)
from .imaging import (
    FourierSamplingOperator,
    GaussianPRFSystem,
    Measurement,
    NoiseModel,
    add_noise,
    apply_fourier_operator,
    image_lumpy_analytic,
    image_signal_analytic,
    make_poisson_disc_mask,
    project_prf_numeric,
    psnr,
)
from .objects import (
    GaussianSignal,
    LumpyModelParams,
    LumpyRealization,
    eval_object_field,
    eval_signal_field,
    sample_lumpy_realization,
)
from .observers import (
    DetectionTask,
    ObserverScoreSet,
    estimate_log_likelihood_ratio,
    ho_template,
    ho_template_from_samples,
    ho_test_statistic,
    log_bke_likelihood_ratio,
    sample_covariance,
)

__version__ = "0.1.0"
