"""Sampling-algorithms laboratory.

Direct Sampling, random-walk Metropolis and Metropolis-coupled MCMC over
Gaussian targets, with Levy-flight exponent and 1/f spectral-slope analyses.
"""

from samplerlab._core import (  # noqa: F401
    ConfigError,
    Covariance,
    FitError,
    GaussianMixture,
    PowerLawFit,
    SpectralFit,
    TargetDistribution,
    Trace,
    UnimodalGaussian,
    __version__,
    acceptance_probability,
    autocorrelation,
    environment_from_json,
    environment_to_json,
    fit_power_law,
    fit_spectral_slope,
    flight_distances,
    generate_patchy_environment,
    kl_mode_divergence,
    levy_proposal,
    log_density,
    mean_mode_distance,
    nearest_mode,
    periodogram,
    run_ds,
    run_experiment_json,
    run_mc3,
    run_rwm,
    sample_direct,
    swap_acceptance,
    tempered_log_density,
)
