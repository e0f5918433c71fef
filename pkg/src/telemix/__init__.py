"""Mixtures of finite mixtures: exact partition priors, a telescoping
Gibbs sampler with pluggable component kernels, and post-processing."""

__version__ = "1.0.0"

from .priors import ComponentCountPrior, ConcentrationSpec, Hyperprior
from .partitions import (Partition, c_table, conditional_eppf_given_k,
                         dpm_expected_K_plus, dpm_prior_K_plus,
                         expected_K_plus, log_eppf_conditional,
                         log_eppf_marginal, log_ewens, log_r_factor, log_v,
                         predictive_new_cluster, prior_K_plus,
                         relabel_by_appearance)
from .sampler import MixtureState, SamplerConfig, SamplerTrace, run
from .identify import (IdentifiedModel, PosteriorTable, acf,
                       adjusted_rand_index, identify, posterior_table)
from .kernels import (KERNELS, ConstantKernel, LatentClassKernel,
                      MixtureKernel, MultivariateGaussianHier,
                      UnivariateGaussianRG)

__all__ = [
    "ComponentCountPrior", "ConcentrationSpec", "Hyperprior", "Partition",
    "c_table", "conditional_eppf_given_k", "dpm_expected_K_plus",
    "dpm_prior_K_plus", "expected_K_plus", "log_eppf_conditional",
    "log_eppf_marginal", "log_ewens", "log_r_factor", "log_v",
    "predictive_new_cluster", "prior_K_plus", "relabel_by_appearance",
    "MixtureState", "SamplerConfig", "SamplerTrace", "run",
    "IdentifiedModel", "PosteriorTable", "acf", "adjusted_rand_index",
    "identify", "posterior_table", "KERNELS", "ConstantKernel",
    "LatentClassKernel", "MixtureKernel", "MultivariateGaussianHier",
    "UnivariateGaussianRG", "__version__",
]
