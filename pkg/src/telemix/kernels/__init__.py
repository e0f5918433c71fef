from .base import ConstantKernel, MixtureKernel, theta_concat, theta_take
from .latentclass import LatentClassKernel, k_modes
from .multivariate import (MultivariateGaussianHier, wishart_shape_rate,
                           wishart_shape_rate_logpdf)
from .univariate import UnivariateGaussianRG

KERNELS = {
    UnivariateGaussianRG.tag: UnivariateGaussianRG,
    MultivariateGaussianHier.tag: MultivariateGaussianHier,
    LatentClassKernel.tag: LatentClassKernel,
    ConstantKernel.tag: ConstantKernel,
}

__all__ = [
    "MixtureKernel", "ConstantKernel", "UnivariateGaussianRG",
    "MultivariateGaussianHier", "LatentClassKernel", "KERNELS",
    "theta_take", "theta_concat", "k_modes",
    "wishart_shape_rate", "wishart_shape_rate_logpdf",
]
