"""Univariate Gaussian components with a range-anchored conjugate hierarchy.

mu_k ~ N(m, R^2), sigma^2_k ~ InvGamma(2, C0), C0 ~ Gamma(0.2, 10/R^2),
where m is the midrange and R the range of the data. The Gamma is in
shape/rate form, so E[C0] = 0.02 R^2 and the marginal scale of sigma^2
tracks the spread of the observations.
"""

import warnings

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import gammaln

from .base import MixtureKernel

_LOG2PI = np.log(2.0 * np.pi)

# fixed hierarchy shapes
_A_SIGMA = 2.0
_A_C0 = 0.2
_B_C0_OVER_R2 = 10.0


class UnivariateGaussianRG(MixtureKernel):

    tag = "uvn-rg"
    n_features = 1

    def __init__(self, midrange, data_range):
        if not np.isfinite(data_range) or data_range <= 0:
            raise ValueError("data range must be positive and finite")
        self.m = float(midrange)
        self.r2 = float(data_range) ** 2
        self.c0_rate = _B_C0_OVER_R2 / self.r2

    @classmethod
    def from_data(cls, data):
        y = np.asarray(data, dtype=float).reshape(-1)
        if y.size < 2 or not np.all(np.isfinite(y)):
            raise ValueError("need at least two finite observations")
        lo, hi = y.min(), y.max()
        return cls(0.5 * (lo + hi), hi - lo)

    def validate_data(self, data):
        y = np.asarray(data, dtype=float)
        if y.ndim == 2 and y.shape[1] == 1:
            y = y[:, 0]
        if y.ndim != 1:
            raise ValueError("univariate kernel expects a single column")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite observations")

    def data_constants(self):
        return {"prior_mean_location": self.m, "prior_mean_scale2": self.r2,
                "c0_shape": _A_C0, "c0_rate": self.c0_rate}

    # ---- likelihood ----

    def log_density_matrix(self, data, theta):
        y = np.asarray(data, dtype=float).reshape(-1)
        mu, var = theta["mu"], theta["var"]
        z2 = (y[:, None] - mu[None, :]) ** 2 / var[None, :]
        return -0.5 * (z2 + np.log(var)[None, :] + _LOG2PI)

    # ---- component parameters ----

    def draw_theta_prior(self, phi, size, rng):
        mu = self.m + np.sqrt(self.r2) * rng.standard_normal(size)
        var = phi / rng.gamma(_A_SIGMA, size=size)
        return {"mu": mu, "var": var}

    def draw_theta_posterior(self, y, phi, rng, current=None):
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size == 0 or current is None:
            return self.draw_theta_prior(phi, 1, rng)
        n = y.size
        var = current["var"][0]
        prec = 1.0 / self.r2 + n / var
        mean = (self.m / self.r2 + y.sum() / var) / prec
        mu = mean + rng.standard_normal() / np.sqrt(prec)
        rate = phi + 0.5 * np.sum((y - mu) ** 2)
        var = rate / rng.gamma(_A_SIGMA + 0.5 * n)
        return {"mu": np.array([mu]), "var": np.array([var])}

    def update_filled(self, data, alloc, k_plus, phi, theta, rng):
        # blocked sweep, vectorized across filled components via bincount
        y = np.asarray(data, dtype=float).reshape(-1)
        n = np.bincount(alloc, minlength=k_plus)[:k_plus].astype(float)
        sy = np.bincount(alloc, weights=y, minlength=k_plus)[:k_plus]
        syy = np.bincount(alloc, weights=y * y, minlength=k_plus)[:k_plus]
        var = theta["var"][:k_plus]
        prec = 1.0 / self.r2 + n / var
        mean = (self.m / self.r2 + sy / var) / prec
        mu = mean + rng.standard_normal(k_plus) / np.sqrt(prec)
        ssq = syy - 2.0 * mu * sy + n * mu * mu
        var = (phi + 0.5 * ssq) / rng.gamma(_A_SIGMA + 0.5 * n)
        theta["mu"][:k_plus] = mu
        theta["var"][:k_plus] = var

    # ---- hyperparameter ----

    def init_phi(self):
        return _A_C0 / self.c0_rate

    def draw_phi(self, theta, k_plus, rng):
        super().draw_phi(theta, k_plus, rng)
        rate = self.c0_rate + np.sum(1.0 / theta["var"][:k_plus])
        return rng.gamma(_A_C0 + _A_SIGMA * k_plus) / rate

    # ---- priors ----

    def log_prior_theta(self, theta, phi):
        mu, var = theta["mu"], theta["var"]
        lmu = -0.5 * ((mu - self.m) ** 2 / self.r2 + np.log(self.r2) + _LOG2PI)
        lvar = (_A_SIGMA * np.log(phi) - gammaln(_A_SIGMA)
                - (_A_SIGMA + 1.0) * np.log(var) - phi / var)
        return lmu + lvar

    def log_prior_phi(self, phi):
        return (_A_C0 * np.log(self.c0_rate) - gammaln(_A_C0)
                + (_A_C0 - 1.0) * np.log(phi) - self.c0_rate * phi)

    # ---- initialization and identification ----

    def init_state(self, data, k_init, rng):
        y = np.asarray(data, dtype=float).reshape(-1, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            centers, labels = kmeans2(y, k_init, minit="++", seed=rng)
        var0 = np.var(y)
        theta = {"mu": centers[:, 0].copy(),
                 "var": np.full(k_init, var0)}
        return labels.astype(np.int64), theta, self.init_phi()

    def features(self, theta, k_plus):
        return theta["mu"][:k_plus, None].copy()
