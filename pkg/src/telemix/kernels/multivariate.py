"""Multivariate Gaussian components with a hierarchical Wishart prior.

mu_k ~ N(b0, B0) with b0 the componentwise median and B0 = diag(R_j^2)
built from the per-dimension ranges. Component precisions get
Sigma_k^{-1} ~ W(c0, C0) and the scale matrix itself a hyperprior
C0 ~ W(g0, G0). Wisharts are parameterized in shape/rate form,

    p(X) = |C|^c |X|^(c-(r+1)/2) exp(-tr(C X)) / Gamma_r(c),

so E[X] = c C^{-1} and the usual degrees of freedom is 2c. With
c0 = 2.5 + (r-1)/2 and g0 = 0.5 + (r-1)/2 every conditional below keeps
2*shape > r-1, hence all draws stay nonsingular.
"""

import warnings

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import multigammaln

from .base import MixtureKernel

_LOG2PI = np.log(2.0 * np.pi)


def wishart_shape_rate(shape, rate, rng):
    """Draw from the shape/rate Wishart via the Bartlett decomposition."""
    rate = np.asarray(rate, dtype=float)
    r = rate.shape[0]
    df = 2.0 * shape
    if df <= r - 1:
        raise ValueError("Wishart shape too small for dimension")
    scale = 0.5 * np.linalg.inv(rate)
    ls = np.linalg.cholesky(0.5 * (scale + scale.T))
    a = np.zeros((r, r))
    a[np.diag_indices(r)] = np.sqrt(rng.chisquare(df - np.arange(r)))
    a[np.tril_indices(r, -1)] = rng.standard_normal(r * (r - 1) // 2)
    la = ls @ a
    x = la @ la.T
    return 0.5 * (x + x.T)


def wishart_shape_rate_logpdf(x, shape, rate):
    r = rate.shape[0]
    _, logdet_x = np.linalg.slogdet(x)
    _, logdet_c = np.linalg.slogdet(rate)
    return (shape * logdet_c + (shape - 0.5 * (r + 1)) * logdet_x
            - np.trace(rate @ x) - multigammaln(shape, r))


class MultivariateGaussianHier(MixtureKernel):

    tag = "mvn-hier"

    def __init__(self, b0, ranges):
        b0 = np.asarray(b0, dtype=float).reshape(-1)
        ranges = np.asarray(ranges, dtype=float).reshape(-1)
        if b0.shape != ranges.shape:
            raise ValueError("location/range length mismatch")
        if not np.all(np.isfinite(ranges)) or np.any(ranges <= 0):
            raise ValueError("per-dimension ranges must be positive")
        self.dim = b0.size
        self.b0 = b0
        self.b0_diag = ranges ** 2          # B0 = diag(R_j^2)
        self.c0 = 2.5 + 0.5 * (self.dim - 1)
        self.g0 = 0.5 + 0.5 * (self.dim - 1)
        self.g0_rate = (100.0 * self.g0 / self.c0) * np.diag(1.0 / self.b0_diag)
        self.n_features = self.dim

    @classmethod
    def from_data(cls, data):
        y = np.asarray(data, dtype=float)
        if y.ndim != 2 or y.shape[0] < 2:
            raise ValueError("need a 2-d data matrix with at least two rows")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite observations")
        return cls(np.median(y, axis=0), y.max(axis=0) - y.min(axis=0))

    def validate_data(self, data):
        y = np.asarray(data, dtype=float)
        if y.ndim != 2 or y.shape[1] != self.dim:
            raise ValueError("expected %d columns" % self.dim)
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite observations")

    def data_constants(self):
        return {"prior_mean_location": self.b0.tolist(),
                "prior_mean_scale2": self.b0_diag.tolist(),
                "prec_shape": self.c0, "scale_shape": self.g0}

    # ---- likelihood ----

    def log_density_matrix(self, data, theta):
        y = np.asarray(data, dtype=float)
        mu, prec = theta["mu"], theta["prec"]
        diff = y[:, None, :] - mu[None, :, :]
        quad = np.einsum("nkr,krs,nks->nk", diff, prec, diff)
        _, logdet = np.linalg.slogdet(prec)
        return 0.5 * (logdet[None, :] - quad - self.dim * _LOG2PI)

    # ---- component parameters ----

    def draw_theta_prior(self, phi, size, rng):
        mu = self.b0[None, :] + np.sqrt(self.b0_diag)[None, :] * rng.standard_normal((size, self.dim))
        prec = np.stack([wishart_shape_rate(self.c0, phi, rng) for _ in range(size)])
        return {"mu": mu, "prec": prec}

    def draw_theta_posterior(self, y, phi, rng, current=None):
        y = np.asarray(y, dtype=float).reshape(-1, self.dim)
        if y.shape[0] == 0 or current is None:
            return self.draw_theta_prior(phi, 1, rng)
        n = y.shape[0]
        prec_k = current["prec"][0]
        post_prec = np.diag(1.0 / self.b0_diag) + n * prec_k
        low = np.linalg.cholesky(post_prec)
        rhs = self.b0 / self.b0_diag + prec_k @ y.sum(axis=0)
        mean = cho_solve((low, True), rhs)
        mu = mean + solve_triangular(low.T, rng.standard_normal(self.dim), lower=False)
        diff = y - mu
        rate = phi + 0.5 * diff.T @ diff
        prec = wishart_shape_rate(self.c0 + 0.5 * n, rate, rng)
        return {"mu": mu[None, :], "prec": prec[None, :, :]}

    # ---- hyperparameter ----

    def init_phi(self):
        return (self.c0 / 100.0) * np.diag(self.b0_diag)

    def draw_phi(self, theta, k_plus, rng):
        if k_plus < 1:
            raise ValueError("draw_phi needs at least one filled component")
        rate = self.g0_rate + theta["prec"][:k_plus].sum(axis=0)
        return wishart_shape_rate(self.g0 + k_plus * self.c0, rate, rng)

    # ---- priors ----

    def log_prior_theta(self, theta, phi):
        mu, prec = theta["mu"], theta["prec"]
        z2 = ((mu - self.b0[None, :]) ** 2 / self.b0_diag[None, :]).sum(axis=1)
        lmu = -0.5 * (z2 + np.log(self.b0_diag).sum() + self.dim * _LOG2PI)
        lprec = np.array([wishart_shape_rate_logpdf(p, self.c0, phi) for p in prec])
        return lmu + lprec

    def log_prior_phi(self, phi):
        return wishart_shape_rate_logpdf(phi, self.g0, self.g0_rate)

    # ---- initialization and identification ----

    def init_state(self, data, k_init, rng):
        y = np.asarray(data, dtype=float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            centers, labels = kmeans2(y, k_init, minit="++", seed=rng)
        prec0 = np.diag(1.0 / np.var(y, axis=0))
        theta = {"mu": centers.copy(),
                 "prec": np.broadcast_to(prec0, (k_init, self.dim, self.dim)).copy()}
        return labels.astype(np.int64), theta, self.init_phi()

    def features(self, theta, k_plus):
        return theta["mu"][:k_plus].copy()
