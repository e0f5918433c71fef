"""Latent class components for multivariate categorical data.

Within a component the variables are independent multinomials; the
occurrence probabilities of variable j get a uniform Dirichlet prior,
so the conjugate update is Dirichlet(1 + counts). There is no shared
hyperparameter. Codes are 0-based internally; probability tables are
padded to the largest category count, with pads fixed at 1 so they stay
inert under log.
"""

import numpy as np
from scipy.special import gammaln

from .base import MixtureKernel


def k_modes(codes, k, rng, max_iter=20):
    """Hard clustering of categorical rows under Hamming distance.

    Ties in assignment and in the mode update are broken by the lowest
    index so runs are reproducible given the generator state.
    """
    n, d = codes.shape
    centers = codes[rng.choice(n, size=k, replace=False)].copy()
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        dist = (codes[:, None, :] != centers[None, :, :]).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for g in range(k):
            rows = codes[labels == g]
            if rows.shape[0] == 0:
                continue
            for j in range(d):
                centers[g, j] = np.bincount(rows[:, j]).argmax()
    return labels, centers


class LatentClassKernel(MixtureKernel):

    tag = "lca"

    def __init__(self, cats):
        cats = np.asarray(cats, dtype=np.int64).reshape(-1)
        if np.any(cats < 2):
            raise ValueError("each variable needs at least two categories")
        self.cats = cats
        self.dim = cats.size
        self.cmax = int(cats.max())
        self.valid = np.arange(self.cmax)[None, :] < cats[:, None]  # (d, cmax)
        self.n_features = int(cats.sum())

    @classmethod
    def from_data(cls, data, cats=None):
        codes = np.asarray(data, dtype=np.int64)
        if codes.ndim != 2:
            raise ValueError("need a 2-d matrix of category codes")
        if cats is None:
            cats = codes.max(axis=0) + 1
        kernel = cls(cats)
        kernel.validate_data(codes)
        return kernel

    def validate_data(self, data):
        codes = np.asarray(data)
        if not np.issubdtype(codes.dtype, np.integer):
            raise ValueError("categorical data must be integer coded")
        if codes.ndim != 2 or codes.shape[1] != self.dim:
            raise ValueError("expected %d categorical variables" % self.dim)
        if np.any(codes < 0) or np.any(codes >= self.cats[None, :]):
            raise ValueError("category code out of range")

    def data_constants(self):
        return {"categories": self.cats.tolist()}

    # ---- likelihood ----

    def log_density_matrix(self, data, theta):
        codes = np.asarray(data, dtype=np.int64)
        logp = np.log(theta["pi"])  # pads are 1.0, never indexed
        out = np.zeros((theta["pi"].shape[0], codes.shape[0]))
        for j in range(self.dim):
            out += logp[:, j, :][:, codes[:, j]]
        return out.T

    # ---- component parameters ----

    def _dirichlet_block(self, shape_table, rng):
        """Normalize Gamma draws within the valid categories of each
        variable; shape_table is (size, d, cmax)."""
        g = rng.gamma(np.where(self.valid[None, :, :], shape_table, 1.0))
        g = np.where(self.valid[None, :, :], g, 0.0)
        pi = g / g.sum(axis=2, keepdims=True)
        return np.where(self.valid[None, :, :], pi, 1.0)

    def _counts(self, codes, alloc, k):
        flat = (alloc[:, None] * self.dim + np.arange(self.dim)[None, :]) * self.cmax + codes
        cnt = np.bincount(flat.ravel(), minlength=k * self.dim * self.cmax)
        return cnt.reshape(k, self.dim, self.cmax).astype(float)

    def draw_theta_prior(self, phi, size, rng):
        ones = np.ones((size, self.dim, self.cmax))
        return {"pi": self._dirichlet_block(ones, rng)}

    def draw_theta_posterior(self, y, phi, rng, current=None):
        codes = np.asarray(y, dtype=np.int64).reshape(-1, self.dim)
        cnt = self._counts(codes, np.zeros(codes.shape[0], dtype=np.int64), 1)
        return {"pi": self._dirichlet_block(1.0 + cnt, rng)}

    def update_filled(self, data, alloc, k_plus, phi, theta, rng):
        codes = np.asarray(data, dtype=np.int64)
        cnt = self._counts(codes, alloc, k_plus)
        theta["pi"][:k_plus] = self._dirichlet_block(1.0 + cnt, rng)

    # ---- priors ----

    def log_prior_theta(self, theta, phi):
        # uniform Dirichlet density Gamma(c_j) on each simplex
        return np.full(theta["pi"].shape[0], gammaln(self.cats).sum())

    # ---- initialization and identification ----

    def init_state(self, data, k_init, rng):
        codes = np.asarray(data, dtype=np.int64)
        labels, _ = k_modes(codes, k_init, rng)
        cnt = self._counts(codes, labels, k_init)
        freq = cnt + 1.0
        freq = np.where(self.valid[None, :, :], freq, 0.0)
        pi = freq / freq.sum(axis=2, keepdims=True)
        pi = np.where(self.valid[None, :, :], pi, 1.0)
        return labels, {"pi": pi}, None

    def features(self, theta, k_plus):
        pi = theta["pi"][:k_plus]
        return pi[:, self.valid].copy()
