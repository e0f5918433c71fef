"""Component-kernel contract for the mixture sampler.

A kernel owns the component likelihood f(y | theta), the conjugate draws
of theta, and an optional kernel hyperparameter phi with its own update.
Component parameters are dicts of numpy arrays whose leading axis indexes
components, so the sampler can permute/extend them without knowing the
kernel internals.
"""

import abc

import numpy as np


def theta_take(theta, idx):
    """Reindex every parameter array along the component axis."""
    return {name: np.asarray(arr)[idx] for name, arr in theta.items()}

def theta_concat(a, b):
    return {name: np.concatenate([a[name], b[name]], axis=0) for name in a}

def theta_set(theta, k, single):
    """Write a leading-1 block into component slot k in place."""
    for name in theta:
        theta[name][k] = single[name][0]


class MixtureKernel(abc.ABC):
    """Abstract component model plugged into the telescoping sampler."""

    tag = None          # config tag
    n_features = None   # per-component feature dim used for relabeling

    # ---- construction ----

    @classmethod
    @abc.abstractmethod
    def from_data(cls, data):
        """Build a kernel with data-derived prior constants frozen in."""

    @abc.abstractmethod
    def validate_data(self, data):
        """Raise ValueError on data outside the kernel's domain."""

    def data_constants(self):
        """Constants recorded in the run manifest."""
        return {}

    # ---- likelihood ----

    @abc.abstractmethod
    def log_density_matrix(self, data, theta):
        """(N, K) matrix of log f(y_i | theta_k)."""

    def log_component_density(self, y, theta, k=0):
        """Log density of one observation under component k."""
        row = np.asarray(y)[None, ...]
        return float(self.log_density_matrix(row, theta)[0, k])

    # ---- component parameters ----

    @abc.abstractmethod
    def draw_theta_prior(self, phi, size, rng):
        """A block of `size` components drawn from p(theta | phi)."""

    @abc.abstractmethod
    def draw_theta_posterior(self, y, phi, rng, current=None):
        """One component from p(theta | y, phi) as a leading-1 block.

        `y` holds the observations currently allocated to the component
        (possibly empty, in which case this must reduce to a prior draw);
        `current` is the component's present leading-1 block, used by
        kernels whose conditional update is a blocked Gibbs sweep.
        """

    def update_filled(self, data, alloc, k_plus, phi, theta, rng):
        """Redraw theta for components 0..k_plus-1 in place.

        Default loops over components; kernels override with vectorized
        versions where it pays off.
        """
        for k in range(k_plus):
            yk = data[alloc == k]
            cur = theta_take(theta, slice(k, k + 1))
            theta_set(theta, k, self.draw_theta_posterior(yk, phi, rng, current=cur))

    # ---- hyperparameter ----

    def init_phi(self):
        return None

    def draw_phi(self, theta, k_plus, rng):
        """Draw phi | theta_1..theta_{K+}; kernels without phi return None."""
        if k_plus < 1:
            raise ValueError("draw_phi needs at least one filled component")
        return None

    # ---- priors, for the joint-posterior invariance checks ----

    def log_prior_theta(self, theta, phi):
        """(K,) vector of log p(theta_k | phi)."""
        raise NotImplementedError

    def log_prior_phi(self, phi):
        return 0.0

    # ---- initialization and identification ----

    @abc.abstractmethod
    def init_state(self, data, k_init, rng):
        """(labels, theta, phi) start values: a hard clustering into
        k_init groups, overdispersed component parameters at the cluster
        centers, and phi at its prior center."""

    def features(self, theta, k_plus):
        """(k_plus, n_features) coordinates for point-process relabeling."""
        raise NotImplementedError


class ConstantKernel(MixtureKernel):
    """log f identically zero: the sampler then draws from the prior.

    Exists for prior-reproduction tests; `data` only fixes N.
    """

    tag = "constant"
    n_features = 0

    def __init__(self, n):
        self.n = int(n)

    @classmethod
    def from_data(cls, data):
        return cls(np.asarray(data).shape[0])

    def validate_data(self, data):
        if np.asarray(data).shape[0] != self.n:
            raise ValueError("data size changed under a constant kernel")

    def log_density_matrix(self, data, theta):
        return np.zeros((np.asarray(data).shape[0], theta["null"].shape[0]))

    def draw_theta_prior(self, phi, size, rng):
        return {"null": np.zeros((size, 0))}

    def draw_theta_posterior(self, y, phi, rng, current=None):
        return {"null": np.zeros((1, 0))}

    def update_filled(self, data, alloc, k_plus, phi, theta, rng):
        pass

    def log_prior_theta(self, theta, phi):
        return np.zeros(theta["null"].shape[0])

    def init_state(self, data, k_init, rng):
        n = np.asarray(data).shape[0]
        labels = rng.integers(0, k_init, size=n)
        return labels, self.draw_theta_prior(None, k_init, rng), None

    def features(self, theta, k_plus):
        return np.zeros((k_plus, 0))
