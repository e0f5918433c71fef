"""Telescoping Gibbs sampler for mixtures with an unknown number of components.

One sweep alternates: (1) allocations given weights and component
parameters, then a relabeling that moves the filled components to the
front; (2) conjugate updates of the filled components and of the kernel
hyperparameter; (3) the number of components K given the partition, and
a random-walk Metropolis update of the concentration when it carries a
hyperprior; (4) fresh prior draws for the empty components and the joint
weight vector. Exchanging K conditional on the partition rather than on
the allocations is what lets K jump below the currently labeled number
of components.

Allocations are stored 0-based internally; every file format writes them
1-based.
"""

from dataclasses import dataclass, field

import numpy as np

from .partitions import log_eppf_conditional
from .kernels.base import theta_concat, theta_take

_FEATURE_PAD = np.nan


@dataclass
class SamplerConfig:
    iterations: int = 100_000    # recorded sweeps (after burn-in, before thinning)
    burn_in: int = 10_000
    thin: int = 1
    k_max: int = 100
    k_init: int = 15
    mh_step: float = 1.0
    adapt_mh: bool = True        # burn-in-only step tuning toward 0.44 acceptance
    seed: int = 0

    def validate(self):
        if self.iterations < 1 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("iterations >= 1, burn_in >= 0, thin >= 1 required")
        if not 1 <= self.k_init:
            raise ValueError("k_init must be positive")
        if not 1 <= self.k_max <= 65535:
            raise ValueError("k_max must lie in 1..65535")
        if self.mh_step <= 0:
            raise ValueError("mh_step must be positive")


@dataclass
class MixtureState:
    """Current sampler state.

    labels are 0-based component indices; the `allocations` property
    gives the 1-based view. counts has length k with the filled
    components first after relabeling.
    """
    k: int
    k_plus: int
    labels: np.ndarray
    counts: np.ndarray
    eta: np.ndarray
    theta: dict
    phi: object
    concentration: float

    @property
    def allocations(self):
        return self.labels + 1

    def check(self):
        assert self.eta.shape == (self.k,)
        assert abs(self.eta.sum() - 1.0) < 1e-9
        assert self.counts.shape == (self.k,)
        assert self.k_plus == np.count_nonzero(self.counts)
        assert np.all(self.counts[:self.k_plus] > 0)
        assert self.labels.min() >= 0 and self.labels.max() < self.k_plus


@dataclass
class SamplerTrace:
    """Recorded draws plus enough metadata to post-process them."""
    k: np.ndarray
    k_plus: np.ndarray
    concentration: np.ndarray
    accept: np.ndarray           # 1/0 MH outcome, -1 when no MH step ran
    alloc: np.ndarray            # (draws, n) uint16, 0-based
    features: np.ndarray         # (draws, kp_max, fdim), nan-padded
    n: int
    kernel_tag: str
    mode: str
    burn_in: int
    thin: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def draws(self):
        return self.k.shape[0]

    @property
    def accept_rate(self):
        m = self.accept >= 0
        return float(self.accept[m].mean()) if m.any() else float("nan")


def categorical_rows(logits, rng):
    """One draw per row of an unnormalized log-probability matrix."""
    g = rng.gumbel(size=logits.shape)
    return np.argmax(logits + g, axis=1)


def step_allocation(state, data, kernel, rng):
    with np.errstate(divide="ignore"):
        logits = np.log(state.eta)[None, :] + kernel.log_density_matrix(data, state.theta)
    state.labels = categorical_rows(logits, rng)
    state.counts = np.bincount(state.labels, minlength=state.k)


def step_relabel(state):
    """Move filled components to the front, preserving relative order."""
    filled = np.flatnonzero(state.counts > 0)
    state.k_plus = filled.size
    if filled.size == state.k:
        return
    order = np.concatenate([filled, np.flatnonzero(state.counts == 0)])
    rho = np.empty(state.k, dtype=np.int64)
    rho[order] = np.arange(state.k)
    state.labels = rho[state.labels]
    state.counts = state.counts[order]
    state.eta = state.eta[order]
    state.theta = theta_take(state.theta, order)


def step_update_components(state, data, kernel, rng):
    kernel.update_filled(data, state.labels, state.k_plus, state.phi, state.theta, rng)
    state.phi = kernel.draw_phi(state.theta, state.k_plus, rng)


def conditional_log_pmf_k(sizes, ks, prior, spec, concentration, log_pmf=None):
    """Unnormalized log p(K | partition, concentration) on a grid."""
    lp = prior.log_pmf(ks) if log_pmf is None else log_pmf
    return lp + log_eppf_conditional(sizes, ks, spec.gamma_for(ks, concentration))


def step_sample_K(state, prior, spec, rng, k_max, log_pmf_grid=None):
    """Draw K from its conditional on {K+ .. k_max} (prior renormalized)."""
    hi = k_max if prior.support_max() is None else min(k_max, prior.support_max())
    if state.k_plus > hi:
        raise RuntimeError("partition has %d clusters but K cannot exceed %d"
                           % (state.k_plus, hi))
    ks = np.arange(state.k_plus, hi + 1)
    sizes = state.counts[:state.k_plus]
    lp = None if log_pmf_grid is None else log_pmf_grid[ks]
    lw = conditional_log_pmf_k(sizes, ks, prior, spec, state.concentration, log_pmf=lp)
    lw -= lw.max()
    p = np.exp(lw)
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, rng.random() * cdf[-1], side="right")
    state.k = int(ks[min(idx, ks.size - 1)])


def concentration_log_target(value, sizes, k, spec):
    """Log conditional of the concentration given partition and K."""
    return (float(spec.log_density(value))
            + log_eppf_conditional(sizes, k, spec.gamma_for(k, value)))


def step_mh_concentration(state, spec, rng, step_scale):
    """Random walk on the log scale; returns 1/0 on accept/reject, -1 if fixed."""
    if spec.is_fixed:
        return -1
    sizes = state.counts[:state.k_plus]
    cur = state.concentration
    prop = cur * np.exp(step_scale * rng.standard_normal())
    log_ratio = (concentration_log_target(prop, sizes, state.k, spec)
                 - concentration_log_target(cur, sizes, state.k, spec)
                 + np.log(prop) - np.log(cur))
    if np.log(rng.random()) < log_ratio:
        state.concentration = prop
        return 1
    return 0


def step_expand_and_weights(state, kernel, spec, rng):
    filled = theta_take(state.theta, slice(0, state.k_plus))
    if state.k > state.k_plus:
        fresh = kernel.draw_theta_prior(state.phi, state.k - state.k_plus, rng)
        state.theta = theta_concat(filled, fresh)
    else:
        state.theta = filled
    gamma_k = spec.gamma_for(state.k, state.concentration)
    e = np.full(state.k, gamma_k)
    e[:state.k_plus] += state.counts[:state.k_plus]
    state.eta = rng.dirichlet(e)
    state.counts = np.concatenate([state.counts[:state.k_plus],
                                   np.zeros(state.k - state.k_plus, dtype=state.counts.dtype)])


def init_state(data, kernel, prior, spec, config, rng):
    n = np.asarray(data).shape[0]
    k0 = min(config.k_init, config.k_max, n)
    if prior.support_max() is not None:
        k0 = min(k0, prior.support_max())
    labels, theta, phi = kernel.init_state(data, k0, rng)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=k0)
    state = MixtureState(k=k0, k_plus=0, labels=labels, counts=counts,
                         eta=np.full(k0, 1.0 / k0), theta=theta, phi=phi,
                         concentration=float(spec.initial_value()))
    step_relabel(state)
    return state


def _grow_features(feat, needed):
    grown = np.full((feat.shape[0], max(needed, 2 * feat.shape[1]), feat.shape[2]),
                    _FEATURE_PAD)
    grown[:, :feat.shape[1], :] = feat
    return grown


def run(data, kernel, prior, spec, config, progress=None):
    """Run one chain and return its trace.

    progress, if given, is called every 10000 sweeps with
    (sweep_index, total_sweeps).
    """
    config.validate()
    kernel.validate_data(data)
    data = np.asarray(data)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    state = init_state(data, kernel, prior, spec, config, rng)

    hi = config.k_max if prior.support_max() is None else min(config.k_max, prior.support_max())
    log_pmf_grid = np.full(hi + 1, -np.inf)
    log_pmf_grid[1:] = prior.log_pmf(np.arange(1, hi + 1))
    if not np.isfinite(log_pmf_grid).any():
        raise ValueError("component-count prior has no mass on 1..%d" % hi)

    total = config.burn_in + config.iterations
    draws = (config.iterations + config.thin - 1) // config.thin
    n = data.shape[0]
    fdim = kernel.n_features
    k_rec = np.zeros(draws, dtype=np.int64)
    kp_rec = np.zeros(draws, dtype=np.int64)
    conc_rec = np.zeros(draws)
    acc_rec = np.zeros(draws, dtype=np.int8)
    alloc_rec = np.zeros((draws, n), dtype=np.uint16)
    feat_rec = np.full((draws, max(state.k_plus, 4), fdim), _FEATURE_PAD)

    mh_step = config.mh_step
    adapting = config.adapt_mh and not spec.is_fixed
    acc_batch = 0
    row = 0
    for sweep in range(total):
        step_allocation(state, data, kernel, rng)
        step_relabel(state)
        step_update_components(state, data, kernel, rng)
        step_sample_K(state, prior, spec, rng, config.k_max, log_pmf_grid)
        accept = step_mh_concentration(state, spec, rng, mh_step)
        step_expand_and_weights(state, kernel, spec, rng)

        if adapting and sweep < config.burn_in:
            acc_batch += max(accept, 0)
            if (sweep + 1) % 50 == 0:
                # vanishing log-scale adjustment toward 0.44 acceptance
                batch = (sweep + 1) // 50
                mh_step *= np.exp((acc_batch / 50.0 - 0.44) / np.sqrt(batch))
                acc_batch = 0

        j = sweep - config.burn_in
        if j >= 0 and j % config.thin == 0:
            k_rec[row] = state.k
            kp_rec[row] = state.k_plus
            conc_rec[row] = state.concentration
            acc_rec[row] = accept
            alloc_rec[row] = state.labels
            if state.k_plus > feat_rec.shape[1]:
                feat_rec = _grow_features(feat_rec, state.k_plus)
            feat_rec[row, :state.k_plus, :] = kernel.features(state.theta, state.k_plus)
            row += 1
        if progress is not None and (sweep + 1) % 10000 == 0:
            progress(sweep + 1, total)

    kp_max = int(kp_rec.max())
    return SamplerTrace(
        k=k_rec, k_plus=kp_rec, concentration=conc_rec, accept=acc_rec,
        alloc=alloc_rec, features=feat_rec[:, :kp_max, :],
        n=n, kernel_tag=kernel.tag, mode=spec.mode,
        burn_in=config.burn_in, thin=config.thin, seed=config.seed,
        meta={"k_max": config.k_max, "mh_step_final": float(mh_step),
              "prior": prior.describe(), "concentration": spec.describe(),
              "data_constants": kernel.data_constants()},
    )
