"""Exact partition and cluster-count distributions for generalized mixtures
of finite mixtures.

The model: K ~ p(K), eta | K ~ Dirichlet_K(gamma_K), allocations S_i | eta
multinomial. Integrating out eta gives an exchangeable partition law whose
normalizing pieces (V, R, C below) are all computable by truncated sums and
recursions. Everything here runs in log space; infinite sums over K stop
once the prior tail mass drops below TAIL_EPS and the current block adds
less than REL_EPS of the running total, with a hard cap at K_HARD_CAP.
"""

import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .priors import K_HARD_CAP

TAIL_EPS = 1e-12
TAIL_HARD = 1e-14
REL_EPS = 1e-14
_KSUM_BLOCK = 256

_LOG_REL_EPS = np.log(REL_EPS)


# ---------------------------------------------------------------------------
# partitions as size vectors

@dataclass(frozen=True)
class Partition:
    """Unordered partition of {1..n} summarized by its block sizes."""

    sizes: tuple

    def __post_init__(self):
        if len(self.sizes) == 0:
            raise ValueError("partition needs at least one block")
        if any(int(s) != s or s < 1 for s in self.sizes):
            raise ValueError("block sizes must be positive integers")
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))

    @classmethod
    def from_labels(cls, labels):
        labels = np.asarray(labels)
        if labels.size == 0:
            raise ValueError("empty label vector")
        _, counts = np.unique(labels, return_counts=True)
        return cls(tuple(int(c) for c in counts))

    @property
    def n(self):
        return int(sum(self.sizes))

    @property
    def k_plus(self):
        return len(self.sizes)


def _sizes(partition):
    if isinstance(partition, Partition):
        return np.asarray(partition.sizes, dtype=float)
    arr = np.asarray(partition, dtype=float)
    if arr.ndim != 1 or arr.size == 0 or np.any(arr < 1) or np.any(arr != np.floor(arr)):
        raise ValueError("cluster sizes must be a nonempty vector of positive integers")
    return arr


def relabel_by_appearance(labels):
    """Canonical partition labels: 1..K+ in order of first appearance."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv] + 1


# ---------------------------------------------------------------------------
# V, Ewens and R factors

def log_v(n, k_plus, k_components, gamma_k):
    """log V_{n,k+}^{K,gamma_K} = log[ Gamma(gamma_K K) K! /
    (Gamma(gamma_K K + n) (K - k+)!) ].  Vectorized; -inf where K < k+."""
    n = np.asarray(n, dtype=float)
    kp = np.asarray(k_plus, dtype=float)
    kc = np.asarray(k_components, dtype=float)
    g = np.asarray(gamma_k, dtype=float)
    gk = g * kc
    with np.errstate(invalid="ignore"):
        out = gammaln(gk) + gammaln(kc + 1.0) - gammaln(gk + n) - gammaln(kc - kp + 1.0)
    out = np.where(kc >= kp, out, -np.inf)
    if out.ndim == 0:
        return float(out)
    return out


def log_eppf_conditional(partition, k_components, gamma_k):
    """Log prior probability of a partition given K components and gamma_K."""
    sizes = _sizes(partition)
    n = sizes.sum()
    kp = len(sizes)
    kc = np.asarray(k_components, dtype=float)
    g = np.asarray(gamma_k, dtype=float)
    scalar = kc.ndim == 0 and g.ndim == 0
    kc, g = np.broadcast_arrays(np.atleast_1d(kc), np.atleast_1d(g))
    lv = log_v(n, kp, kc, g)
    blocks = np.sum(gammaln(sizes[None, :] + g[:, None]) - gammaln(g)[:, None], axis=1)
    out = lv + blocks
    if scalar:
        return float(out[0])
    return out


def log_ewens(partition, alpha):
    """Log Ewens (DP) partition probability with concentration alpha."""
    sizes = _sizes(partition)
    n = sizes.sum()
    kp = len(sizes)
    return float(kp * np.log(alpha) + gammaln(alpha) - gammaln(alpha + n)
                 + np.sum(gammaln(sizes)))


def log_r_factor(partition, k_components, alpha):
    """Log of the finite-K correction R_{n,k+}^{K,alpha} to the Ewens law.

    R -> 1 as K -> inf; R = 0 for K < k+ (returned as -inf). Vectorized
    over k_components.
    """
    sizes = _sizes(partition)
    kp = len(sizes)
    kc = np.asarray(k_components, dtype=float)
    scalar = kc.ndim == 0
    kc = np.atleast_1d(kc)
    g = alpha / kc  # (B,)
    terms = (gammaln(sizes[None, :] + g[:, None]) - gammaln(1.0 + g)[:, None]
             - gammaln(sizes)[None, :])
    j = np.arange(1, kp + 1, dtype=float)
    # rows with kc < kp hit log of non-positives; they are masked to -inf
    with np.errstate(divide="ignore", invalid="ignore"):
        occ = np.log(kc[:, None] - j[None, :] + 1.0) - np.log(kc)[:, None]
        out = np.where(kc >= kp, terms.sum(axis=1) + occ.sum(axis=1), -np.inf)
    if scalar:
        return float(out[0])
    return out


# ---------------------------------------------------------------------------
# truncated sums over the component-count prior

def truncated_k_sum(prior, k_start, log_term, width=0):
    """logsumexp over K >= k_start of [log p(K) + log_term(K_block)].

    log_term maps an int array (B,) to (B,) or (B, width) log values.
    Stops when the remaining prior tail mass is below TAIL_EPS and the
    last block contributed below REL_EPS of the running total, or
    unconditionally once the tail mass drops under TAIL_HARD: every
    caller's per-K bracket is a probability, so the neglected absolute
    mass is below TAIL_HARD even when far entries keep creeping up
    (heavy-tailed p(K) with k near n converges only polynomially in K).
    """
    k_start = max(1, int(k_start))
    smax = prior.support_max()
    if smax is not None and smax < k_start:
        return -np.inf if width == 0 else np.full(width, -np.inf)
    total = np.full(max(width, 1), -np.inf)
    covered = 1.0 - prior.tail_mass(k_start - 1) if k_start > 1 else 0.0
    k_lo = k_start
    while True:
        k_hi = k_lo + _KSUM_BLOCK - 1
        if smax is not None:
            k_hi = min(k_hi, smax)
        k_hi = min(k_hi, K_HARD_CAP)
        ks = np.arange(k_lo, k_hi + 1)
        log_p = prior.log_pmf(ks.astype(float))
        done_support = (smax is not None and k_hi >= smax) or k_hi >= K_HARD_CAP
        if not np.any(np.isfinite(log_p)):
            # no prior mass here (e.g. a far-off point mass): skip the term
            if done_support:
                break
            k_lo = k_hi + 1
            continue
        vals = np.asarray(log_term(ks))
        if width:
            block = logsumexp(log_p[:, None] + vals, axis=0)  # vals is (B, width)
        else:
            block = np.atleast_1d(logsumexp(log_p + vals))
        total = np.logaddexp(total, block)
        covered += float(np.exp(logsumexp(log_p)))
        tail = max(0.0, 1.0 - covered)
        small = bool(np.all(block <= _LOG_REL_EPS
                            + np.where(np.isfinite(total), total, np.inf)))
        if done_support or tail < TAIL_HARD or (tail < TAIL_EPS and small):
            break
        k_lo = k_hi + 1
    if width == 0:
        return float(total[0])
    return total


def log_eppf_marginal(partition, prior, spec):
    """Log partition probability with K marginalized over its prior.

    `spec` must carry a fixed concentration (static gamma or dynamic alpha).
    """
    if not spec.is_fixed:
        raise ValueError("marginal EPPF needs a fixed concentration value")
    sizes = _sizes(partition)
    kp = len(sizes)

    def term(ks):
        g = spec.gamma_for(ks.astype(float))
        return log_eppf_conditional(sizes, ks.astype(float), g)

    return truncated_k_sum(prior, kp, term)


# ---------------------------------------------------------------------------
# the composition-sum table C_{n,k}

@dataclass(frozen=True)
class CTable:
    """log C_{n,k} for k = 1..n at one weight sequence.

    C_{n,k} sums Gamma(N_1+g)/Gamma(N_1+1) * ... over ordered compositions
    (N_1,..,N_k) of n; the DPM limit uses weights 1/m instead.
    """

    n: int
    gamma_k: object  # float, or None for the DPM limit
    log_values: np.ndarray

    @property
    def dpm(self):
        return self.gamma_k is None


_TABLE_CACHE = {}
_TABLE_LOCK = threading.Lock()


def _log_weights(n, gamma_k=None, dpm=False):
    m = np.arange(1, n + 1, dtype=float)
    if dpm:
        return -np.log(m)
    return gammaln(m + gamma_k) - gammaln(m + 1.0)


def c_table(n, gamma_k=None, dpm=False):
    """Composition-sum table via the triangular Toeplitz recursion.

    Row k is the correlation of row k-1 with the weight sequence:
    C_{n',k} = sum_{m=1}^{n'-k+1} w_m C_{n'-m,k-1}, run in log space with a
    log-sum-exp per entry (C overflows double precision otherwise).
    Results are cached per (n, gamma_k).
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if dpm:
        key = (n, "dpm")
    else:
        if gamma_k is None or gamma_k <= 0:
            raise ValueError("gamma_k must be positive (or pass dpm=True)")
        key = (n, "%.15e" % gamma_k)
    with _TABLE_LOCK:
        hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit

    log_w = _log_weights(n, gamma_k, dpm)
    out = np.empty(n)
    prev = log_w.copy()  # prev[j] = log C_{k-1+j, k-1}, here k-1 = 1
    out[0] = prev[n - 1]
    for k in range(2, n + 1):
        rows = n - k + 1
        j = np.arange(rows)[:, None]
        m = np.arange(rows)[None, :]
        idx = j - m
        with np.errstate(invalid="ignore"):
            mat = np.where(idx >= 0, log_w[m] + prev[np.maximum(idx, 0)], -np.inf)
        prev = logsumexp(mat, axis=1)
        out[k - 1] = prev[rows - 1]

    table = CTable(n=n, gamma_k=None if dpm else float(gamma_k), log_values=out)
    with _TABLE_LOCK:
        _TABLE_CACHE[key] = table
    return table


def _log_c_rows(n, gammas):
    """log C_{n,k}, k = 1..n, for a batch of gamma values at once.

    Equivalent to c_table per gamma but O(n^2) per value: runs the
    generalized-Stirling triangle S_{m+1,k} = S_{m,k-1} + (m + gamma k) S_{m,k}
    and converts via C_{n,k} = Gamma(1+gamma)^k k!/n! S_{n,k}. gamma = 0 rows
    give the DPM limit. Returns (len(gammas), n).

    The inner log-sum-exp is spelled out with whole-array kernels (maximum
    plus log1p of the exponentiated gap); a fused logaddexp ufunc call per
    cell is an order of magnitude slower. Entries with k > m stay -inf and
    flow through the gap arithmetic as exp(-inf) = 0.
    """
    g = np.asarray(gammas, dtype=float)
    big = g.shape[0]
    k = np.arange(0, n + 1, dtype=float)
    coef = g[:, None] * k[None, 1:]
    L = np.full((big, n + 1), -np.inf)
    L[:, 1] = 0.0
    for m in range(1, n):
        with np.errstate(invalid="ignore"):
            stay = np.log(m + coef) + L[:, 1:]
            hi = np.maximum(L[:, :-1], stay)
            L[:, 1:] = np.where(np.isneginf(hi), -np.inf,
                                hi + np.log1p(np.exp(-np.abs(L[:, :-1] - stay))))
    kk = np.arange(1, n + 1, dtype=float)
    return L[:, 1:] + kk[None, :] * gammaln(1.0 + g)[:, None] \
        + gammaln(kk + 1.0)[None, :] - gammaln(n + 1.0)


# ---------------------------------------------------------------------------
# prior distribution of the number of filled clusters

_PMF_CACHE = {}
_PMF_LOCK = threading.Lock()


def _pmf_cache_key(n, prior, spec):
    return (int(n), prior.family, prior.params, spec.mode, spec.value)


def prior_K_plus(n, prior, spec):
    """Prior pmf of the number of filled clusters K+ for n observations.

    Returns a length-n array over k = 1..n. `spec` must carry a fixed
    concentration. Static mode shares one C-table across the K-sum;
    dynamic mode needs a table per K (gamma_K = alpha/K varies), built in
    batches by `_log_c_rows`.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not spec.is_fixed:
        raise ValueError("prior_K_plus needs a fixed concentration value")
    key = _pmf_cache_key(n, prior, spec)
    with _PMF_LOCK:
        hit = _PMF_CACHE.get(key)
    if hit is not None:
        return hit.copy()

    kvec = np.arange(1, n + 1, dtype=float)
    if spec.mode == "static":
        g = spec.value
        log_c = c_table(n, g).log_values

        def term(ks):
            return log_v(n, kvec[None, :], ks[:, None].astype(float), g)

        log_vsum = truncated_k_sum(prior, 1, term, width=n)
        logp = gammaln(n + 1.0) - gammaln(kvec + 1.0) - kvec * gammaln(g) \
            + log_c + log_vsum
    else:
        alpha = spec.value

        def term(ks):
            g = alpha / ks.astype(float)
            log_c = _log_c_rows(n, g)
            lv = log_v(n, kvec[None, :], ks[:, None].astype(float), g[:, None])
            return lv - kvec[None, :] * gammaln(g)[:, None] + log_c

        log_sum = truncated_k_sum(prior, 1, term, width=n)
        logp = gammaln(n + 1.0) - gammaln(kvec + 1.0) + log_sum

    pmf = np.exp(logp)
    with _PMF_LOCK:
        _PMF_CACHE[key] = pmf
    return pmf.copy()


def dpm_prior_K_plus(n, alpha):
    """Prior pmf of K+ under the Dirichlet process with concentration alpha."""
    n = int(n)
    kvec = np.arange(1, n + 1, dtype=float)
    log_c = c_table(n, dpm=True).log_values
    logp = gammaln(n + 1.0) - gammaln(kvec + 1.0) + kvec * np.log(alpha) \
        + gammaln(alpha) - gammaln(alpha + n) + log_c
    return np.exp(logp)


def expected_K_plus(n, prior, spec):
    """Prior mean of the number of filled clusters."""
    pmf = prior_K_plus(n, prior, spec)
    return float(np.arange(1, n + 1) @ pmf)


def dpm_expected_K_plus(n, alpha):
    """DPM identity: E[K+] = sum_{i=0}^{n-1} alpha/(alpha+i)."""
    i = np.arange(n, dtype=float)
    return float(np.sum(alpha / (alpha + i)))


def static_V_recursion_check(n, prior, gamma):
    """Max relative error of V_{n,k} = (gamma k + n) V_{n+1,k} + gamma V_{n+1,k+1}
    over k = 1..n, with each V computed by its truncated K-sum."""

    def vsum(nn, width):
        kvec = np.arange(1, width + 1, dtype=float)

        def term(ks):
            return log_v(nn, kvec[None, :], ks[:, None].astype(float), gamma)

        return truncated_k_sum(prior, 1, term, width=width)

    log_v_n = vsum(n, n)
    log_v_n1 = vsum(n + 1, n + 1)
    k = np.arange(1, n + 1, dtype=float)
    lhs = log_v_n
    rhs = np.logaddexp(np.log(gamma * k + n) + log_v_n1[:n],
                       np.log(gamma) + log_v_n1[1:n + 1])
    return float(np.max(np.abs(np.expm1(rhs - lhs))))


# ---------------------------------------------------------------------------
# conditional composition laws and the one-step predictive

def conditional_eppf_given_k(partition, mode, gamma=None, alpha=None, prior=None):
    """Log probability of an ordered cluster-size vector given K+ = len(sizes).

    mode "dpm":     proportional to prod 1/N_j.
    mode "static":  proportional to prod Gamma(N_j+gamma)/Gamma(N_j+1);
                    uniform over compositions at gamma = 1.
    mode "dynamic": ratio of two truncated K-sums (needs alpha and prior).
    """
    sizes = _sizes(partition)
    n = int(sizes.sum())
    kp = len(sizes)
    if mode == "dpm":
        log_c = c_table(n, dpm=True).log_values[kp - 1]
        return float(-np.sum(np.log(sizes)) - log_c)
    if mode == "static":
        if gamma is None or gamma <= 0:
            raise ValueError("static mode needs gamma > 0")
        log_c = c_table(n, gamma).log_values[kp - 1]
        return float(np.sum(gammaln(sizes + gamma) - gammaln(sizes + 1.0)) - log_c)
    if mode != "dynamic":
        raise ValueError("mode must be 'dpm', 'static' or 'dynamic'")
    if alpha is None or alpha <= 0 or prior is None:
        raise ValueError("dynamic mode needs alpha > 0 and a component-count prior")

    def num_term(ks):
        g = alpha / ks.astype(float)
        lv = log_v(n, kp, ks.astype(float), g)
        blocks = np.sum(gammaln(sizes[None, :] + g[:, None]) - gammaln(sizes + 1.0)[None, :],
                        axis=1)
        return lv - kp * gammaln(g) + blocks

    def den_term(ks):
        g = alpha / ks.astype(float)
        log_c = _log_c_rows(n, g)[:, kp - 1]
        lv = log_v(n, kp, ks.astype(float), g)
        return lv - kp * gammaln(g) + log_c

    log_num = truncated_k_sum(prior, kp, num_term)
    log_den = truncated_k_sum(prior, kp, den_term)
    return float(log_num - log_den)


def predictive_new_cluster(partition, alpha, prior):
    """Probability that observation n+1 opens a new cluster, dynamic regime.

    Equals alpha/(alpha+n) * (1 - k+ * A / B) with A = sum_K p(K) R/K and
    B = sum_K p(K) R; always <= alpha/(alpha+n), with equality only in the
    K -> infinity (DPM) limit.
    """
    sizes = _sizes(partition)
    n = int(sizes.sum())
    kp = len(sizes)

    def term(ks):
        lr = log_r_factor(sizes, ks.astype(float), alpha)
        return np.stack([lr - np.log(ks.astype(float)), lr], axis=1)

    log_ab = truncated_k_sum(prior, kp, term, width=2)
    ratio = np.exp(log_ab[0] - log_ab[1])
    return float(alpha / (alpha + n) * (1.0 - kp * ratio))
