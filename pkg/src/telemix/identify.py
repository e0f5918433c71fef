"""Post-processing: posterior tables, relabeling, MAP partition, diagnostics.

Label switching is resolved in the point-process representation: the
filled-component feature vectors of all draws with K+ equal to the
posterior mode are pooled and clustered with k-means into K+ groups.
Draws whose components do not land in K+ distinct groups are dropped;
for the rest the group indices give a consistent relabeling from which
the MAP partition is read off observation by observation.
"""

from dataclasses import dataclass

import numpy as np
from scipy.cluster.vq import kmeans2

_KMEANS_RESTARTS = 10


@dataclass
class PosteriorTable:
    k_values: np.ndarray
    p_k: np.ndarray
    kplus_values: np.ndarray
    p_kplus: np.ndarray
    k_mode: int
    k_q1: int
    k_q3: int
    kplus_mode: int
    kplus_q1: int
    kplus_q3: int

    def summary(self):
        return {
            "K": {"mode": self.k_mode, "q1": self.k_q1, "q3": self.k_q3},
            "K_plus": {"mode": self.kplus_mode, "q1": self.kplus_q1,
                       "q3": self.kplus_q3},
        }


@dataclass
class IdentifiedModel:
    k_plus_hat: int
    draw_indices: np.ndarray    # trace rows with K+ = K_plus_hat
    retained: np.ndarray        # bool mask over draw_indices
    retention_rate: float
    allocations: np.ndarray     # (retained, n) relabeled, 1-based
    parameters: np.ndarray      # (retained, K_plus_hat, fdim) relabeled features
    centers: np.ndarray         # (K_plus_hat, fdim) cluster centers, original scale
    map_partition: np.ndarray   # (n,) 1-based modal cluster per observation

    @property
    def cluster_sizes(self):
        return np.bincount(self.map_partition - 1, minlength=self.k_plus_hat)


def _empirical(values):
    """(support, pmf, mode, q1, q3) of an integer-valued sample."""
    values = np.asarray(values)
    support, counts = np.unique(values, return_counts=True)
    pmf = counts / values.size
    mode = int(support[np.argmax(pmf)])  # ties resolve to the smallest value
    q1, q3 = np.percentile(values, [25, 75], method="inverted_cdf")
    return support, pmf, mode, int(q1), int(q3)


def posterior_table(trace):
    if trace.draws == 0:
        raise ValueError("empty trace")
    kv, pk, mk, q1k, q3k = _empirical(trace.k)
    pv, pp, mp, q1p, q3p = _empirical(trace.k_plus)
    return PosteriorTable(kv, pk, pv, pp, mk, q1k, q3k, mp, q1p, q3p)


def _best_kmeans(points, k, rng):
    best = None
    for _ in range(_KMEANS_RESTARTS):
        centers, labels = kmeans2(points, k, minit="++", seed=rng)
        inertia = float(((points - centers[labels]) ** 2).sum())
        if best is None or inertia < best[0]:
            best = (inertia, centers, labels)
    return best[1], best[2]


def identify(trace, k_plus_hat=None, rng=None):
    """Resolve label switching and extract the MAP partition.

    k_plus_hat defaults to the posterior mode of K+. The k-means runs on
    standardized feature coordinates with 10 restarts; cluster ids are
    made canonical by sorting the centers lexicographically, so repeated
    runs on identified output reproduce themselves.
    """
    if trace.draws == 0:
        raise ValueError("empty trace")
    if trace.features.shape[2] == 0:
        raise ValueError("kernel '%s' provides no identification features"
                         % trace.kernel_tag)
    if k_plus_hat is None:
        k_plus_hat = posterior_table(trace).kplus_mode
    khat = int(k_plus_hat)
    idx = np.flatnonzero(trace.k_plus == khat)
    if idx.size == 0:
        raise ValueError("no draws with K+ = %d to identify" % khat)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([trace.seed, 0x1D]))

    feats = trace.features[idx, :khat, :]          # (q, khat, fdim)
    q, _, fdim = feats.shape
    points = feats.reshape(q * khat, fdim)
    mean = points.mean(axis=0)
    sd = points.std(axis=0)
    sd[sd == 0] = 1.0
    if khat == 1:
        labels = np.zeros(q * khat, dtype=np.int64)
        centers_std = np.zeros((1, fdim))  # standardized points center at 0
    else:
        centers_std, labels = _best_kmeans((points - mean) / sd, khat, rng)
    # canonical cluster order: lexicographic in center coordinates
    order = np.lexsort(centers_std.T[::-1])
    rank = np.empty(khat, dtype=np.int64)
    rank[order] = np.arange(khat)
    labels = rank[labels].reshape(q, khat)
    centers = centers_std[order] * sd + mean

    sorted_rows = np.sort(labels, axis=1)
    retained = np.all(sorted_rows == np.arange(khat)[None, :], axis=1)
    if not retained.any():
        raise ValueError("no draw maps to a permutation of 1..%d" % khat)

    lab = labels[retained]                              # (m, khat)
    alloc = trace.alloc[idx[retained]].astype(np.int64)  # (m, n) 0-based
    m, n = alloc.shape
    rel = np.take_along_axis(lab, alloc, axis=1)        # relabeled allocations
    params = np.empty((m, khat, fdim))
    inv = np.argsort(lab, axis=1)                       # cluster -> component slot
    for c in range(khat):
        params[:, c, :] = feats[retained][np.arange(m), inv[:, c], :]

    votes = np.bincount((rel + khat * np.arange(n)[None, :]).ravel(),
                        minlength=n * khat).reshape(n, khat)
    map_partition = votes.argmax(axis=1) + 1            # ties -> smallest label

    return IdentifiedModel(
        k_plus_hat=khat,
        draw_indices=idx,
        retained=retained,
        retention_rate=float(retained.mean()),
        allocations=rel + 1,
        parameters=params,
        centers=centers,
        map_partition=map_partition,
    )


def adjusted_rand_index(a, b):
    """Chance-corrected agreement of two partitions (Hubert-Arabie)."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape or a.size == 0:
        raise ValueError("partitions must be nonempty and of equal length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka, kb = ai.max() + 1, bi.max() + 1
    cont = np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(cont).sum()
    sum_a = comb2(cont.sum(axis=1)).sum()
    sum_b = comb2(cont.sum(axis=0)).sum()
    total = comb2(a.size)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0  # both partitions trivial
    return float((sum_ij - expected) / (max_index - expected))


def acf(series, max_lag):
    """Sample autocorrelation with biased normalization; acf[0] = 1.

    A constant series has no autocorrelation; all entries come back NaN
    as an explicit degenerate marker.
    """
    x = np.asarray(series, dtype=float)
    if x.size <= max_lag:
        raise ValueError("series shorter than max_lag")
    if np.all(x == x[0]):
        # mean subtraction leaves rounding residue, so test constancy exactly
        return np.full(max_lag + 1, np.nan)
    x = x - x.mean()
    c0 = np.dot(x, x)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for lag in range(1, max_lag + 1):
        out[lag] = np.dot(x[:-lag], x[lag:]) / c0
    return out
