"""Brute-force oracles shared across the test suite.

These enumerate small combinatorial objects directly so the closed-form
code paths can be checked against first principles.
"""

import numpy as np
from scipy.special import gammaln


def set_partitions(n):
    """All set partitions of {0..n-1} as lists of blocks (lists of ints)."""
    if n == 0:
        yield []
        return
    for part in set_partitions(n - 1):
        i = n - 1
        for j in range(len(part)):
            yield part[:j] + [part[j] + [i]] + part[j + 1:]
        yield part + [[i]]


def compositions(n, k):
    """All ordered k-tuples of positive integers summing to n."""
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in compositions(n - first, k - 1):
            yield (first,) + rest


def brute_log_c(n, k, gamma=None, dpm=False):
    """Composition sum: C_{ n,k} = sum over compositions of prod w(N_j)."""
    terms = []
    for comp in compositions(n, k):
        sizes = np.asarray(comp, dtype=float)
        if dpm:
            terms.append(-np.sum(np.log(sizes)))
        else:
            terms.append(np.sum(gammaln(sizes + gamma) - gammaln(sizes + 1.0)))
    m = max(terms)
    return m + np.log(np.sum(np.exp(np.asarray(terms) - m)))


def allocation_vectors(n, k):
    """All k^n allocation vectors of n items to k labeled components."""
    idx = np.indices((k,) * n).reshape(n, -1).T
    return idx  # rows are allocation vectors with entries 0..k-1


def pair_count_ari(a, b):
    """Adjusted Rand index straight from the O(n^2) pair definition."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    same_a = a[:, None] == a[None, :]
    same_b = b[:, None] == b[None, :]
    iu = np.triu_indices(n, k=1)
    n11 = np.sum(same_a[iu] & same_b[iu])
    n00 = np.sum(~same_a[iu] & ~same_b[iu])
    n10 = np.sum(same_a[iu] & ~same_b[iu])
    n01 = np.sum(~same_a[iu] & same_b[iu])
    total = n11 + n00 + n10 + n01
    expected = (n11 + n10) * (n11 + n01) / total
    maximum = 0.5 * ((n11 + n10) + (n11 + n01))
    if maximum == expected:
        return 1.0
    return (n11 - expected) / (maximum - expected)
