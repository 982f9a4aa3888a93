"""Shared test helpers: independent oracles used to freeze expected values."""

import itertools

import numpy as np

from dynsc import CommunityLabels, ConnectivityModel


def random_symmetric(n: int, rng: np.random.Generator, low=-1.0, high=1.0) -> np.ndarray:
    """Exactly symmetric dense matrix with uniform entries."""
    upper = np.triu(rng.uniform(low, high, size=(n, n)))
    return upper + np.triu(upper, 1).T


def random_nonneg_symmetric(n: int, rng: np.random.Generator, low=0.1, high=1.0) -> np.ndarray:
    return random_symmetric(n, rng, low, high)


def dense_probability_oracle(labels: CommunityLabels, model: ConnectivityModel) -> np.ndarray:
    """Entry-by-entry loop evaluation of P, independent of the vectorized path."""
    n = labels.n
    p = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            p[i, j] = model.alpha * model.b0[labels.labels[i], labels.labels[j]]
    return p


def enumerate_effective_sizes(b0: np.ndarray, n: int, n_min: int, n_max: int):
    """Brute-force Eq.-style extremal block sums over all integer size vectors."""
    k = b0.shape[0]
    best_max, best_min = -np.inf, np.inf
    for sizes in itertools.product(range(n_min, n_max + 1), repeat=k):
        if sum(sizes) != n:
            continue
        sizes = np.asarray(sizes, dtype=float)
        for row in range(k):
            val = float(b0[row] @ sizes)
            best_max = max(best_max, val)
            best_min = min(best_min, val)
    return best_min, best_max


def random_labels(n: int, k: int, rng: np.random.Generator) -> CommunityLabels:
    return CommunityLabels(rng.integers(0, k, size=n), k)
