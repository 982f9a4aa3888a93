"""Clustering quality measures.

The misclassification measure minimizes, over relabelings of the predicted
communities, the count of nonzero entries of the one-hot difference divided by
``n``; each misclassified node contributes two nonzero entries, so the value
lies in ``[0, 2]`` and equals twice the misclassified-node fraction. The
minimum is taken exactly, via an optimal assignment on the confusion matrix
(greedy matching can be off by a community swap).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError
from .sbm import CommunityLabels


@dataclass(frozen=True)
class ErrorReport:
    """Misclassification report: ``e_value = 2 * misclassified_fraction``.

    ``best_permutation[p]`` is the truth label matched to predicted label ``p``.
    """

    e_value: float
    misclassified_fraction: float
    best_permutation: np.ndarray


def _check_pair(pred: CommunityLabels, truth: CommunityLabels) -> int:
    if pred.n != truth.n:
        raise InvalidInputError(f"label lengths differ: {pred.n} vs {truth.n}")
    if pred.k != truth.k:
        raise InvalidInputError(f"community counts differ: {pred.k} vs {truth.k}")
    return pred.k


def confusion_matrix(pred: CommunityLabels, truth: CommunityLabels) -> np.ndarray:
    """K-by-K counts: entry ``(p, t)`` is the number of nodes with pred p, truth t."""
    k = _check_pair(pred, truth)
    idx = pred.labels * k + truth.labels
    return np.bincount(idx, minlength=k * k).reshape(k, k)


def misclassification_error(pred: CommunityLabels, truth: CommunityLabels) -> ErrorReport:
    """Exact minimum over community relabelings of the one-hot discrepancy.

    Solved as an optimal assignment maximizing the matched count on the
    confusion matrix. Predicted labels that are unused simply give empty
    confusion rows; the assignment stays well-posed.
    """
    conf = confusion_matrix(pred, truth)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    matched = int(conf[rows, cols].sum())
    n = pred.n
    perm = np.empty(pred.k, dtype=np.int64)
    perm[rows] = cols
    frac = (n - matched) / n
    return ErrorReport(e_value=2.0 * frac, misclassified_fraction=frac, best_permutation=perm)


def misclassification_error_bruteforce(pred: CommunityLabels,
                                       truth: CommunityLabels) -> ErrorReport:
    """Exhaustive-permutation evaluation of the same minimum (small K only).

    Independent of the assignment solver; used as its cross-check oracle.
    """
    k = _check_pair(pred, truth)
    if k > 8:
        raise InvalidInputError("brute force limited to k <= 8")
    conf = confusion_matrix(pred, truth)
    best_matched = -1
    best_perm = None
    for perm in itertools.permutations(range(k)):
        matched = sum(conf[p, perm[p]] for p in range(k))
        if matched > best_matched:
            best_matched = matched
            best_perm = perm
    frac = (pred.n - best_matched) / pred.n
    return ErrorReport(e_value=2.0 * frac, misclassified_fraction=frac,
                       best_permutation=np.array(best_perm, dtype=np.int64))


def adjusted_rand_index(pred: CommunityLabels, truth: CommunityLabels) -> float:
    """Pair-counting partition agreement, corrected for chance.

    1 for identical partitions, about 0 in expectation under independence.
    Two single-cluster partitions are identical, hence 1 by convention.
    """
    if pred.n != truth.n:
        raise InvalidInputError(f"label lengths differ: {pred.n} vs {truth.n}")
    n = pred.n
    if n < 2:
        raise InvalidInputError("adjusted Rand index needs at least 2 nodes")
    kp = max(pred.k, int(pred.labels.max()) + 1)
    kt = max(truth.k, int(truth.labels.max()) + 1)
    conf = np.bincount(pred.labels * kt + truth.labels, minlength=kp * kt).reshape(kp, kt)

    def comb2(a: np.ndarray) -> int:
        a = a.astype(object)  # python ints: no overflow for large n
        return int((a * (a - 1) // 2).sum())

    index = comb2(conf)
    sum_rows = comb2(conf.sum(axis=1))
    sum_cols = comb2(conf.sum(axis=0))
    total = n * (n - 1) // 2
    expected = sum_rows * sum_cols / total
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0  # both partitions trivial (single cluster or all singletons)
    return float((index - expected) / (max_index - expected))
