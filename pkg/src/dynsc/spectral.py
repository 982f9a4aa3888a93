"""Spectral clustering: leading eigenvectors, k-means on their rows, spectral norms.

"Leading" eigenvectors are by default the ``k`` of largest magnitude: the
rank-``k`` structure matrices this targets may have negative eigenvalues for
disassortative kernels, and magnitude selection recovers their column space in
all cases. An ``ordering="algebraic"`` switch is available.

The k-means step uses distance-squared-weighted random seeding plus Lloyd
iterations with restarts. It reports the achieved cost rather than certifying
an approximation ratio.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .errors import EigenSolverError, InvalidInputError
from .sbm import CommunityLabels, check_symmetric
from .util import subseed

DENSE_EIGEN_LIMIT = 512
DENSE_FALLBACK_LIMIT = 4096
_V0_SEED = 0x5EED
_KMEANS_TAG = 77


@dataclass(frozen=True)
class EigenBasis:
    """Selected eigenpairs: ``values[i]`` with orthonormal column ``vectors[:, i]``.

    ``gap`` is the magnitude gap ``|value_k| - |value_{k+1}|`` between the last
    selected and the first discarded eigenvalue (by the active ordering);
    ``gap_degenerate`` flags a numerically vanishing gap.
    """

    values: np.ndarray
    vectors: np.ndarray
    selection: str
    gap: float
    gap_degenerate: bool


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    cost: float
    restarts_used: int
    degenerate: bool


@dataclass(frozen=True)
class SpectralClusteringResult:
    labels: CommunityLabels
    kmeans: KMeansResult
    eigen: EigenBasis

    @property
    def cost(self) -> float:
        return self.kmeans.cost

    @property
    def eigengap(self) -> float:
        return self.eigen.gap


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for col in range(out.shape[1]):
        v = out[:, col]
        j = int(np.argmax(np.abs(v)))
        if v[j] < 0:
            out[:, col] = -v
    return out


def top_k_eigenpairs(m: np.ndarray, k: int, ordering: str = "magnitude") -> EigenBasis:
    """The ``k`` leading eigenpairs of a symmetric matrix.

    Deterministic up to sign, with signs canonicalized. Matrices up to
    ``DENSE_EIGEN_LIMIT`` are decomposed densely; larger ones use a Lanczos
    solver with a fixed starting vector, falling back to the dense path (up to
    ``DENSE_FALLBACK_LIMIT``) on non-convergence.
    """
    if ordering not in ("magnitude", "algebraic"):
        raise InvalidInputError(f"unknown ordering {ordering!r}")
    m = check_symmetric(np.asarray(m, dtype=float))
    n = m.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={n}")

    if n <= DENSE_EIGEN_LIMIT or k + 1 > n - 1:
        values, vectors = np.linalg.eigh(m)
    else:
        which = "LM" if ordering == "magnitude" else "LA"
        v0 = np.random.default_rng(_V0_SEED).standard_normal(n)
        try:
            values, vectors = scipy.sparse.linalg.eigsh(m, k=k + 1, which=which, v0=v0)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            if n <= DENSE_FALLBACK_LIMIT:
                values, vectors = np.linalg.eigh(m)
            else:
                raise EigenSolverError(
                    f"eigensolver did not converge ({len(exc.eigenvalues)} of {k + 1} pairs); "
                    f"residual eigenvalues: {exc.eigenvalues}"
                ) from exc

    keys = np.abs(values) if ordering == "magnitude" else np.asarray(values, dtype=float)
    order = np.argsort(-keys, kind="stable")
    top = order[:k]
    if k < len(values):
        gap = float(keys[top[-1]] - keys[order[k]])
        scale = max(1.0, float(np.abs(values).max()))
        degenerate = gap <= 1e-12 * scale
        if degenerate:
            warnings.warn(f"eigengap {gap:.3e} is numerically degenerate", RuntimeWarning,
                          stacklevel=2)
    else:
        gap = float("inf")
        degenerate = False
    return EigenBasis(
        values=values[top].astype(float),
        vectors=_canonical_signs(vectors[:, top].astype(float)),
        selection=ordering,
        gap=gap,
        gap_degenerate=bool(degenerate),
    )


def _seed_centroids(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-squared-weighted seeding; duplicate locations get zero mass."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))  # fewer than k distinct points
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def _assign(x: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)  # argmin breaks ties by lowest centroid index
    return labels, d2[np.arange(x.shape[0]), labels]


def _kmeans_single(x: np.ndarray, k: int, rng: np.random.Generator,
                   max_iter: int, tol: float):
    """One seeded Lloyd run; returns (labels, centers, cost, degenerate, cost_history)."""
    centers = _seed_centroids(x, k, rng)
    history = []
    for _ in range(max_iter):
        labels, dist = _assign(x, centers)
        history.append(float(dist.sum()))
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centers[j] = x[labels == j].mean(axis=0)
            else:
                # re-seed an empty cluster at the point farthest from its centroid
                new_centers[j] = x[int(np.argmax(dist))]
        movement = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if movement < tol:
            break
    labels, dist = _assign(x, centers)
    cost = float(dist.sum())
    history.append(cost)
    degenerate = bool((np.bincount(labels, minlength=k) == 0).any())
    return labels, centers, cost, degenerate, history


def kmeans(points: np.ndarray, k: int, restarts: int = 20, max_iter: int = 300,
           tol: float = 1e-9, seed: int = 0) -> KMeansResult:
    """Best of ``restarts`` seeded Lloyd runs on ``points`` (n rows).

    Assignment ties break toward the lowest centroid index; a cluster left
    empty after an iteration is re-seeded at the farthest point rather than
    crashing. Restarts stop early once a zero-cost solution is found. The
    reported cost is recomputed from the returned labels and centroids.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise InvalidInputError("points must be a 2-d array")
    if not 1 <= k <= x.shape[0]:
        raise InvalidInputError(f"need 1 <= k <= n, got k={k}, n={x.shape[0]}")
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    best = None
    used = 0
    for ridx in range(restarts):
        rng = np.random.default_rng(subseed(seed, _KMEANS_TAG, ridx))
        labels, centers, cost, degenerate, _ = _kmeans_single(x, k, rng, max_iter, tol)
        used += 1
        if best is None or cost < best[2]:
            best = (labels, centers, cost, degenerate)
        if best[2] == 0.0:
            break
    labels, centers, cost, degenerate = best
    return KMeansResult(labels=labels, centroids=centers, cost=cost,
                        restarts_used=used, degenerate=degenerate)


def spectral_cluster(m: np.ndarray, k: int, *, ordering: str = "magnitude",
                     restarts: int = 20, max_iter: int = 300, tol: float = 1e-9,
                     seed: int = 0) -> SpectralClusteringResult:
    """Cluster the rows of the k leading eigenvectors of ``m``.

    Rows are fed to k-means raw, without row normalization.
    """
    basis = top_k_eigenpairs(m, k, ordering=ordering)
    km = kmeans(basis.vectors, k, restarts=restarts, max_iter=max_iter, tol=tol, seed=seed)
    labels = CommunityLabels(km.labels, k)
    return SpectralClusteringResult(labels=labels, kmeans=km, eigen=basis)


def spectral_norm(m: np.ndarray, tol: float = 1e-6) -> float:
    """Operator 2-norm (largest absolute eigenvalue) of a symmetric matrix.

    Small matrices use a dense decomposition; larger ones a Lanczos iteration
    at relative tolerance ``tol``, with a dense fallback up to
    ``DENSE_FALLBACK_LIMIT`` on non-convergence.
    """
    m = check_symmetric(np.asarray(m, dtype=float))
    n = m.shape[0]
    if n == 0:
        return 0.0
    if n <= DENSE_EIGEN_LIMIT:
        return float(np.abs(np.linalg.eigvalsh(m)).max())
    if not m.any():
        return 0.0
    v0 = np.random.default_rng(_V0_SEED).standard_normal(n)
    try:
        values = scipy.sparse.linalg.eigsh(m, k=1, which="LM", v0=v0, tol=tol,
                                           return_eigenvectors=False)
        return float(np.abs(values).max())
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        if n <= DENSE_FALLBACK_LIMIT:
            return float(np.abs(np.linalg.eigvalsh(m)).max())
        raise EigenSolverError("spectral norm iteration did not converge") from exc
