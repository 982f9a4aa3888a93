import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    dense_probability_oracle,
    enumerate_effective_sizes,
    random_labels,
    random_symmetric,
)
from dynsc import (
    AdjacencySnapshot,
    CommunityLabels,
    ConnectivityModel,
    InvalidInputError,
    ZeroDegreeError,
    build_probability_matrix,
    degrees,
    effective_sizes,
    expected_degrees,
    load_matrix_csv,
    load_snapshot,
    normalized_laplacian,
    sample_adjacency,
    save_matrix_csv,
    save_snapshot,
)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

def test_labels_validation():
    with pytest.raises(InvalidInputError):
        CommunityLabels([0, 1, 2], 2)
    with pytest.raises(InvalidInputError):
        CommunityLabels([0, -1], 2)
    lab = CommunityLabels([0, 0, 1], 2)
    assert lab.n == 3
    assert lab.sizes().tolist() == [2, 1]
    assert lab.one_hot().tolist() == [[1, 0], [1, 0], [0, 1]]


def test_model_validation():
    with pytest.raises(InvalidInputError):
        ConnectivityModel.planted_partition(2, 0.0, 0.3)
    with pytest.raises(InvalidInputError):
        ConnectivityModel.planted_partition(2, 0.5, 1.0)
    with pytest.raises(InvalidInputError):
        ConnectivityModel.from_kernel(2, 0.5, np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(InvalidInputError):
        ConnectivityModel.from_kernel(2, 0.5, np.array([[1.2, 0.2], [0.2, 1.0]]))
    m = ConnectivityModel.planted_partition(3, 0.4, 0.25)
    assert m.b0[0, 0] == 1.0 and m.b0[0, 1] == 0.25
    assert m.gamma == 0.75


def test_model_gamma_general_kernel():
    b0 = np.array([[1.0, 0.2], [0.2, 0.6]])
    m = ConnectivityModel.from_kernel(2, 0.5, b0)
    assert np.isclose(m.gamma, np.linalg.eigvalsh(b0)[0])


def test_snapshot_validation():
    with pytest.raises(InvalidInputError):
        AdjacencySnapshot(3, np.array([1]), np.array([1]))  # self-loop
    with pytest.raises(InvalidInputError):
        AdjacencySnapshot(3, np.array([0, 0]), np.array([1, 1]))  # duplicate
    snap = AdjacencySnapshot(3, np.array([0, 1]), np.array([1, 2]))
    dense = snap.to_dense()
    assert np.array_equal(dense, dense.T)
    assert np.all(np.diag(dense) == 0)
    assert AdjacencySnapshot.from_dense(dense).edge_count == 2


# ---------------------------------------------------------------------------
# build_probability_matrix
# ---------------------------------------------------------------------------

def test_probability_matrix_planted_example():
    lab = CommunityLabels([0, 0, 1, 1], 2)
    model = ConnectivityModel.planted_partition(2, 0.5, 0.2)
    p = build_probability_matrix(lab, model)
    expected = np.array([
        [0.5, 0.5, 0.1, 0.1],
        [0.5, 0.5, 0.1, 0.1],
        [0.1, 0.1, 0.5, 0.5],
        [0.1, 0.1, 0.5, 0.5],
    ])
    assert np.allclose(p, expected)
    assert np.array_equal(p, p.T)


def test_probability_matrix_general_kernel_example():
    lab = CommunityLabels([0, 1], 2)
    model = ConnectivityModel.from_kernel(2, 0.1, np.array([[1.0, 0.3], [0.3, 0.8]]))
    p = build_probability_matrix(lab, model)
    assert np.allclose(p, [[0.1, 0.03], [0.03, 0.08]])


def test_probability_matrix_alpha_small_limit():
    lab = CommunityLabels([0, 1, 0], 2)
    model = ConnectivityModel.planted_partition(2, 1e-300, 0.2)
    assert np.allclose(build_probability_matrix(lab, model), 0.0, atol=1e-299)


def test_probability_matrix_matches_loop_oracle():
    rng = np.random.default_rng(3)
    lab = random_labels(17, 3, rng)
    b0 = np.array([[1.0, 0.3, 0.1], [0.3, 0.9, 0.2], [0.1, 0.2, 0.7]])
    model = ConnectivityModel.from_kernel(3, 0.4, b0)
    assert np.array_equal(build_probability_matrix(lab, model),
                          dense_probability_oracle(lab, model))


def test_probability_matrix_label_mismatch():
    with pytest.raises(InvalidInputError):
        build_probability_matrix(CommunityLabels([0, 1], 2),
                                 ConnectivityModel.planted_partition(3, 0.5, 0.2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 4), st.integers(4, 20))
def test_probability_matrix_permutation_equivariant(seed, k, n):
    rng = np.random.default_rng(seed)
    lab = random_labels(n, k, rng)
    model = ConnectivityModel.planted_partition(k, 0.6, 0.2)
    p = build_probability_matrix(lab, model)
    pi = rng.permutation(n)
    permuted = CommunityLabels(lab.labels[pi], k)
    assert np.array_equal(build_probability_matrix(permuted, model), p[np.ix_(pi, pi)])


# ---------------------------------------------------------------------------
# sample_adjacency
# ---------------------------------------------------------------------------

def test_sample_zero_matrix_gives_empty_graph():
    snap = sample_adjacency(np.zeros((6, 6)), 0)
    assert snap.edge_count == 0


def test_sample_probability_one_gives_complete_graph():
    p = np.ones((5, 5))
    snap = sample_adjacency(p, 0)
    assert snap.edge_count == 5 * 4 // 2


def test_sample_rejects_bad_probabilities():
    with pytest.raises(InvalidInputError):
        sample_adjacency(np.full((3, 3), 1.5), 0)


def test_sample_edge_count_binomial_oracle():
    # oracle: total edges ~ Binomial(n(n-1)/2, p); assert within 4 sd of the mean
    n, p = 200, 0.1
    pairs = n * (n - 1) // 2
    mean = pairs * p
    sd = np.sqrt(pairs * p * (1 - p))
    snap = sample_adjacency(np.full((n, n), p), 42)
    assert abs(snap.edge_count - mean) <= 4 * sd


def test_sample_determinism():
    p = np.full((30, 30), 0.3)
    a = sample_adjacency(p, 7)
    b = sample_adjacency(p, 7)
    assert np.array_equal(a.rows, b.rows) and np.array_equal(a.cols, b.cols)


def test_sampling_unbiasedness():
    # empirical edge frequency approaches P - diag(P), per entry within 4 sd
    rng = np.random.default_rng(5)
    n, m = 25, 400
    p = random_symmetric(n, rng, 0.05, 0.6)
    counts = np.zeros((n, n))
    for trial in range(m):
        counts += sample_adjacency(p, trial).to_dense()
    freq = counts / m
    target = p - np.diag(np.diag(p))
    bound = 4 * np.sqrt(target * (1 - target) / m) + 1e-12
    off = ~np.eye(n, dtype=bool)
    assert (np.abs(freq - target)[off] <= bound[off]).all()
    assert np.all(np.diag(freq) == 0)


# ---------------------------------------------------------------------------
# degrees
# ---------------------------------------------------------------------------

def test_degrees_zero_and_complete():
    assert degrees(np.zeros((4, 4))).tolist() == [0, 0, 0, 0]
    complete = AdjacencySnapshot.from_dense(np.ones((4, 4)) - np.eye(4))
    assert degrees(complete).tolist() == [3, 3, 3, 3]


def test_degrees_matches_rowsum_oracle():
    rng = np.random.default_rng(11)
    m = random_symmetric(13, rng)
    oracle = np.array([sum(m[i][j] for j in range(13)) for i in range(13)])
    assert np.allclose(degrees(m), oracle, atol=1e-12)


def test_degrees_integer_valued_for_snapshots():
    snap = sample_adjacency(np.full((20, 20), 0.4), 3)
    d = degrees(snap)
    assert np.array_equal(d, np.round(d))


# ---------------------------------------------------------------------------
# normalized_laplacian
# ---------------------------------------------------------------------------

def test_laplacian_complete_graph_n3():
    # hand computation: degrees 2, L = (J - I) / 2, eigenvalues {1, -1/2, -1/2}
    a = np.ones((3, 3)) - np.eye(3)
    lap = normalized_laplacian(a)
    assert np.allclose(lap, (np.ones((3, 3)) - np.eye(3)) / 2)
    assert np.allclose(np.sort(np.linalg.eigvalsh(lap)), [-0.5, -0.5, 1.0])


def test_laplacian_constant_matrix_rank_one():
    # hand computation: constant c on all pairs incl. diagonal -> L = M / (nc)
    n, c = 5, 0.4
    m = np.full((n, n), c)
    lap = normalized_laplacian(m)
    assert np.allclose(lap, m / (n * c))
    vals = np.sort(np.linalg.eigvalsh(lap))
    assert np.allclose(vals, [0, 0, 0, 0, 1], atol=1e-12)


def test_laplacian_single_edge():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(normalized_laplacian(a), a)


def test_laplacian_zero_degree_policies():
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1.0
    with pytest.raises(ZeroDegreeError):
        normalized_laplacian(a)
    lap = normalized_laplacian(a, zero_degree="zero-row")
    assert np.all(lap[2] == 0) and np.all(lap[:, 2] == 0)
    assert np.isfinite(lap).all()  # NaN never emitted
    assert lap[0, 1] == 1.0


def test_laplacian_eigenvalues_within_unit_interval():
    rng = np.random.default_rng(2)
    a = (random_symmetric(40, rng, 0, 1) > 0.6).astype(float)
    np.fill_diagonal(a, 0)
    a = np.triu(a, 1) + np.triu(a, 1).T
    lap = normalized_laplacian(a, zero_degree="zero-row")
    vals = np.linalg.eigvalsh(lap)
    assert vals.min() >= -1 - 1e-9 and vals.max() <= 1 + 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(1e-6, 1e6))
def test_laplacian_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    m = random_symmetric(8, rng, 0.1, 1.0)
    assert np.allclose(normalized_laplacian(c * m), normalized_laplacian(m),
                       atol=1e-12, rtol=1e-9)


def test_laplacian_of_planted_p_has_rank_k():
    # equal-sized planted partition, tau < 1: exactly k nonzero eigenvalues
    for k, n in ((2, 100), (5, 200)):
        lab = CommunityLabels(np.arange(n) % k, k)
        model = ConnectivityModel.planted_partition(k, 0.3, 0.4)
        lap = normalized_laplacian(build_probability_matrix(lab, model))
        vals = np.abs(np.linalg.eigvalsh(lap))
        assert int((vals > 1e-8).sum()) == k


# ---------------------------------------------------------------------------
# effective_sizes
# ---------------------------------------------------------------------------

def test_effective_sizes_planted_balanced_tau_zero():
    model = ConnectivityModel.planted_partition(4, 0.5, 0.0)
    prof = effective_sizes(model, 100, 25, 25)
    assert prof.nbar_max == 25 and prof.nbar_min == 25
    assert prof.mu_b == 1.0 and prof.gamma == 1.0
    assert prof.n_prime_max == 25


def test_effective_sizes_planted_closed_form():
    # (1 - tau) * n_max + n * tau when a community of size n_max is admissible
    model = ConnectivityModel.planted_partition(3, 0.5, 0.3)
    prof = effective_sizes(model, 300, 80, 120)
    assert np.isclose(prof.nbar_max, 0.7 * 120 + 300 * 0.3)
    assert np.isclose(prof.nbar_min, 0.7 * 80 + 300 * 0.3)


def test_effective_sizes_tau_near_one_approaches_n():
    n = 400
    model = ConnectivityModel.planted_partition(4, 0.5, 0.95)
    prof = effective_sizes(model, n, 100, 100)
    assert prof.nbar_max >= 0.95 * n
    assert np.isclose(prof.nbar_max, 0.05 * 100 + 0.95 * n)


def test_effective_sizes_identity_kernel_example():
    model = ConnectivityModel.from_kernel(2, 0.5, np.eye(2))
    prof = effective_sizes(model, 10, 4, 6)
    assert prof.nbar_max == 6.0 and prof.nbar_min == 4.0


def test_effective_sizes_matches_enumeration_oracle():
    rng = np.random.default_rng(17)
    for _ in range(15):
        k = int(rng.integers(2, 4))
        upper = np.triu(rng.uniform(0, 1, size=(k, k)))
        b0 = upper + np.triu(upper, 1).T
        n = int(rng.integers(3 * k, 6 * k))
        n_min = max(1, n // k - 2)
        n_max = n // k + 2
        if k * n_min > n or k * n_max < n:
            continue
        model = ConnectivityModel.from_kernel(k, 0.5, b0)
        prof = effective_sizes(model, n, n_min, n_max)
        lo, hi = enumerate_effective_sizes(b0, n, n_min, n_max)
        assert np.isclose(prof.nbar_max, hi)
        assert np.isclose(prof.nbar_min, lo)


def test_effective_sizes_infeasible_bounds():
    model = ConnectivityModel.planted_partition(3, 0.5, 0.2)
    with pytest.raises(InvalidInputError):
        effective_sizes(model, 100, 40, 45)  # 3*40 > 100
    with pytest.raises(InvalidInputError):
        effective_sizes(model, 100, 10, 20)  # 3*20 < 100


# ---------------------------------------------------------------------------
# expected degrees
# ---------------------------------------------------------------------------

def test_expected_degrees_match_dense():
    rng = np.random.default_rng(23)
    lab = random_labels(40, 3, rng)
    model = ConnectivityModel.planted_partition(3, 0.2, 0.35)
    p = build_probability_matrix(lab, model)
    assert np.allclose(expected_degrees(lab, model), p.sum(axis=1) - np.diag(p),
                       atol=1e-12)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_snapshot_roundtrip(tmp_path):
    snap = sample_adjacency(np.full((25, 25), 0.3), 9)
    path = tmp_path / "snap.txt"
    save_snapshot(snap, path)
    assert path.read_text().startswith("n=25\n")
    back = load_snapshot(path)
    assert back.n == 25
    assert np.array_equal(back.rows, snap.rows) and np.array_equal(back.cols, snap.cols)


def test_matrix_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    m = random_symmetric(7, rng)
    path = tmp_path / "m.csv"
    save_matrix_csv(m, path)
    assert np.array_equal(load_matrix_csv(path), m)
