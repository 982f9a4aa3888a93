import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynsc import (
    ConnectivityModel,
    DeterministicDsbmConfig,
    Exponential,
    InvalidInputError,
    Uniform,
    exp_smooth_run,
    exp_smooth_update,
    gen_deterministic_sequence,
    sample_snapshot_sequence,
    t_min_regime,
    t_min_weight_bound,
    t_min_weights,
    tuning_profile,
    uniform_smooth,
    validate_weights,
    weighted_smooth,
    weights_of,
)

MODEL = ConnectivityModel.planted_partition(2, 0.4, 0.2)


def _snapshots(t_len=8, n=24, seed=0):
    cfg = DeterministicDsbmConfig(n=n, model=MODEL, t_len=t_len, s=2, n_min=6,
                                  n_max=18, seed=seed)
    seq = gen_deterministic_sequence(cfg)
    return sample_snapshot_sequence(seq, MODEL, seed).snapshots


def _weighted_sum_oracle(snaps, betas):
    # dense loop evaluation of the general weighted sum, independent of the fast path
    out = np.zeros((snaps[0].n, snaps[0].n))
    for k, beta in enumerate(betas):
        out += beta * snaps[len(snaps) - 1 - k].to_dense()
    return out


# ---------------------------------------------------------------------------
# weights_of
# ---------------------------------------------------------------------------

def test_uniform_weights_example():
    w = weights_of(Uniform(4), 6)
    assert np.allclose(w.betas, [0.25, 0.25, 0.25, 0.25, 0, 0, 0])
    assert (w.beta_max, w.c_beta, w.c_beta_prime) == (0.25, 1.0, 1.0)


def test_exponential_weights_example():
    w = weights_of(Exponential(0.5), 2)
    assert np.allclose(w.betas, [0.5, 0.25, 0.25])
    assert (w.beta_max, w.c_beta, w.c_beta_prime) == (0.5, 1.5, 2.0)


def test_uniform_window_exceeding_history_errors():
    with pytest.raises(InvalidInputError):
        weights_of(Uniform(5), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 60), st.one_of(st.integers(1, 30), st.floats(0.01, 1.0)))
def test_weights_sum_to_one(t, param):
    kind = Uniform(param) if isinstance(param, int) else Exponential(param)
    if isinstance(kind, Uniform) and t + 1 < kind.r:
        return
    w = weights_of(kind, t)
    assert abs(w.betas.sum() - 1.0) <= 1e-12
    assert (w.betas >= 0).all()


# ---------------------------------------------------------------------------
# smoothers and the general form
# ---------------------------------------------------------------------------

def test_uniform_smooth_r1_is_last_snapshot():
    snaps = _snapshots()
    assert np.array_equal(uniform_smooth(snaps, 1), snaps[-1].to_dense())


def test_uniform_smooth_complete_plus_empty():
    import dynsc

    n = 6
    complete = dynsc.AdjacencySnapshot.from_dense(np.ones((n, n)) - np.eye(n))
    empty = dynsc.AdjacencySnapshot(n, np.array([], dtype=int), np.array([], dtype=int))
    out = uniform_smooth([empty, complete], 2)
    assert np.allclose(out, (np.ones((n, n)) - np.eye(n)) / 2)


def test_uniform_smooth_matches_weighted_sum_oracle():
    snaps = _snapshots()
    w = weights_of(Uniform(4), len(snaps) - 1)
    assert np.abs(uniform_smooth(snaps, 4) - _weighted_sum_oracle(snaps, w.betas)).max() <= 1e-12


def test_uniform_smooth_truncation_flag():
    snaps = _snapshots(t_len=2)
    with pytest.raises(InvalidInputError):
        uniform_smooth(snaps, 10)
    out = uniform_smooth(snaps, 10, truncate=True)
    assert np.array_equal(out, uniform_smooth(snaps, 3))


def test_exp_update_lambda_one_returns_snapshot():
    snaps = _snapshots(t_len=1)
    state = snaps[0].to_dense()
    out = exp_smooth_update(state, snaps[1], 1.0)
    assert out is state
    assert np.array_equal(out, snaps[1].to_dense())


def test_exp_update_single_step_average():
    snaps = _snapshots(t_len=1)
    state = snaps[0].to_dense()
    exp_smooth_update(state, snaps[1], 0.5)
    assert np.allclose(state, 0.5 * snaps[0].to_dense() + 0.5 * snaps[1].to_dense())


def test_exp_update_dimension_mismatch():
    snaps = _snapshots(t_len=1)
    with pytest.raises(InvalidInputError):
        exp_smooth_update(np.zeros((5, 5)), snaps[0], 0.5)


def test_exp_recursion_equals_weighted_sum_t6():
    # expand the recursion symbolically: beta_k = lam (1-lam)^k, beta_t = (1-lam)^t
    snaps = _snapshots(t_len=6)
    lam = 0.37
    state = exp_smooth_run(snaps, lam)
    betas = [lam * (1 - lam) ** k for k in range(6)] + [(1 - lam) ** 6]
    assert np.abs(state - _weighted_sum_oracle(snaps, betas)).max() <= 1e-12
    w = weights_of(Exponential(lam), 6)
    assert np.abs(state - weighted_smooth(snaps, w.betas)).max() <= 1e-12


def test_smoothed_matrices_are_symmetric_unit_interval_zero_diagonal():
    snaps = _snapshots()
    for out in (uniform_smooth(snaps, 5), exp_smooth_run(snaps, 0.3)):
        assert np.array_equal(out, out.T)
        assert out.min() >= 0.0 and out.max() <= 1.0
        assert np.all(np.diag(out) == 0)


# ---------------------------------------------------------------------------
# validate_weights
# ---------------------------------------------------------------------------

def test_validate_uniform_passes_with_unit_constants():
    for r in (1, 4, 16):
        w = weights_of(Uniform(r), r - 1)
        for eps in (1e-4, 0.03, 0.5):
            rep = validate_weights(w, eps)
            assert rep.all_ok, (r, eps, rep)
            assert rep.beta_max == 1.0 / r and rep.c_beta == 1.0


def test_validate_exponential_passes_after_warmup():
    lam, eps = 0.3, 0.01
    t = math.ceil(max(t_min_weights(lam, eps), t_min_weight_bound(lam)))
    rep = validate_weights(weights_of(Exponential(lam), t), eps)
    assert rep.all_ok
    assert rep.c_beta == 1.5 and rep.c_beta_prime == 2.0


def test_validate_exponential_t0_fails_square_condition():
    # betas = [1]: sum of squares 1 > 1.5 * 0.3
    rep = validate_weights(weights_of(Exponential(0.3), 0), 0.01)
    assert not rep.square_ok
    assert rep.sum_ok
    assert rep.sum_beta_sq == 1.0


def test_validate_residual_weight_exceeds_beta_max_at_certified_horizon():
    # at the certified square/decay horizon the residual (1-lam)^t can top lam
    lam, eps = 0.3, 0.5
    t = math.ceil(t_min_weights(lam, eps))
    rep = validate_weights(weights_of(Exponential(lam), t), eps)
    assert rep.square_ok and rep.decay_ok and rep.sum_ok
    assert not rep.bound_ok
    assert rep.max_beta == (1 - lam) ** t


def test_validate_reports_tightest_constants():
    w = weights_of(Uniform(4), 3)
    rep = validate_weights(w, 0.25)
    assert np.isclose(rep.c_beta_tight, (4 * 0.0625) / 0.25)
    oracle_decay = sum(0.25 * min(1.0, math.sqrt(k * 0.25)) for k in range(4))
    assert np.isclose(rep.c_beta_prime_tight, oracle_decay / math.sqrt(0.25 / 0.25))


def test_validate_custom_claim_override():
    w = weights_of(Uniform(2), 1)
    rep = validate_weights(w, 0.1, claimed=(0.4, 1.0, 1.0))
    assert not rep.bound_ok  # max beta 0.5 > 0.4


# ---------------------------------------------------------------------------
# tuning_profile
# ---------------------------------------------------------------------------

def test_tuning_profile_example():
    prof = tuning_profile(2000, 0.01, 0.0025, 1000.0)
    assert np.isclose(prof.rho_n, math.sqrt(0.025))
    assert prof.optimal_r == 7
    assert np.isclose(prof.optimal_lambda, 0.15811388300841897)


def test_tuning_profile_clamp_branch():
    prof = tuning_profile(1000, 0.5, 0.5, 1000.0)
    assert prof.rho_n == 1.0 and prof.optimal_r == 1
    assert prof.t_min == 0.0


def test_tuning_profile_epsilon_to_zero_limit():
    prof = tuning_profile(1000, 0.05, 1e-8, 500.0)
    assert prof.rho_n < 1e-3
    assert prof.optimal_r > 1000


def test_tuning_rho_monotone_and_dominated_by_pz():
    base = dict(n=1000, alpha_n=0.02, epsilon_n=0.01, nbar_max=400.0)
    ref = tuning_profile(**base)
    assert ref.rho_n <= ref.rho_coarse
    for key, bigger in (("alpha_n", 0.03), ("epsilon_n", 0.02), ("nbar_max", 600.0)):
        mod = dict(base)
        mod[key] = bigger
        assert tuning_profile(**mod).rho_n >= ref.rho_n
    # equality with rho_coarse iff nbar_max = n, on the unclamped branch
    eq = tuning_profile(1000, 0.02, 0.01, 1000.0)
    assert eq.rho_n == eq.rho_coarse
    assert ref.rho_n < ref.rho_coarse


def test_t_min_formulas():
    # theorem horizon: log(rho / (alpha n)) / (2 log(1 - rho))
    rho = 0.2
    expected = math.log(rho / (0.01 * 500)) / (2 * math.log(0.8))
    assert np.isclose(t_min_regime(500, 0.01, rho), expected)
    assert t_min_regime(500, 0.01, 1.0) == 0.0
    # weights horizon at lam=1 is zero
    assert t_min_weights(1.0, 0.3) == 0.0
    assert t_min_weight_bound(1.0) == 0.0
    # residual weight drops below lam exactly after the bound horizon
    lam = 0.2
    t = math.ceil(t_min_weight_bound(lam))
    assert (1 - lam) ** t <= lam < (1 - lam) ** max(t - 2, 0)
