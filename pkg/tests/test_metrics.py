import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats as scipy_stats
from skimage.metrics import structural_similarity as skimage_ssim

from conftest import random_map
from gridlab.errors import InputError, MetricUndefinedError
from gridlab.importance import ImportanceMap
from gridlab.metrics import (
    SSIM_C1,
    SSIM_C2,
    compute_all,
    dice,
    downsample,
    jaccard,
    kl_divergence,
    spearman,
    ssim,
)


# --- spearman -----------------------------------------------------------------

def test_spearman_self_is_one():
    m = ImportanceMap(np.array([[0.1, 0.4], [0.9, 0.2]]))
    score = spearman(m, m)
    assert score.raw == 1.0 and score.similarity01 == 1.0


def test_spearman_reversal_is_minus_one():
    m = np.array([[0.1, 0.4], [0.9, 0.2]])
    score = spearman(m, 1.0 - m)
    assert score.raw == -1.0 and score.similarity01 == 0.0


def test_spearman_rank_agreement_ignores_scale():
    # same ranks, different values
    assert spearman(np.array([[0.0, 1.0]]), np.array([[0.2, 0.9]])).raw == 1.0


def test_spearman_constant_map_undefined():
    with pytest.raises(MetricUndefinedError):
        spearman(np.full((4, 4), 0.5), random_map(np.random.default_rng(0), 4, 4))


def test_spearman_matches_scipy_oracle():
    rng = np.random.default_rng(8)
    for _ in range(20):
        a, b = random_map(rng), random_map(rng)
        want = scipy_stats.spearmanr(a.ravel(), b.ravel()).statistic
        got = spearman(a, b).raw
        assert abs(got - want) < 1e-12


def test_spearman_invariant_under_monotone_transform():
    rng = np.random.default_rng(9)
    a, b = random_map(rng), random_map(rng)
    base = spearman(a, b).raw
    transformed = spearman(np.exp(2.0 * a), b).raw  # strictly monotone per-map
    assert abs(base - transformed) < 1e-12


# --- ssim ----------------------------------------------------------------------

def test_ssim_self_is_one():
    m = random_map(np.random.default_rng(1), 32, 32)
    assert ssim(m, m).raw == 1.0


def test_ssim_zeros_vs_ones_floor():
    a = np.zeros((64, 64))
    b = np.ones((64, 64))
    score = ssim(a, b)
    # closed form with mu=0/1, sigma=0: C1*C2 / ((1+C1)*C2)
    expected = (SSIM_C1 * SSIM_C2) / ((1.0 + SSIM_C1) * SSIM_C2)
    assert abs(score.raw - expected) < 1e-12
    assert score.raw < 0.01


def test_ssim_luminance_shift_penalized():
    rng = np.random.default_rng(2)
    a = random_map(rng, 32, 32) * 0.8
    b = np.clip(a + 0.1, 0.0, 1.0)
    assert ssim(a, b).raw < 1.0


def test_ssim_matches_skimage_oracle():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a, b = random_map(rng, 40, 40), random_map(rng, 40, 40)
        want = skimage_ssim(
            a, b, win_size=11, gaussian_weights=True, sigma=1.5,
            use_sample_covariance=False, data_range=1.0, K1=0.01, K2=0.03,
        )
        got = ssim(a, b).raw
        assert abs(got - want) < 1e-7


def test_ssim_small_map_error_suggests_global():
    a = np.zeros((8, 8))
    with pytest.raises(InputError, match="global"):
        ssim(a, a)
    assert ssim(a, a, global_window=True).raw == 1.0


def test_ssim_similarity_clamped_to_unit_interval():
    a = np.zeros((64, 64))
    b = np.ones((64, 64))
    s = ssim(a, b)
    assert 0.0 <= s.similarity01 <= 1.0


# --- dice / jaccard ---------------------------------------------------------------

def test_dice_jaccard_self():
    m = random_map(np.random.default_rng(4))
    assert dice(m, m).raw == 1.0
    assert jaccard(m, m).raw == 1.0


def test_dice_jaccard_disjoint_supports():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    assert dice(a, b).raw == 0.0
    assert jaccard(a, b).raw == 0.0


def test_dice_jaccard_fuzzy_example():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.5, 0.5]])
    assert dice(a, b).raw == pytest.approx(0.5)  # 2 * 0.5 / 2
    assert jaccard(a, b).raw == pytest.approx(1.0 / 3.0)  # 0.5 / 1.5


def test_dice_jaccard_empty_maps_are_identical():
    z = np.zeros((4, 4))
    assert dice(z, z).raw == 1.0
    assert jaccard(z, z).raw == 1.0


def test_dice_jaccard_algebraic_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = random_map(rng), random_map(rng)
        d, j = dice(a, b).raw, jaccard(a, b).raw
        assert d >= j
        assert abs(d - 2 * j / (1 + j)) < 1e-9


def test_dice_binarize_recovers_set_form():
    a = np.array([[0.9, 0.1], [0.7, 0.2]])
    b = np.array([[0.8, 0.6], [0.1, 0.05]])
    # sets at 0.5: a = {0,2}, b = {0,1} -> intersection 1, sizes 2+2
    assert dice(a, b, binarize=0.5).raw == pytest.approx(0.5)
    assert jaccard(a, b, binarize=0.5).raw == pytest.approx(1.0 / 3.0)


# --- kl ---------------------------------------------------------------------------

def test_kl_self_is_zero():
    m = random_map(np.random.default_rng(6))
    score = kl_divergence(m, m)
    assert score.raw <= 1e-9 and score.similarity01 == pytest.approx(1.0)


def test_kl_is_asymmetric():
    a = np.array([[1.0, 0.0, 0.0, 0.0]])
    b = np.full((1, 4), 0.25)
    assert kl_divergence(a, b).raw != kl_divergence(b, a).raw


def test_kl_scale_invariance():
    # different uniform levels normalize to the same distribution
    assert kl_divergence(np.full((4, 4), 0.2), np.full((4, 4), 0.9)).raw == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(7)
    a = random_map(rng)
    assert kl_divergence(a, np.clip(a, 0, 1)).raw == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, (6, 6), elements=st.floats(0, 1)),
    arrays(np.float64, (6, 6), elements=st.floats(0, 1)),
)
def test_kl_nonnegative_and_similarity_in_range(a, b):
    s = kl_divergence(a, b)
    assert s.raw >= 0.0
    assert 0.0 <= s.similarity01 <= 1.0


# --- batch entry point ---------------------------------------------------------------

def test_compute_all_reports_five_metrics():
    rng = np.random.default_rng(10)
    a, b = random_map(rng), random_map(rng)
    out = compute_all(a, b)
    assert set(out) == {"spearman", "ssim", "dice", "jaccard", "kl"}
    assert all(s is not None and 0.0 <= s.similarity01 <= 1.0 for s in out.values())


def test_compute_all_flags_undefined_spearman():
    const = np.full((24, 24), 0.3)
    out = compute_all(const, const)
    assert out["spearman"] is None
    assert out["dice"].raw == 1.0


def test_compute_all_with_downsampling():
    rng = np.random.default_rng(11)
    a, b = random_map(rng, 48, 48), random_map(rng, 48, 48)
    out = compute_all(a, b, scale=2)
    assert all(v is not None for v in out.values())


def test_downsample_block_means():
    m = np.arange(16, dtype=float).reshape(4, 4) / 16.0
    d = downsample(m, 2)
    assert d.values.shape == (2, 2)
    assert d.values[0, 0] == pytest.approx(m[:2, :2].mean())


def test_dimension_mismatch_rejected():
    with pytest.raises(InputError):
        dice(np.zeros((2, 2)), np.zeros((3, 3)))
