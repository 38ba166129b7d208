import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auxmean.gaussian import (
    AsymmetricMatrixError,
    GaussianMoments,
    NotPSDError,
    gelbrich_w2,
    gelbrich_w2_squared,
    psd_sqrt,
    spectral_decompose,
)


def random_psd(rng, d, rank=None):
    R = rng.standard_normal((d, d if rank is None else rank))
    return R @ R.T


def rel_fro(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class TestSpectralDecompose:
    def test_identity(self):
        dec = spectral_decompose(np.eye(3))
        np.testing.assert_allclose(dec.eigenvalues, [1, 1, 1])
        np.testing.assert_allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(3), atol=1e-12)

    def test_diagonal_sorted_axis_aligned(self):
        dec = spectral_decompose(np.diag([1.0, 4.0]))
        np.testing.assert_array_equal(dec.eigenvalues, [4.0, 1.0])
        np.testing.assert_allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]], atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_reconstruction(self, seed):
        rng = np.random.default_rng(seed)
        M = random_psd(rng, 5)
        dec = spectral_decompose(M)
        assert rel_fro(dec.reconstruct(), M) < 1e-9
        np.testing.assert_allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(5), atol=1e-10)
        assert np.all(np.diff(dec.eigenvalues) <= 0)

    def test_deterministic(self):
        M = random_psd(np.random.default_rng(3), 6)
        a, b = spectral_decompose(M), spectral_decompose(M.copy())
        np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
        np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)

    def test_asymmetric_reports_deviation(self):
        with pytest.raises(AsymmetricMatrixError, match="asymmetric matrix.*5.000e-01"):
            spectral_decompose(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_tiny_asymmetry_tolerated(self):
        M = np.array([[2.0, 1.0], [1.0 + 1e-12, 2.0]])
        np.testing.assert_allclose(spectral_decompose(M).eigenvalues, [3.0, 1.0])


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(4)), np.eye(4))

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([9.0, 4.0])), np.diag([3.0, 2.0]), atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_self_consistency(self, seed):
        M = random_psd(np.random.default_rng(seed), 4)
        root = psd_sqrt(M)
        assert rel_fro(root @ root, M) < 1e-8
        np.testing.assert_array_equal(root, root.T)
        assert np.linalg.eigvalsh(root).min() >= -1e-12

    def test_rank_deficient(self):
        u = np.array([3.0, 4.0]) / 5.0
        M = 2.0 * np.outer(u, u)
        root = psd_sqrt(M)
        np.testing.assert_allclose(root @ root, M, atol=1e-12)

    def test_clamps_roundoff_negative(self):
        M = np.diag([1.0, -1e-12])
        np.testing.assert_allclose(psd_sqrt(M), np.diag([1.0, 0.0]))

    def test_rejects_negative(self):
        with pytest.raises(NotPSDError, match="not PSD"):
            psd_sqrt(np.diag([1.0, -1e-6]))


class TestGaussianMoments:
    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            GaussianMoments(np.zeros(3), np.eye(2))

    def test_clamped_on_construction(self):
        m = GaussianMoments(np.zeros(2), np.diag([1.0, -1e-12]))
        assert np.linalg.eigvalsh(m.cov).min() >= 0.0

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSDError):
            GaussianMoments(np.zeros(2), np.diag([1.0, -0.5]))

    def test_does_not_freeze_caller_arrays(self):
        mean = np.zeros(2)
        GaussianMoments(mean, np.eye(2))
        mean[0] = 1.0

    def test_dict_round_trip(self):
        m = GaussianMoments([1.0, 2.0], [[2.0, 0.5], [0.5, 1.0]])
        back = GaussianMoments.from_dict(m.to_dict())
        np.testing.assert_array_equal(back.mean, m.mean)
        np.testing.assert_array_equal(back.cov, m.cov)


class TestGelbrich:
    def test_identical(self):
        rng = np.random.default_rng(0)
        m = GaussianMoments(rng.standard_normal(4), random_psd(rng, 4))
        assert gelbrich_w2_squared(m, m) < 1e-12

    def test_same_covariance_mean_shift(self):
        rng = np.random.default_rng(1)
        cov = random_psd(rng, 3)
        v = np.array([1.0, -2.0, 0.5])
        value = gelbrich_w2_squared(GaussianMoments(np.zeros(3), cov), GaussianMoments(v, cov))
        assert value == pytest.approx(v @ v, rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_commuting_diagonal_by_hand(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(3, 6))
        a, b = rng.uniform(0, 4, d), rng.uniform(0, 4, d)
        by_hand = sum((np.sqrt(x) - np.sqrt(y)) ** 2 for x, y in zip(a, b))
        value = gelbrich_w2_squared(GaussianMoments(np.zeros(d), np.diag(a)), GaussianMoments(np.zeros(d), np.diag(b)))
        assert value == pytest.approx(by_hand, rel=1e-10, abs=1e-13)
        # rotating both covariances exercises the non-diagonal path
        Q = np.linalg.qr(rng.standard_normal((d, d)))[0]
        rotated = gelbrich_w2_squared(
            GaussianMoments(np.zeros(d), Q @ np.diag(a) @ Q.T),
            GaussianMoments(np.zeros(d), Q @ np.diag(b) @ Q.T),
        )
        assert rotated == pytest.approx(by_hand, rel=1e-9, abs=1e-12)

    def test_scalar_case(self):
        # 1-d Gaussians: (m1-m2)^2 + (s1-s2)^2 with standard deviations s
        value = gelbrich_w2_squared(GaussianMoments([0.0], [[4.0]]), GaussianMoments([1.0], [[9.0]]))
        assert value == pytest.approx(1.0 + 1.0)

    def test_noncommuting_against_trace_formula(self):
        # the textbook trace form, evaluated here independently via scipy's sqrtm
        from scipy.linalg import sqrtm

        rng = np.random.default_rng(11)
        for _ in range(5):
            A, B = random_psd(rng, 4), random_psd(rng, 4)
            rA = sqrtm(A).real
            expected = np.trace(A + B - 2 * sqrtm(rA @ B @ rA).real)
            value = gelbrich_w2_squared(GaussianMoments(np.zeros(4), A), GaussianMoments(np.zeros(4), B))
            assert value == pytest.approx(expected, rel=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            gelbrich_w2_squared(GaussianMoments(np.zeros(2), np.eye(2)), GaussianMoments(np.zeros(3), np.eye(3)))

    def test_rank_one_scaled_pair(self):
        u = np.ones(5) / np.sqrt(5)
        cov = 2.0 * np.outer(u, u)
        r = 1.5
        value = gelbrich_w2_squared(GaussianMoments(np.zeros(5), cov), GaussianMoments(np.zeros(5), r**2 * cov))
        assert value == pytest.approx(2.0 * (r - 1) ** 2, rel=1e-12)


@st.composite
def moment_pairs(draw, count=2):
    d = draw(st.integers(1, 10))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        rank = int(rng.integers(0, d + 1))
        R = rng.standard_normal((d, rank))
        out.append(GaussianMoments(rng.standard_normal(d), R @ R.T))
    return out


@settings(max_examples=100, deadline=None)
@given(moment_pairs())
def test_symmetry(pq):
    p, q = pq
    assert abs(gelbrich_w2_squared(p, q) - gelbrich_w2_squared(q, p)) <= 1e-9 * max(1.0, gelbrich_w2_squared(p, q))


@settings(max_examples=100, deadline=None)
@given(moment_pairs(count=3))
def test_triangle_inequality(pqr):
    p, q, r = pqr
    assert gelbrich_w2(p, r) <= gelbrich_w2(p, q) + gelbrich_w2(q, r) + 1e-7


@settings(max_examples=100, deadline=None)
@given(moment_pairs(), st.integers(0, 2**32 - 1))
def test_mean_shift_additive(pq, seed):
    p, q = pq
    v = np.random.default_rng(seed).standard_normal(p.dim)
    base = gelbrich_w2_squared(GaussianMoments(p.mean, p.cov), GaussianMoments(p.mean, q.cov))
    shifted = gelbrich_w2_squared(GaussianMoments(p.mean, p.cov), GaussianMoments(p.mean + v, q.cov))
    assert shifted == pytest.approx(base + v @ v, rel=1e-10, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(moment_pairs())
def test_identity_of_indiscernibles(pq):
    p, q = pq
    assert gelbrich_w2_squared(p, p) < 1e-9
    if gelbrich_w2_squared(p, q) < 1e-9:
        assert p.allclose(q, atol=1e-4)
