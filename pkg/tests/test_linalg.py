"""Matrix layer: definiteness, Fischer gaps, interpolation, principal minors."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import rand_spd

from gclab.errors import (
    DimensionTooLarge,
    InvalidIndexSet,
    NotPositiveDefinite,
    ShapeMismatch,
)
from gclab.linalg import (
    BlockStructure,
    CovarianceBlocks,
    SymMatrix,
    det_interp_curve,
    det_sym,
    fischer_gap,
    fischer_is_equality,
    interpolate,
    is_pd,
    is_psd,
    logdet_pd,
    minor_expansion,
    minor_factorization,
    spd_inverse,
    sqrt_psd,
)


class TestDefiniteness:
    def test_pd_accepts_identity(self):
        assert is_pd(np.eye(3))

    def test_pd_rejects_indefinite(self):
        assert not is_pd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_pd_scale_invariant(self):
        m = np.array([[2.0, 0.5], [0.5, 2.0]])
        assert is_pd(m) and is_pd(1e-8 * m) and is_pd(1e8 * m)

    def test_psd_accepts_rank_deficient(self):
        v = np.array([[1.0], [2.0]])
        assert is_psd(v @ v.T)
        assert not is_pd(v @ v.T)

    def test_psd_rejects_negative_direction(self):
        assert not is_psd(np.diag([1.0, -1e-3]))

    def test_symmetry_enforced(self):
        with pytest.raises(ShapeMismatch):
            is_pd(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_random_spd_classify(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            assert is_pd(rand_spd(rng, n))


class TestDeterminants:
    def test_logdet_matches_slogdet(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            m = rand_spd(rng, int(rng.integers(1, 13)))
            assert_allclose(logdet_pd(m), np.linalg.slogdet(m)[1], rtol=1e-11)

    def test_logdet_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            logdet_pd(np.diag([1.0, -1.0]))

    def test_det_sym_signed(self):
        assert_allclose(det_sym(np.diag([2.0, -3.0])), -6.0, rtol=1e-12)

    def test_sqrt_psd_squares_back(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            m = rand_spd(rng, 5)
            r = sqrt_psd(m)
            assert_allclose(r @ r, m, rtol=0, atol=1e-10 * np.abs(m).max())

    def test_spd_inverse(self):
        rng = np.random.default_rng(7)
        m = rand_spd(rng, 6)
        assert_allclose(spd_inverse(m) @ m, np.eye(6), rtol=0, atol=1e-9)


class TestFischer:
    def test_frozen_two_by_two(self):
        det_full, det_product = fischer_gap(np.array([[2.0, 0.5], [0.5, 2.0]]), 1)
        assert_allclose(det_full, 3.75, rtol=1e-14)
        assert_allclose(det_product, 4.0, rtol=1e-14)
        assert not fischer_is_equality(det_full, det_product)

    def test_block_diagonal_is_equality(self):
        m = np.diag([2.0, 3.0, 4.0])
        det_full, det_product = fischer_gap(m, 2)
        assert fischer_is_equality(det_full, det_product)

    def test_inequality_on_random_pd(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            m = rand_spd(rng, n)
            split = int(rng.integers(1, n))
            det_full, det_product = fischer_gap(m, split)
            assert det_full <= det_product * (1 + 1e-10)

    def test_equality_iff_off_block_zero(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 7))
            split = int(rng.integers(1, n))
            m = rand_spd(rng, n)
            zeroed = np.array(m)
            zeroed[:split, split:] = 0.0
            zeroed[split:, :split] = 0.0
            assert fischer_is_equality(*fischer_gap(zeroed, split))
            off_norm = np.abs(m[:split, split:]).max()
            if off_norm > 1e-2:
                assert not fischer_is_equality(*fischer_gap(m, split))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            fischer_gap(np.array([[1.0, 2.0], [2.0, 1.0]]), 1)

    def test_rejects_degenerate_split(self):
        with pytest.raises(ShapeMismatch):
            fischer_gap(np.eye(2), 2)


class TestInterpolation:
    def test_frozen_half_correlation(self):
        cb = CovarianceBlocks(np.array([[1.0, 0.5], [0.5, 1.0]]), 1)
        out = interpolate(cb, 0.4)
        assert_allclose(out, np.array([[1.0, 0.2], [0.2, 1.0]]), rtol=1e-15)

    def test_endpoints(self):
        rng = np.random.default_rng(42)
        sigma = rand_spd(rng, 5)
        cb = CovarianceBlocks(sigma, 2)
        decoupled = interpolate(cb, 0.0)
        assert_allclose(decoupled[:2, 2:], 0.0, atol=0)
        assert_allclose(interpolate(cb, 1.0), cb.sigma, rtol=1e-15)

    def test_stays_pd_on_unit_interval(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            cb = CovarianceBlocks(rand_spd(rng, 4), int(rng.integers(1, 4)))
            for s in np.linspace(0.0, 1.0, 7):
                assert is_pd(interpolate(cb, float(s)))


class TestDetInterpCurve:
    def test_frozen_identity_multiplier(self):
        cb = CovarianceBlocks(np.array([[1.0, 0.8], [0.8, 1.0]]), 1)
        vals = det_interp_curve(cb, np.eye(2), [0.0, 1.0])
        assert_allclose(vals, [4.0, 3.36], rtol=1e-13)

    def test_non_increasing_in_s(self):
        rng = np.random.default_rng(42)
        grid = np.linspace(0.0, 1.0, 21)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            split = int(rng.integers(1, n))
            cb = CovarianceBlocks(rand_spd(rng, n), split)
            bs = BlockStructure((split, n - split), (1.0, 1.0))
            a = bs.direct_sum([rand_spd(rng, split, 0.0), rand_spd(rng, n - split, 0.0)])
            vals = det_interp_curve(cb, a, grid)
            assert np.all(np.diff(vals) <= 1e-10 * np.abs(vals[:-1]))

    def test_rejects_off_block_multiplier(self):
        cb = CovarianceBlocks(np.eye(2), 1)
        with pytest.raises(ShapeMismatch):
            det_interp_curve(cb, np.array([[1.0, 0.2], [0.2, 1.0]]), [0.0])


class TestMinorExpansion:
    def test_frozen_scalar(self):
        assert_allclose(minor_expansion([2.0], [[3.0]]), 7.0, rtol=1e-15)

    def test_matches_direct_determinant(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            n = int(rng.integers(1, 9))
            sigma = rand_spd(rng, n)
            a = rng.uniform(0.0, 2.0, size=n)
            direct = np.linalg.det(np.eye(n) + np.diag(a) @ sigma)
            assert_allclose(minor_expansion(a, sigma), direct, rtol=1e-10)

    def test_dimension_cap(self):
        with pytest.raises(DimensionTooLarge):
            minor_expansion(np.ones(13), np.eye(13))

    def test_rejects_non_diagonal(self):
        with pytest.raises(ShapeMismatch):
            minor_expansion(np.array([[1.0, 0.5], [0.5, 1.0]]), np.eye(2))


class TestMinorFactorization:
    def test_frozen_two_by_two(self):
        rho, s = 0.6, 0.7
        cb = CovarianceBlocks(np.array([[1.0, rho], [rho, 1.0]]), 1)
        lhs, rhs = minor_factorization(cb, [0, 1], s)
        assert_allclose(lhs, 1.0 - s**2 * rho**2, rtol=1e-13)
        assert_allclose(rhs, lhs, rtol=1e-12)

    def test_agreement_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(80):
            n = int(rng.integers(2, 8))
            split = int(rng.integers(1, n))
            cb = CovarianceBlocks(rand_spd(rng, n), split)
            k = int(rng.integers(1, n + 1))
            idx = sorted(rng.choice(n, size=k, replace=False).tolist())
            s = float(rng.uniform(0.0, 1.0))
            lhs, rhs = minor_factorization(cb, idx, s)
            assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-13)

    def test_single_block_subsets_are_s_free(self):
        rng = np.random.default_rng(5)
        cb = CovarianceBlocks(rand_spd(rng, 4), 2)
        lhs0, rhs0 = minor_factorization(cb, [0, 1], 0.3)
        lhs1, rhs1 = minor_factorization(cb, [0, 1], 0.9)
        assert_allclose(lhs0, lhs1, rtol=1e-14)
        assert_allclose(rhs0, lhs0, rtol=1e-12)

    def test_invalid_sets(self):
        cb = CovarianceBlocks(np.eye(2), 1)
        with pytest.raises(InvalidIndexSet):
            minor_factorization(cb, [], 0.5)
        with pytest.raises(InvalidIndexSet):
            minor_factorization(cb, [0, 0], 0.5)
        with pytest.raises(InvalidIndexSet):
            minor_factorization(cb, [0, 2], 0.5)


class TestTypes:
    def test_sym_matrix_roundtrip(self):
        m = SymMatrix(np.array([[2.0, 0.5], [0.5, 2.0]]))
        again = SymMatrix.from_json(m.to_json())
        assert_allclose(again.a, m.a, rtol=0, atol=0)
        assert again.pd and again.psd

    def test_sym_matrix_immutable(self):
        m = SymMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.a[0, 0] = 5.0

    def test_block_structure_validation(self):
        with pytest.raises(ShapeMismatch):
            BlockStructure((1, 2), (1.0,))
        with pytest.raises(ShapeMismatch):
            BlockStructure((1, 2), (1.0, 0.0))

    def test_direct_sum_with_weights(self):
        bs = BlockStructure((1, 2), (2.0, 0.5))
        out = bs.direct_sum([np.array([[4.0]]), np.eye(2)], weights="c")
        assert_allclose(out, np.diag([8.0, 0.5, 0.5]), rtol=1e-15)

    def test_covariance_blocks_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            CovarianceBlocks(np.array([[1.0, 2.0], [2.0, 1.0]]), 1)
