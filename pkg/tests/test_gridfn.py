"""Gridded even functions: sampling, membership scans, convolution flow."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gclab import gridfn
from gclab.errors import (
    AliasingDetected,
    DimensionTooLarge,
    GridTooSmall,
    MassZero,
    ShapeMismatch,
)

SQRT_2PI = math.sqrt(2.0 * math.pi)


def irwin_hall_rescaled(x, folds):
    """Density of 2^{-k/2} * (sum of 2^k iid uniform[-1,1]) with folds = 2^k.

    Closed form through the piecewise-polynomial density of a sum of
    uniforms; exact up to float roundoff for small fold counts.
    """
    u = (np.asarray(x, dtype=float) * math.sqrt(folds) + folds) / 2.0
    out = np.zeros_like(u)
    for j in range(folds + 1):
        out += (-1.0) ** j * math.comb(folds, j) * np.where(u > j, (u - j) ** (folds - 1), 0.0)
    return out * math.sqrt(folds) / (2.0 * math.factorial(folds - 1))


def gaussian_mixture(rng, halfwidth=12.0, points=1024):
    """Random even, smooth, strictly positive test function."""
    ax = gridfn._cell_centered_axis(halfwidth, points)
    vals = np.zeros(points)
    for _ in range(rng.integers(1, 4)):
        a = rng.uniform(0.5, 4.0)
        w = rng.uniform(0.2, 1.0)
        vals += w * np.exp(-0.5 * a * ax**2)
    vals = 0.5 * (vals + vals[::-1])
    return gridfn.GriddedFunction(1, halfwidth, points, vals)


class TestSampling:
    def test_standard_gaussian_mass(self):
        f = gridfn.sample_gaussian(1.0, halfwidth=12.0, points=1024)
        assert_allclose(f.mass(), SQRT_2PI, rtol=1e-10)

    def test_scaled_gaussian_mass(self):
        f = gridfn.sample_gaussian(4.0)
        assert_allclose(f.mass(), SQRT_2PI / 2.0, rtol=1e-10)

    def test_isotropic_2d_is_product_of_1d(self):
        f2 = gridfn.sample_gaussian(np.array([[2.0, 0.0], [0.0, 2.0]]), halfwidth=9.0, points=256)
        f1 = gridfn.sample_gaussian(2.0, halfwidth=9.0, points=256)
        assert_allclose(f2.values, np.outer(f1.values, f1.values), rtol=1e-13)
        assert_allclose(f2.mass(), 2.0 * math.pi / 2.0, rtol=1e-10)

    def test_gaussian_window_too_narrow(self):
        with pytest.raises(GridTooSmall):
            gridfn.sample_gaussian(1.0, halfwidth=3.0, points=64)

    def test_aligned_box_mass_exact(self):
        f = gridfn.sample_box([1.0])
        assert f.mass() == 2.0

    def test_box_2d_mass(self):
        f = gridfn.sample_box([1.0, 0.7], points=256)
        assert_allclose(f.mass(), 4.0 * 0.7, atol=4.0 * f.h)

    def test_polytope_1d_reduces_to_interval(self):
        f = gridfn.sample_polytope_1d([0.5, 2.0, -1.0])
        g = gridfn.sample_box([0.5])
        assert f.same_grid(g) and np.array_equal(f.values, g.values)

    def test_complement_plus_box_is_one(self):
        box = gridfn.sample_box([1.0])
        comp = gridfn.sample_box_complement([1.0])
        assert_allclose(box.values + comp.values, 1.0)

    def test_scale_by_gaussian_restores_decay(self):
        comp = gridfn.sample_box_complement([1.0])
        assert not comp.decay_contained()
        weighted = gridfn.scale_by_gaussian(comp, 1.0)
        assert weighted.decay_contained()

    def test_covariance_of_box(self):
        f = gridfn.sample_box([1.0])
        assert_allclose(f.covariance()[0, 0], 1.0 / 3.0, atol=1e-4)

    def test_evenness_validation(self):
        vals = np.ones(64)
        vals[0] = 2.0
        with pytest.raises(ShapeMismatch):
            gridfn.GriddedFunction(1, 4.0, 64, vals)

    def test_power_of_two_required(self):
        with pytest.raises(ShapeMismatch):
            gridfn.GriddedFunction(1, 4.0, 96, np.ones(96))

    def test_normalize_zero_mass(self):
        f = gridfn.GriddedFunction(1, 4.0, 64, np.zeros(64))
        with pytest.raises(MassZero):
            f.normalized()

    def test_json_roundtrip(self):
        f = gridfn.sample_gaussian(2.0, halfwidth=10.0, points=64)
        g = gridfn.GriddedFunction.from_json(f.to_json())
        assert f.same_grid(g) and np.array_equal(f.values, g.values)


class TestMembership:
    def test_gaussian_against_own_parameter(self):
        f = gridfn.sample_gaussian(1.0)
        assert gridfn.is_more_logconcave_than(f, 1.0).holds

    def test_gaussian_against_weaker_parameter(self):
        f = gridfn.sample_gaussian(1.0)
        assert gridfn.is_more_logconcave_than(f, 0.5).holds

    def test_gaussian_against_stronger_parameter_fails(self):
        f = gridfn.sample_gaussian(1.0)
        res = gridfn.is_more_logconcave_than(f, 1.2)
        assert not res.holds and res.witness is not None
        assert res.witness.defect > 0.0

    def test_box_is_logconcave(self):
        f = gridfn.sample_box([1.0])
        assert gridfn.is_more_logconcave_than(f, 0.0).holds

    def test_box_complement_not_logconcave_with_straddling_witness(self):
        f = gridfn.sample_box_complement([1.0])
        res = gridfn.is_more_logconcave_than(f, 0.0)
        assert not res.holds
        assert res.witness.x[0] < -1.0 < 1.0 < res.witness.y[0]

    def test_monotone_in_parameter(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            b = rng.uniform(0.5, 3.0)
            f = gridfn.sample_gaussian(b)
            a = rng.uniform(0.0, 1.0) * b
            assert gridfn.is_more_logconcave_than(f, a).holds

    def test_logconvex_directions(self):
        f = gridfn.sample_gaussian(1.0)
        assert gridfn.is_more_logconvex_than(f, 2.0).holds
        assert not gridfn.is_more_logconvex_than(f, 0.5).holds

    def test_logconvex_requires_positivity(self):
        f = gridfn.sample_box([1.0])
        res = gridfn.is_more_logconvex_than(f, 1.0)
        assert not res.holds and res.witness.defect == math.inf

    def test_2d_gaussian_membership(self):
        a = np.array([[1.5, 0.4], [0.4, 1.0]])
        f = gridfn.sample_gaussian(a, points=64)
        assert gridfn.is_more_logconcave_than(f, a).holds
        assert gridfn.is_more_logconcave_than(f, 0.5 * a).holds
        assert not gridfn.is_more_logconcave_than(f, 1.3 * a).holds

    def test_2d_box_complement_fails(self):
        f = gridfn.sample_box_complement([1.0, 1.0], points=256)
        res = gridfn.is_more_logconcave_than(f, np.zeros((2, 2)))
        assert not res.holds

    def test_witness_triple_is_misordered_midpoint(self):
        f = gridfn.sample_box_complement([1.0])
        w = gridfn.is_more_logconcave_than(f, 0.0).witness
        assert_allclose(w.midpoint[0], 0.5 * (w.x[0] + w.y[0]), atol=1e-12)


class TestConvStep:
    def test_gaussian_fixed_point(self):
        f = gridfn.sample_gaussian(1.0).normalized()
        out = gridfn.conv_step(f).normalized()
        assert gridfn.l1_distance(out, f) < 1e-6

    def test_mass_squares_smooth(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            f = gaussian_mixture(rng)
            out = gridfn.conv_step(f)
            m = f.mass()
            assert abs(out.mass() - m * m) <= 1e-9 * m * m

    def test_covariance_preserved_smooth(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            f = gaussian_mixture(rng)
            c0 = f.covariance()[0, 0]
            c1 = gridfn.conv_step(f).covariance()[0, 0]
            assert abs(c1 - c0) <= 1e-6 * c0

    def test_box_becomes_rescaled_triangle(self):
        f = gridfn.sample_box([1.0])
        out = gridfn.conv_step(f)
        hat = np.sqrt(2.0) * np.clip(2.0 - np.sqrt(2.0) * np.abs(f.axis), 0.0, None)
        assert np.abs(out.values - hat).sum() * f.h < 1e-3

    def test_box_covariance_preserved(self):
        f = gridfn.sample_box([1.0]).normalized()
        c0 = f.covariance()[0, 0]
        c1 = gridfn.conv_step(f).covariance()[0, 0]
        # Kinked input: cubic respray rings at the kink, measured ~4e-6.
        assert abs(c1 - c0) < 1e-5

    def test_2d_gaussian_fixed_point(self):
        a = np.array([[1.0, 0.3], [0.3, 2.0]])
        f = gridfn.sample_gaussian(a, points=256).normalized()
        out = gridfn.conv_step(f).normalized()
        assert gridfn.l1_distance(out, f) < 1e-6
        assert_allclose(out.covariance(), f.covariance(), rtol=1e-6)

    def test_leak_detection(self):
        vals = np.ones(64)
        f = gridfn.GriddedFunction(1, 4.0, 64, vals)
        with pytest.raises(AliasingDetected):
            gridfn.conv_step(f)

    def test_evenness_preserved(self):
        f = gridfn.sample_box([1.0])
        out = gridfn.conv_step(f)
        assert np.array_equal(out.values, out.values[::-1])


class TestFlow:
    def test_gaussian_start_stays_gaussian(self):
        f = gridfn.sample_gaussian(2.0)
        state = gridfn.clt_flow((f,), 6)
        assert state.iteration == 6
        assert all(d[0] < 1e-6 for d in state.l1_to_gaussian)

    def test_box_flow_reaches_gaussian_limit(self):
        box = gridfn.sample_box([1.0])
        state = gridfn.clt_flow((box,), 10)
        limit = gridfn.sample_gaussian(
            np.array([[3.0]]), halfwidth=box.halfwidth, points=box.n
        ).normalized()
        assert gridfn.l1_distance(state.current[0], limit) < 1e-3

    def test_box_flow_covariance_drift(self):
        box = gridfn.sample_box([1.0])
        state = gridfn.clt_flow((box,), 10)
        c0 = state.covariances[0][0]
        drift = max(abs(c[0][0, 0] - c0[0, 0]) for c in state.covariances)
        assert drift < 1e-5

    def test_flow_matches_explicit_fold_oracle(self):
        box = gridfn.sample_box([1.0])
        for k in (1, 2, 3):
            state = gridfn.clt_flow((box,), k)
            f = state.current[0]
            oracle = irwin_hall_rescaled(f.axis, 2**k)
            assert np.abs(f.values - oracle).sum() * f.h < 1e-4

    def test_l1_distances_decrease_from_box(self):
        box = gridfn.sample_box([1.0])
        state = gridfn.clt_flow((box,), 8)
        dists = [d[0] for d in state.l1_to_gaussian]
        assert all(b < a for a, b in zip(dists, dists[1:]))

    def test_flow_tracks_functional(self):
        box = gridfn.sample_box([1.0])
        state = gridfn.clt_flow((box,), 3, bl_fn=lambda fs: fs[0].mass())
        assert len(state.bl_values) == 4
        assert_allclose(state.bl_values, 1.0, rtol=1e-12)

    def test_flow_on_pair(self):
        fs = (gridfn.sample_box([1.0]), gridfn.sample_gaussian(1.0))
        state = gridfn.clt_flow(fs, 2)
        assert len(state.current) == 2
        assert len(state.covariances) == 3


class TestProductSplit:
    def test_gaussian_pair_at_origin(self):
        g = gridfn.sample_gaussian(1.0)
        assert gridfn.product_split_check(g, g, 1.0, 1.0, 0.0).holds

    def test_gaussian_pair_off_origin(self):
        g = gridfn.sample_gaussian(1.0)
        assert gridfn.product_split_check(g, g, 1.0, 1.0, 0.7).holds

    def test_gaussian_pair_against_too_strong_parameter(self):
        g = gridfn.sample_gaussian(1.0)
        res = gridfn.product_split_check(g, g, 1.5, 1.5, 0.0)
        assert not res.holds

    def test_shifted_indicator_product_is_interval_indicator(self):
        box = gridfn.sample_box([1.0])
        assert gridfn.product_split_check(box, box, 0.0, 0.0, 0.5).holds

    def test_logconvex_mode(self):
        g = gridfn.sample_gaussian(1.0)
        assert gridfn.product_split_check(g, g, 2.0, 2.0, 0.3, mode="logconvex").holds

    def test_mixed_parameters_average(self):
        f1 = gridfn.sample_gaussian(2.0, halfwidth=12.0, points=1024)
        f2 = gridfn.sample_gaussian(1.0, halfwidth=12.0, points=1024)
        assert gridfn.product_split_check(f1, f2, 2.0, 1.0, 0.4).holds

    def test_rejects_2d(self):
        f = gridfn.sample_gaussian(np.eye(2), points=64)
        with pytest.raises(DimensionTooLarge):
            gridfn.product_split_check(f, f, np.eye(2), np.eye(2), 0.0)


class TestConvolvePair:
    def test_gaussian_convolution_membership_boundary(self):
        g1 = gridfn.sample_gaussian(1.0, halfwidth=12.0, points=1024)
        g3 = gridfn.sample_gaussian(3.0, halfwidth=12.0, points=1024)
        conv = gridfn.convolve_pair(g1, g3)
        # 1/C = 1/1 + 1/3 so the convolution is exactly as log-concave as C=3/4.
        assert gridfn.is_more_logconcave_than(conv, 0.75).holds
        assert not gridfn.is_more_logconcave_than(conv, 0.85).holds

    def test_convolution_mass_is_product(self):
        g1 = gridfn.sample_gaussian(1.0, halfwidth=12.0, points=1024)
        g2 = gridfn.sample_gaussian(2.0, halfwidth=12.0, points=1024)
        conv = gridfn.convolve_pair(g1, g2)
        assert_allclose(conv.mass(), g1.mass() * g2.mass(), rtol=1e-6)

    def test_requires_common_grid(self):
        g1 = gridfn.sample_gaussian(1.0, halfwidth=12.0, points=1024)
        g2 = gridfn.sample_gaussian(1.0, halfwidth=10.0, points=1024)
        with pytest.raises(ShapeMismatch):
            gridfn.convolve_pair(g1, g2)
