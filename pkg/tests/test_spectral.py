import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsqgvw.checks import random_band_limited
from gsqgvw.spectral import (
    GridSpec,
    SpectralField,
    bernstein_check,
    besov_norm,
    biot_savart,
    bump_profile,
    dealias,
    divergence,
    dyadic_decompose,
    evaluate_at,
    fractional_laplacian,
    from_physical,
    gradient,
    high_pass,
    homogeneous_sobolev_norm,
    low_pass,
    lp_norm,
    lp_psi,
    product,
    refine,
    smoothstep,
    sobolev_norm,
    spectral_cutoff,
    to_physical,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestProfiles:
    def test_smoothstep_limits(self):
        t = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
        np.testing.assert_array_equal(smoothstep(t)[[0, 1, 3, 4]], [0, 0, 1, 1])
        assert smoothstep(0.5) == pytest.approx(0.5)

    def test_bump_plateau_and_support(self):
        assert np.all(bump_profile(np.linspace(0, 0.5, 11)) == 1.0)
        assert np.all(bump_profile(np.linspace(1, 3, 11)) == 0.0)
        r = np.linspace(0.5, 1, 101)
        assert np.all(np.diff(bump_profile(r)) <= 0)

    def test_psi_partition_of_unity(self):
        xi = np.linspace(0.1, 100, 500)
        js = np.arange(-6, 10)
        total = bump_profile(xi / 2.0 ** js[0]) + sum(lp_psi(xi / 2.0**j) for j in js)
        np.testing.assert_allclose(total, 1.0, atol=1e-15)


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            GridSpec(1.0, 48)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 16)

    def test_wavenumbers(self):
        g = GridSpec(4.0, 8)
        np.testing.assert_allclose(g.k1d, 2 * np.pi / 4.0 * np.array([0, 1, 2, 3, -4, -3, -2, -1]))
        assert g.h == 0.5

    def test_displacement_minimal_image(self):
        g = GridSpec(1.0, 16)
        dx, dy = g.displacement((0.95, 0.0))
        assert np.all(np.abs(dx) <= 0.5) and np.all(np.abs(dy) <= 0.5)


class TestTransforms:
    def test_roundtrip(self, grid64, rng):
        a = rng.normal(size=(64, 64))
        np.testing.assert_allclose(to_physical(from_physical(a, grid64)), a, atol=1e-13)

    def test_rejects_complex(self, grid64):
        with pytest.raises(ValueError):
            from_physical(np.zeros((64, 64), dtype=complex), grid64)

    def test_rejects_wrong_shape(self, grid64):
        with pytest.raises(ValueError):
            from_physical(np.zeros((32, 32)), grid64)

    def test_coefficients_read_only(self, band_limited):
        f = band_limited()
        with pytest.raises(ValueError):
            f.coefficients[0, 0] = 1.0

    def test_real_field_is_hermitian(self, band_limited):
        assert band_limited().hermitian_defect() < 1e-15

    def test_evaluate_at_matches_formula(self, grid64):
        X, Y = grid64.coords
        f = from_physical(np.sin(2 * X) * np.cos(3 * Y) + 0.5, grid64)
        pts = np.array([[0.1, 0.2], [1.234, 5.678], [6.0, 0.0]])
        exact = np.sin(2 * pts[:, 0]) * np.cos(3 * pts[:, 1]) + 0.5
        np.testing.assert_allclose(evaluate_at(f, pts), exact, atol=1e-13)

    def test_refine_exact(self, band_limited):
        f = band_limited(kmax=10)
        fine = refine(f, 2)
        pts = np.random.default_rng(0).uniform(0, 2 * np.pi, size=(20, 2))
        np.testing.assert_allclose(evaluate_at(fine, pts), evaluate_at(f, pts), atol=1e-11)


class TestProducts:
    def test_dealiased_product_of_band_limited_is_exact(self, grid64):
        X, Y = grid64.coords
        a = from_physical(np.cos(5 * X + 3 * Y), grid64)
        b = from_physical(np.sin(7 * Y), grid64)
        expected = dealias(from_physical(np.cos(5 * X + 3 * Y) * np.sin(7 * Y), grid64))
        np.testing.assert_allclose(product(a, b).coefficients, expected.coefficients, atol=1e-15)

    def test_dealias_removes_top_third(self, band_limited, grid64):
        f = dealias(band_limited(kmax=31))
        top = np.abs(grid64.index) >= 2 / 3 * 32
        assert np.all(f.coefficients[top, :] == 0) and np.all(f.coefficients[:, top] == 0)


class TestMultipliers:
    @pytest.mark.parametrize("power", [-0.75, -0.25, 0.5, 1.0])
    def test_fractional_laplacian_eigenfunction(self, grid64, power):
        X, Y = grid64.coords
        f = from_physical(np.sin(3 * X + 2 * Y), grid64)
        out = to_physical(fractional_laplacian(f, power))
        np.testing.assert_allclose(out, 13.0**power * np.sin(3 * X + 2 * Y), atol=1e-11)

    def test_negative_power_kills_mean(self, grid64):
        f = from_physical(np.ones((64, 64)), grid64)
        assert fractional_laplacian(f, -0.5).mean == 0.0

    @pytest.mark.parametrize("s", [0.3, 0.5, 0.75, 0.9])
    def test_biot_savart_single_mode(self, grid64, s):
        # theta = cos 2x: stream function 2^(-2s) cos 2x, v = -grad-perp of it = (0, 2^(1-2s) sin 2x)
        X, _ = grid64.coords
        v = biot_savart(from_physical(np.cos(2 * X), grid64), s)
        vx, vy = v.to_physical()
        np.testing.assert_allclose(vx, 0.0, atol=1e-14)
        np.testing.assert_allclose(vy, 2.0 ** (1 - 2 * s) * np.sin(2 * X), atol=1e-13)

    @pytest.mark.parametrize("s", [0.0, 1.0, 1.5])
    def test_biot_savart_rejects_s(self, grid64, s):
        with pytest.raises(ValueError):
            biot_savart(SpectralField.zeros(grid64), s)

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, s=st.floats(0.05, 0.95))
    def test_velocity_divergence_free(self, seed, s):
        g = GridSpec(2 * math.pi, 32)
        theta = random_band_limited(g, np.random.default_rng(seed), 15)
        v = biot_savart(theta, s)
        scale = np.max(np.abs(v.x.coefficients)) * np.max(theta.grid.kmag)
        assert np.max(np.abs(divergence(v).coefficients)) < 1e-14 * scale

    def test_spectral_cutoff(self, band_limited, grid64):
        f = band_limited(kmax=31)
        assert spectral_cutoff(f, math.inf) is f
        cut = spectral_cutoff(f, 5.0)
        assert np.all(cut.coefficients[grid64.kmag > 5.0] == 0)
        kept = grid64.kmag <= 5.0
        np.testing.assert_array_equal(cut.coefficients[kept], f.coefficients[kept])

    def test_gradient_of_sine(self, grid64):
        X, Y = grid64.coords
        gr = gradient(from_physical(np.sin(X) * np.sin(2 * Y), grid64))
        gx, gy = gr.to_physical()
        np.testing.assert_allclose(gx, np.cos(X) * np.sin(2 * Y), atol=1e-13)
        np.testing.assert_allclose(gy, 2 * np.sin(X) * np.cos(2 * Y), atol=1e-13)


class TestLittlewoodPaley:
    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, homogeneous=st.booleans())
    def test_reconstruction(self, seed, homogeneous):
        g = GridSpec(2 * math.pi, 32)
        f = random_band_limited(g, np.random.default_rng(seed), 15, zero_mean=homogeneous)
        rec = dyadic_decompose(f, homogeneous=homogeneous).reconstruct()
        assert np.max(np.abs(rec.coefficients - f.coefficients)) < 1e-12

    def test_low_plus_high_is_identity(self, band_limited):
        f = band_limited()
        total = low_pass(f, 3) + high_pass(f, 3)
        np.testing.assert_allclose(total.coefficients, f.coefficients, atol=1e-16)

    def test_block_lookup(self, band_limited):
        blocks = dyadic_decompose(band_limited())
        j, b = next(iter(blocks))
        assert blocks.block(j) is b
        with pytest.raises(KeyError):
            blocks.block(99)


class TestNorms:
    def test_lp_norm_constant(self, grid64):
        a = np.full((64, 64), 2.0)
        area = (2 * math.pi) ** 2
        assert lp_norm(a, 1, grid64) == pytest.approx(2.0 * area)
        assert lp_norm(a, 2, grid64) == pytest.approx(2.0 * math.sqrt(area))
        assert lp_norm(a, math.inf, grid64) == 2.0

    def test_sobolev_zero_is_l2(self, band_limited, grid64):
        f = band_limited()
        assert sobolev_norm(f, 0) == pytest.approx(lp_norm(to_physical(f), 2, grid64), rel=1e-12)

    def test_sobolev_single_mode(self, grid64):
        X, _ = grid64.coords
        f = from_physical(np.cos(3 * X), grid64)
        # ||cos 3x||_L2^2 = 2 pi^2 on [0, 2pi)^2
        assert sobolev_norm(f, 2) == pytest.approx(10.0 * math.sqrt(2) * math.pi, rel=1e-12)
        assert homogeneous_sobolev_norm(f, -1) == pytest.approx(math.sqrt(2) * math.pi / 3, rel=1e-12)

    def test_homogeneous_negative_needs_zero_mean(self, grid64):
        with pytest.raises(ValueError):
            homogeneous_sobolev_norm(from_physical(np.ones((64, 64)), grid64), -0.5)

    def test_besov_monotone_in_regularity(self, band_limited):
        f = band_limited()
        assert besov_norm(f, 0.5, 2, 2) <= besov_norm(f, 1.0, 2, 2)

    def test_besov_rejects_bad_exponent(self, band_limited):
        with pytest.raises(ValueError):
            besov_norm(band_limited(), 0.0, 0.5, 2)


class TestBernstein:
    def test_empty_block(self, grid64):
        rep = bernstein_check(SpectralField.zeros(grid64), 2, 2, math.inf)
        assert rep.empty and math.isnan(rep.ratio)

    def test_rejects_q_below_p(self, band_limited):
        with pytest.raises(ValueError):
            bernstein_check(band_limited(), 2, 4, 2)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds)
    def test_ratio_bounded(self, seed):
        g = GridSpec(2 * math.pi, 64)
        f = random_band_limited(g, np.random.default_rng(seed), 31)
        for j in range(1, 5):
            rep = bernstein_check(f, j, 2, math.inf)
            assert rep.empty or 0 < rep.ratio < 2.0
