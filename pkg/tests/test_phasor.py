"""Illumination kernel, frequency projection, and closed-form calculators."""

import numpy as np
import pytest

from phasorfield import PointList, TransientMeasurement, ValidationError
from phasorfield.core import SPEED_OF_LIGHT
from phasorfield.phasor import (
    build_kernel,
    compression_factor,
    cuboid_volume,
    frustum_volume,
    lateral_resolution,
    sampling_report,
    scale_bounds,
    to_frequency,
)

from helpers import centered_relay, rel_linf


# ---------------------------------------------------------------------------
# Kernel construction
# ---------------------------------------------------------------------------


class TestBuildKernel:
    def test_reference_bin_count(self):
        k = build_kernel(0.04, 4096, 16e-12, threshold=0.01)
        assert k.n_freq == 95
        # roughly a tenth of the time bins survive the threshold
        assert 4096 / 100 < k.n_freq < 4096

    def test_weights_recompute_from_gaussian(self):
        k = build_kernel(0.04, 4096, 16e-12, threshold=0.01)
        omega_c = 2 * np.pi * SPEED_OF_LIGHT / 0.04
        sigma = SPEED_OF_LIGHT / (5 * 0.04)
        assert k.omega_c == pytest.approx(omega_c)
        assert k.sigma == pytest.approx(sigma)
        expected = np.exp(-((k.frequencies - omega_c) ** 2) / (2 * sigma**2))
        assert rel_linf(k.weights, expected) < 1e-12
        assert np.all(k.weights > 0.01) and np.all(k.weights <= 1.0)

    def test_frequencies_sit_on_dft_bins(self):
        n_bins, dt = 1024, 16e-12
        k = build_kernel(0.06, n_bins, dt)
        d_omega = 2 * np.pi / (n_bins * dt)
        assert np.allclose(k.frequencies, k.bin_indices * d_omega, rtol=1e-12)
        assert np.all(np.diff(k.bin_indices) > 0)

    def test_center_on_a_bin_gives_unit_weight(self):
        n_bins, dt, m = 1024, 16e-12, 100
        lambda_c = SPEED_OF_LIGHT * n_bins * dt / m
        k = build_kernel(lambda_c, n_bins, dt)
        assert k.weights.max() == pytest.approx(1.0, abs=1e-12)
        assert k.bin_indices[np.argmax(k.weights)] == m

    def test_no_bin_clears_threshold(self):
        with pytest.raises(ValidationError):
            build_kernel(0.04, 4096, 16e-12, threshold=0.9999999)

    @pytest.mark.parametrize("kwargs", [
        dict(lambda_c=0.0, n_bins=64, delta_t=1e-12),
        dict(lambda_c=0.04, n_bins=0, delta_t=1e-12),
        dict(lambda_c=0.04, n_bins=64, delta_t=0.0),
        dict(lambda_c=0.04, n_bins=64, delta_t=1e-12, threshold=0.0),
        dict(lambda_c=0.04, n_bins=64, delta_t=1e-12, threshold=1.0),
    ])
    def test_rejects_degenerate_inputs(self, kwargs):
        with pytest.raises(ValidationError):
            build_kernel(**kwargs)


# ---------------------------------------------------------------------------
# Frequency projection
# ---------------------------------------------------------------------------


def _measurement(h, dt=16e-12, t0=0.0):
    relay = centered_relay(2, 0.1)
    ill = PointList(np.zeros((h.shape[0], 2)))
    return TransientMeasurement(relay, ill, h, dt, t0=t0)


class TestToFrequency:
    def test_zero_histograms_give_zero_coefficients(self):
        m = _measurement(np.zeros((1, 4, 256)))
        k = build_kernel(0.06, 256, 16e-12)
        sl = to_frequency(m, k)
        assert sl.coefficients.shape == (1, 4, k.n_freq)
        assert np.all(sl.coefficients == 0)
        assert np.allclose(sl.frequencies, k.frequencies)

    def test_single_delta_formula(self):
        n_bins, dt, t0, b = 512, 16e-12, 3e-10, 41
        h = np.zeros((1, 4, n_bins))
        h[0, 2, b] = 2.5
        m = _measurement(h, dt, t0)
        k = build_kernel(0.06, n_bins, dt)
        sl = to_frequency(m, k)
        pred = k.weights * 2.5 * np.exp(-1j * k.frequencies * (t0 + b * dt))
        assert rel_linf(sl.coefficients[0, 2], pred) < 1e-12
        assert np.all(sl.coefficients[0, [0, 1, 3]] == 0)

    def test_matches_direct_weighted_dft(self, rng):
        n_bins, dt, t0 = 128, 32e-12, 1e-10
        h = rng.uniform(0.0, 5.0, size=(2, 4, n_bins))
        m = _measurement(h, dt, t0)
        k = build_kernel(0.08, n_bins, dt)
        sl = to_frequency(m, k)
        times = t0 + np.arange(n_bins) * dt
        direct = np.einsum("wpb,fb->wpf", h,
                           np.exp(-1j * np.outer(k.frequencies, times)))
        direct *= k.weights
        assert rel_linf(sl.coefficients, direct) < 1e-10

    def test_linear_in_histogram(self, rng):
        n_bins, dt = 128, 32e-12
        h1 = rng.uniform(0.0, 1.0, size=(1, 4, n_bins))
        h2 = rng.uniform(0.0, 1.0, size=(1, 4, n_bins))
        k = build_kernel(0.08, n_bins, dt)
        c1 = to_frequency(_measurement(h1, dt), k).coefficients
        c2 = to_frequency(_measurement(h2, dt), k).coefficients
        c12 = to_frequency(_measurement(2.0 * h1 + 3.0 * h2, dt), k).coefficients
        assert rel_linf(c12, 2.0 * c1 + 3.0 * c2) < 1e-10

    def test_rejects_kernel_built_for_other_time_axis(self):
        m = _measurement(np.zeros((1, 4, 256)))
        with pytest.raises(ValidationError):
            to_frequency(m, build_kernel(0.06, 128, 16e-12))
        with pytest.raises(ValidationError):
            to_frequency(m, build_kernel(0.06, 256, 8e-12))


# ---------------------------------------------------------------------------
# Closed-form calculators
# ---------------------------------------------------------------------------


class TestLateralResolution:
    def test_reference_values(self):
        assert lateral_resolution(0.04, 1.8, 1.8) == pytest.approx(0.0488)
        assert lateral_resolution(0.04, 3.0, 1.8) == pytest.approx(0.08133, abs=5e-6)

    def test_linear_in_depth(self):
        assert lateral_resolution(0.04, 3.6, 1.8) == pytest.approx(
            2 * lateral_resolution(0.04, 1.8, 1.8))

    def test_rejects_nonpositive_inputs(self):
        with pytest.raises(ValidationError):
            lateral_resolution(0.0, 1.0, 1.0)
        with pytest.raises(ValidationError):
            lateral_resolution(0.04, 1.0, -1.0)


class TestSamplingReport:
    def test_unit_ratio_blocks_compression(self):
        r = sampling_report(2.0, 1.0, 0.04)
        assert r.ratio == pytest.approx(1.0)
        assert r.max_downsample == 0.0

    def test_ratio_five_admits_factor_four(self):
        r = sampling_report(1.0, 2.5, 0.04)
        assert r.ratio == pytest.approx(5.0)
        assert r.max_downsample == 4.0
        assert r.lambda_sz == pytest.approx(0.02)
        assert r.lambda_sx == pytest.approx(r.ratio * r.lambda_sz)

    def test_confocal_halves_intervals_not_ratio(self):
        r = sampling_report(1.0, 2.5, 0.04)
        rc = sampling_report(1.0, 2.5, 0.04, confocal=True)
        assert rc.ratio == r.ratio and rc.max_downsample == r.max_downsample
        assert rc.lambda_sz == pytest.approx(r.lambda_sz / 2)
        assert rc.lambda_sx == pytest.approx(r.lambda_sx / 2)

    def test_on_axis_is_unbounded(self):
        r = sampling_report(0.0, 1.0, 0.04)
        assert np.isinf(r.ratio) and np.isinf(r.max_downsample)

    def test_ratio_scale_invariant(self):
        a = sampling_report(0.7, 1.9, 0.04)
        b = sampling_report(0.7 * 3.5, 1.9 * 3.5, 0.04)
        assert a.ratio == pytest.approx(b.ratio)

    def test_rejects_on_plane_scatterer(self):
        with pytest.raises(ValidationError):
            sampling_report(1.0, 0.0, 0.04)


class TestFrustumVolume:
    def test_reference_case(self):
        vf = frustum_volume(4, 4, 0, 4, 0.5, 0.5)
        vc = cuboid_volume(4, 4, 0, 4)
        assert vf == pytest.approx(277.33, abs=0.5)
        assert vc == pytest.approx(64.0)
        assert vf - vc == pytest.approx(213.33, abs=0.5)
        assert (vf - vc) / vc == pytest.approx(10.0 / 3.0, abs=0.01)

    def test_large_scale_limit_is_cuboid(self):
        assert frustum_volume(4, 4, 0, 4, 1e9, 1e9) == pytest.approx(64.0, rel=1e-6)

    @pytest.mark.parametrize("args", [
        (4.0, 4.0, 0.0, 4.0, 0.5, 1.0),
        (2.0, 3.0, 0.5, 2.5, 0.8, 0.4),
        (1.0, 1.0, 1.0, 3.0, 1.3, 2.0),
    ])
    def test_matches_numerical_integration(self, args):
        x_in, y_in, z_in, z_out, alpha, beta = args
        zs = np.linspace(z_in, z_out, 10_001)
        # x_in × y_in is the cross-section at the near plane; the extents
        # grow with distance from that plane
        areas = (x_in + (zs - z_in) / alpha) * (y_in + (zs - z_in) / beta)
        numeric = np.trapezoid(areas, zs)
        assert frustum_volume(*args) == pytest.approx(numeric, rel=1e-6)

    def test_zero_height_span_is_empty(self):
        assert frustum_volume(4, 4, 2, 2, 0.5, 0.5) == 0.0

    def test_never_below_cuboid_for_shrinking_scales(self, rng):
        for _ in range(20):
            x_in, y_in = rng.uniform(0.5, 4.0, size=2)
            z_in = rng.uniform(0.0, 1.0)
            z_out = z_in + rng.uniform(0.5, 3.0)
            a, b = rng.uniform(0.2, 1.0, size=2)
            assert (frustum_volume(x_in, y_in, z_in, z_out, a, b)
                    >= cuboid_volume(x_in, y_in, z_in, z_out) - 1e-9)

    def test_rejects_bad_span_and_scales(self):
        with pytest.raises(ValidationError):
            frustum_volume(4, 4, 2, 1, 0.5, 0.5)
        with pytest.raises(ValidationError):
            frustum_volume(4, 4, 0, 4, 0.0, 0.5)
        with pytest.raises(ValidationError):
            frustum_volume(4, 4, 0, 4, 0.5, -1.0)


class TestScaleBounds:
    def test_reference_values(self):
        b = scale_bounds(0.01, 0.04, 3.0, 1.8)
        assert b.pitch_limit == pytest.approx(0.04067, abs=5e-6)
        assert b.alpha_min == pytest.approx(0.2459, abs=5e-5)
        assert b.alpha_max == 1.0

    def test_pitch_at_limit_pins_alpha_to_one(self):
        limit = scale_bounds(0.01, 0.04, 3.0, 1.8).pitch_limit
        assert scale_bounds(limit, 0.04, 3.0, 1.8).alpha_min == pytest.approx(1.0)

    def test_limit_linear_in_depth(self):
        full = scale_bounds(0.01, 0.04, 3.0, 1.8).pitch_limit
        half = scale_bounds(0.01, 0.04, 1.5, 1.8).pitch_limit
        assert half == pytest.approx(full / 2)

    def test_rejects_nonpositive_inputs(self):
        with pytest.raises(ValidationError):
            scale_bounds(0.0, 0.04, 3.0, 1.8)
        with pytest.raises(ValidationError):
            scale_bounds(0.01, 0.04, 3.0, 0.0)


class TestCompressionFactor:
    def test_reference_ratio(self):
        assert compression_factor(100, 5, 100, 10) == 125.0

    def test_no_compression_baseline(self):
        assert compression_factor(64, 1, 2048, 1024) == pytest.approx(1.0)

    def test_arithmetic_case(self):
        assert compression_factor(64, 2, 2048, 200) == pytest.approx(20.48)

    def test_detector_count_floors(self):
        # 32/5 floors to 6 retained detectors per side
        assert compression_factor(32, 5, 100, 10) == pytest.approx(1024 * 100 / (36 * 20))

    def test_rejects_nonpositive_inputs(self):
        with pytest.raises(ValidationError):
            compression_factor(0, 5, 100, 10)
        with pytest.raises(ValidationError):
            compression_factor(100, 5, 100, 0)
