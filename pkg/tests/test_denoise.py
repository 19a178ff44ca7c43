import numpy as np
import pytest

from depthkit import (
    DepthMap,
    FilterConfig,
    adaptive_bilateral_filter,
    adaptive_sigma,
    bilateral_filter,
    gaussian_filter,
)


def brute_force_bilateral(z, valid, sigma_s, radius, sigma_d=None, k=None):
    """Independent per-pixel loop implementation used as the oracle."""
    h, w = z.shape
    out = np.zeros_like(z)
    for py in range(h):
        for px in range(w):
            if not valid[py, px]:
                continue
            if k is not None:
                sd = k * z[py, px] ** 2
            else:
                sd = sigma_d
            num = den = 0.0
            for qy in range(max(0, py - radius), min(h, py + radius + 1)):
                for qx in range(max(0, px - radius), min(w, px + radius + 1)):
                    if not valid[qy, qx]:
                        continue
                    wgt = np.exp(-((qx - px) ** 2 + (qy - py) ** 2) / (2 * sigma_s**2))
                    if sd is not None:
                        wgt *= np.exp(-((z[qy, qx] - z[py, px]) ** 2) / (2 * sd**2))
                    num += wgt * z[qy, qx]
                    den += wgt
            out[py, px] = num / den
    return out


class TestConfig:
    def test_radius_defaults_to_three_sigma(self):
        assert FilterConfig(sigma_s=3.0).radius == 9
        assert FilterConfig(sigma_s=1.5).radius == 5

    def test_rejects_both_range_parameters(self):
        with pytest.raises(ValueError):
            FilterConfig(sigma_s=2.0, sigma_d=5.0, k=1e-6)

    def test_rejects_zero_k(self):
        with pytest.raises(ValueError):
            FilterConfig(sigma_s=2.0, k=0.0)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            FilterConfig(sigma_s=0.0)
        with pytest.raises(ValueError):
            FilterConfig(sigma_s=2.0, sigma_d=-1.0)

    def test_filters_require_their_parameter(self):
        m = DepthMap.from_array(np.full((4, 4), 100.0))
        with pytest.raises(ValueError):
            bilateral_filter(m, FilterConfig(sigma_s=1.0))
        with pytest.raises(ValueError):
            adaptive_bilateral_filter(m, FilterConfig(sigma_s=1.0, sigma_d=2.0))


class TestIdentityAndBounds:
    @pytest.fixture
    def constant_map(self):
        return DepthMap.from_array(np.full((16, 20), 1234.5))

    def test_identity_on_constant(self, constant_map):
        cfgs = [
            (gaussian_filter, FilterConfig(sigma_s=2.0)),
            (bilateral_filter, FilterConfig(sigma_s=2.0, sigma_d=7.0)),
            (adaptive_bilateral_filter, FilterConfig(sigma_s=2.0, k=1e-5)),
        ]
        for fn, cfg in cfgs:
            out = fn(constant_map, cfg)
            np.testing.assert_allclose(out.z, 1234.5, atol=1e-9)

    def test_output_within_window_extremes(self):
        rng = np.random.default_rng(5)
        z = rng.uniform(500, 1500, size=(24, 24))
        m = DepthMap.from_array(z)
        cfg = FilterConfig(sigma_s=1.5, sigma_d=200.0)
        out = bilateral_filter(m, cfg)
        r = cfg.radius
        for py in range(24):
            for px in range(24):
                win = z[max(0, py - r) : py + r + 1, max(0, px - r) : px + r + 1]
                assert win.min() - 1e-9 <= out.z[py, px] <= win.max() + 1e-9

    def test_validity_mask_preserved(self):
        rng = np.random.default_rng(6)
        z = rng.uniform(500, 1500, size=(20, 20))
        z[rng.random(size=z.shape) < 0.25] = 0.0
        m = DepthMap.from_array(z)
        for fn, cfg in [
            (gaussian_filter, FilterConfig(sigma_s=1.0)),
            (bilateral_filter, FilterConfig(sigma_s=1.0, sigma_d=50.0)),
            (adaptive_bilateral_filter, FilterConfig(sigma_s=1.0, k=1e-5)),
        ]:
            out = fn(m, cfg)
            np.testing.assert_array_equal(out.valid, m.valid)
            assert (out.z[~out.valid] == 0).all()


class TestGaussian:
    def test_impulse_attenuated(self):
        z = np.full((15, 15), 1000.0)
        z[7, 7] += 10.0
        out = gaussian_filter(DepthMap.from_array(z), FilterConfig(sigma_s=1.5))
        # linear filter response: center weight over total kernel mass
        assert 1000.0 < out.z[7, 7] < 1010.0
        assert out.z[7, 7] - 1000.0 < 10.0 * 0.2

    def test_step_edge_blurred(self):
        z = np.full((9, 30), 600.0)
        z[:, 15:] = 1500.0
        out = gaussian_filter(DepthMap.from_array(z), FilterConfig(sigma_s=1.5))
        mid = out.z[4, 12:18]
        assert ((mid > 610) & (mid < 1490)).any()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(500, 700, size=(12, 14))
        z[rng.random(size=z.shape) < 0.15] = 0.0
        m = DepthMap.from_array(z)
        cfg = FilterConfig(sigma_s=1.2, radius=3)
        expected = brute_force_bilateral(m.z, m.valid, 1.2, 3)
        out = gaussian_filter(m, cfg)
        np.testing.assert_allclose(out.z[m.valid], expected[m.valid], rtol=1e-12)


class TestBilateral:
    def test_step_edge_preserved(self):
        sigma_d = 90.0
        z = np.full((9, 30), 600.0)
        z[:, 15:] = 600.0 + 10 * sigma_d  # jump of 10 sigma_d
        out = bilateral_filter(
            DepthMap.from_array(z), FilterConfig(sigma_s=2.0, sigma_d=sigma_d)
        )
        jump = 10 * sigma_d
        assert np.abs(out.z[:, :15] - 600.0).max() < 0.01 * jump
        assert np.abs(out.z[:, 15:] - (600.0 + jump)).max() < 0.01 * jump

    def test_huge_sigma_d_reduces_to_gaussian(self):
        rng = np.random.default_rng(8)
        z = rng.uniform(500, 1500, size=(18, 18))
        m = DepthMap.from_array(z)
        blurry = gaussian_filter(m, FilterConfig(sigma_s=2.0))
        nearly = bilateral_filter(m, FilterConfig(sigma_s=2.0, sigma_d=1e12))
        np.testing.assert_allclose(nearly.z, blurry.z, atol=1e-6)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(9)
        z = rng.uniform(500, 700, size=(12, 14))
        z[rng.random(size=z.shape) < 0.15] = 0.0
        m = DepthMap.from_array(z)
        cfg = FilterConfig(sigma_s=1.2, radius=3, sigma_d=40.0)
        expected = brute_force_bilateral(m.z, m.valid, 1.2, 3, sigma_d=40.0)
        out = bilateral_filter(m, cfg)
        np.testing.assert_allclose(out.z[m.valid], expected[m.valid], rtol=1e-12)


class TestAdaptive:
    def test_matches_bilateral_on_uniform_depth_sigma(self):
        # all depths equal: adaptive sigma is constant, so outputs coincide
        rng = np.random.default_rng(10)
        z = np.full((10, 10), 900.0)
        m = DepthMap.from_array(z)
        k = 2e-6
        a = adaptive_bilateral_filter(m, FilterConfig(sigma_s=1.5, k=k))
        b = bilateral_filter(m, FilterConfig(sigma_s=1.5, sigma_d=k * 900.0**2))
        np.testing.assert_array_equal(a.z, b.z)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        z = rng.uniform(500, 2500, size=(12, 14))
        z[rng.random(size=z.shape) < 0.15] = 0.0
        m = DepthMap.from_array(z)
        k = 8e-6
        cfg = FilterConfig(sigma_s=1.2, radius=3, k=k)
        expected = brute_force_bilateral(m.z, m.valid, 1.2, 3, k=k)
        out = adaptive_bilateral_filter(m, cfg)
        np.testing.assert_allclose(out.z[m.valid], expected[m.valid], rtol=1e-12)

    def test_sigma_scales_quadratically_with_depth(self):
        rng = np.random.default_rng(12)
        z = rng.uniform(400, 3000, size=(8, 8))
        m = DepthMap.from_array(z)
        lam = 1.7
        scaled = DepthMap.from_array(lam * z)
        k = 5e-6
        np.testing.assert_allclose(
            adaptive_sigma(scaled, k), lam**2 * adaptive_sigma(m, k), rtol=1e-12
        )

    def test_two_patch_contrast(self):
        # near (600) and far (1500) fronto-parallel patches pushed through
        # the jitter+quantization observation chain: adaptive must denoise
        # the far patch at least 2x better than a near-tuned bilateral,
        # without oversmoothing the near patch.
        from depthkit import CameraModel
        from depthkit.noise import round_half_away

        cam = CameraModel.kinect()
        rng = np.random.default_rng(13)
        h, w = 60, 120
        true = np.full((h, w), 600.0)
        true[:, 60:] = 1500.0
        d = cam.fb / true + rng.normal(0.0, 0.06, size=true.shape)
        d = round_half_away(d / cam.disparity_step) * cam.disparity_step
        noisy = round_half_away(cam.fb / d)
        m = DepthMap.from_array(noisy)
        k = 3 * cam.disparity_step / cam.fb
        sigma_near = k * 600.0**2
        bil = bilateral_filter(m, FilterConfig(sigma_s=1.5, sigma_d=sigma_near))
        ada = adaptive_bilateral_filter(m, FilterConfig(sigma_s=1.5, k=k))

        def rms(out, cols):
            r = out.z[6:-6, cols] - true[6:-6, cols]
            return float(np.sqrt(np.mean(r**2)))

        near_cols = slice(6, 54)
        far_cols = slice(66, 114)
        assert rms(ada, far_cols) <= 0.5 * rms(bil, far_cols)
        assert rms(ada, near_cols) <= 1.5 * rms(bil, near_cols)
