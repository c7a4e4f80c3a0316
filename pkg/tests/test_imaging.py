"""Image-space aggregation, uncertainty/error maps, grayscale encoding, PNG."""

import numpy as np
import pytest

from uqvol.imaging import (
    SCALE_CONSISTENT,
    aggregate,
    consistent_scale,
    error_map,
    image_psnr_rmse,
    quantize_u8,
    read_png,
    to_grayscale,
    write_png,
)
from uqvol.render.image import RGBImage


def random_images(m, h=4, w=4, seed=0):
    rng = np.random.default_rng(seed)
    return [RGBImage(rng.uniform(0, 1, (h, w, 3))) for _ in range(m)]


class TestAggregate:
    def test_identical_images_have_zero_uncertainty(self):
        img = random_images(1)[0]
        out = aggregate([img, img, img])
        # mean-of-three rounds in the last ulp, so "zero" means the
        # float64 accumulation floor; the display scale must not amplify it
        assert out.combined.max() <= 1e-15
        assert all(s.max() <= 1e-15 for s in out.channel_std)
        assert np.allclose(out.mean.pixels, img.pixels, atol=1e-15)
        assert out.normalization_scale == 1.0
        assert np.array_equal(
            to_grayscale(out.combined, out.normalization_scale),
            np.full(out.combined.shape, 255, dtype=np.uint8),
        )

    def test_two_point_pixel(self):
        a = np.zeros((1, 1, 3))
        b = np.zeros((1, 1, 3))
        a[0, 0, 0] = 0.0
        b[0, 0, 0] = 1.0
        out = aggregate([RGBImage(a), RGBImage(b)])
        assert out.mean.pixels[0, 0, 0] == 0.5
        assert out.channel_std[0][0, 0] == 0.5

    def test_matches_per_pixel_brute_force(self):
        images = random_images(5, seed=3)
        out = aggregate(images)
        for y, x, c in [(0, 0, 0), (3, 2, 1), (1, 3, 2)]:
            vals = [im.pixels[y, x, c] for im in images]
            mean = sum(vals) / 5
            std = np.sqrt(sum((v - mean) ** 2 for v in vals) / 5)
            assert out.mean.pixels[y, x, c] == pytest.approx(mean, abs=1e-12)
            assert out.channel_std[c][y, x] == pytest.approx(std, abs=1e-12)

    def test_combined_is_channel_mean_of_stds(self):
        out = aggregate(random_images(6, seed=4))
        expected = (out.channel_std[0] + out.channel_std[1] + out.channel_std[2]) / 3.0
        assert np.max(np.abs(out.combined - expected)) <= 1e-12

    def test_zero_combined_implies_zero_per_channel(self):
        # stack agreeing on some pixels only
        images = random_images(4, seed=5)
        frozen = images[0].pixels.copy()
        stacked = [im.pixels.copy() for im in images]
        for arr in stacked:
            arr[0, 0] = frozen[0, 0]
            arr[2, 3] = frozen[2, 3]
        out = aggregate([RGBImage(a) for a in stacked])
        zero_mask = out.combined == 0.0
        assert zero_mask[0, 0] and zero_mask[2, 3]
        for c in range(3):
            assert not out.channel_std[c][zero_mask].any()

    def test_permutation_invariant(self):
        images = random_images(7, seed=6)
        a = aggregate(images)
        b = aggregate([images[i] for i in [5, 2, 0, 6, 1, 4, 3]])
        assert np.max(np.abs(a.mean.pixels - b.mean.pixels)) <= 1e-12
        assert np.max(np.abs(a.combined - b.combined)) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            aggregate([RGBImage(np.zeros((2, 2, 3))), RGBImage(np.zeros((3, 3, 3)))])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestErrorMap:
    def test_equal_images_have_zero_error(self):
        img = random_images(1, seed=7)[0]
        assert not error_map(img, img).any()

    def test_white_vs_black_is_one(self):
        white = RGBImage(np.ones((2, 2, 3)))
        black = RGBImage(np.zeros((2, 2, 3)))
        assert np.array_equal(error_map(white, black), np.ones((2, 2)))

    def test_matches_brute_force(self):
        gt, pred = random_images(2, seed=8)
        err = error_map(gt, pred)
        y, x = 2, 1
        expected = sum(abs(gt.pixels[y, x, c] - pred.pixels[y, x, c]) for c in range(3)) / 3
        assert err[y, x] == pytest.approx(expected, abs=1e-12)


class TestGrayscale:
    def test_zero_map_is_white(self):
        img = to_grayscale(np.zeros((3, 3)), scale=1.0)
        assert np.array_equal(img, np.full((3, 3), 255, dtype=np.uint8))

    def test_full_scale_is_black(self):
        img = to_grayscale(np.full((2, 2), 0.7), scale=0.7)
        assert np.array_equal(img, np.zeros((2, 2), dtype=np.uint8))

    def test_shared_scale_preserves_darkness_ordering(self):
        rng = np.random.default_rng(9)
        map_a = rng.uniform(0, 0.5, (4, 4))
        map_b = rng.uniform(0, 1.0, (4, 4))
        scale = max(map_a.max(), map_b.max())
        img_a = to_grayscale(map_a, scale)
        img_b = to_grayscale(map_b, scale)
        vals = np.concatenate([map_a.ravel(), map_b.ravel()])
        intens = np.concatenate([img_a.ravel(), img_b.ravel()]).astype(float)
        order = np.argsort(vals)
        # higher uncertainty never encodes brighter than lower uncertainty
        assert np.all(np.diff(intens[order]) <= 0 + 255 * 1e-9 + 1)  # allow 1-level rounding ties

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            to_grayscale(np.array([[-0.1]]), scale=1.0)

    def test_consistent_scale_stamps_sets(self):
        sets = [aggregate(random_images(3, seed=s)) for s in (1, 2)]
        scale = consistent_scale(sets)
        assert all(s.normalization_scale == scale for s in sets)
        assert all(s.scale_mode == SCALE_CONSISTENT for s in sets)
        assert scale >= max(s.combined.max() for s in sets)


class TestImageMetrics:
    def test_identical_images(self):
        img = random_images(1, seed=10)[0]
        psnr, rmse = image_psnr_rmse(img, img)
        assert rmse == 0.0 and psnr == float("inf")

    def test_white_vs_black_is_zero_db(self):
        white = RGBImage(np.ones((4, 4, 3)))
        black = RGBImage(np.zeros((4, 4, 3)))
        psnr, rmse = image_psnr_rmse(white, black)
        assert rmse == 255.0
        assert psnr == pytest.approx(0.0, abs=1e-12)

    def test_matches_brute_force_in_8bit_units(self):
        gt, pred = random_images(2, h=6, w=5, seed=11)
        psnr, rmse = image_psnr_rmse(gt, pred)
        qa = quantize_u8(gt).astype(np.float64)
        qb = quantize_u8(pred).astype(np.float64)
        mse = 0.0
        for v1, v2 in zip(qa.ravel(), qb.ravel()):
            mse += (v1 - v2) ** 2
        mse /= qa.size
        assert rmse == pytest.approx(np.sqrt(mse), abs=1e-9)
        assert psnr == pytest.approx(20 * np.log10(255.0 / np.sqrt(mse)), abs=1e-9)


class TestPng:
    def test_rgb_round_trip(self, tmp_path):
        img = random_images(1, h=8, w=5, seed=12)[0]
        path = tmp_path / "mean.png"
        write_png(img, path)
        assert np.array_equal(read_png(path), quantize_u8(img))

    def test_grayscale_round_trip(self, tmp_path):
        gray = to_grayscale(np.random.default_rng(13).uniform(0, 1, (6, 7)), scale=1.0)
        path = tmp_path / "uncertainty.png"
        write_png(gray, path)
        decoded = read_png(path)
        assert decoded.ndim == 2
        assert np.array_equal(decoded, gray)

    def test_bytes_are_deterministic(self, tmp_path):
        img = random_images(1, seed=14)[0]
        p1, p2 = tmp_path / "a.png", tmp_path / "b.png"
        write_png(img, p1)
        write_png(img, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_large_image_decodes(self, tmp_path):
        rng = np.random.default_rng(15)
        img = RGBImage(rng.uniform(0, 1, (512, 512, 3)))
        path = tmp_path / "big.png"
        write_png(img, path)
        decoded = read_png(path)
        assert decoded.shape == (512, 512, 3)
        assert decoded.dtype == np.uint8
