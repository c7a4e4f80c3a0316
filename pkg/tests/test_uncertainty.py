"""Realization stacks, mean/std summaries, and volume-space PSNR/RMSE."""

import numpy as np
import pytest

from uqvol.network import FieldTopology, init_params
from uqvol.training import TrainConfig, train_single
from uqvol.uncertainty import (
    FieldSummary,
    RealizationStack,
    psnr_rmse,
    reconstruct_deterministic,
    reconstruct_ensemble,
    reconstruct_mc,
    summarize,
)
from uqvol.volume import GridSpec, Normalizer, Volume, generate_teardrop, make_normalizer


def volume_of(arr, **kw):
    return Volume(np.asarray(arr, dtype=np.float32), **kw)


def random_stack(m=7, n=8, seed=0):
    rng = np.random.default_rng(seed)
    vols = [volume_of(rng.normal(size=(n, n, n))) for _ in range(m)]
    return RealizationStack(method="ensemble", realizations=vols)


class TestSummarize:
    def test_two_point_voxel(self):
        stack = RealizationStack(
            "ensemble", [volume_of(np.zeros((1, 1, 1))), volume_of(np.ones((1, 1, 1)))]
        )
        summary = summarize(stack)
        assert summary.mean_volume.values[0, 0, 0] == 0.5
        assert summary.std_volume.values[0, 0, 0] == 0.5

    def test_identical_realizations_have_zero_std(self):
        base = np.random.default_rng(1).normal(size=(4, 4, 4))
        stack = RealizationStack("ensemble", [volume_of(base)] * 5)
        summary = summarize(stack)
        assert not summary.std_volume.values.any()

    def test_four_point_voxel_population_std(self):
        vols = [volume_of(np.full((1, 1, 1), v)) for v in (1.0, 2.0, 3.0, 4.0)]
        summary = summarize(RealizationStack("mcdropout", vols, inference_rate=0.1))
        assert summary.mean_volume.values[0, 0, 0] == pytest.approx(2.5)
        assert summary.std_volume.values[0, 0, 0] == pytest.approx(np.sqrt(1.25))

    def test_single_realization_std_is_zero(self):
        stack = random_stack(m=1)
        assert not summarize(stack).std_volume.values.any()

    def test_matches_two_pass_brute_force(self):
        stack = random_stack(m=7, n=8, seed=5)
        summary = summarize(stack)
        data = [v.values.astype(np.float64) for v in stack.realizations]
        nx, ny, nz = stack.grid.dims
        for i, j, k in [(0, 0, 0), (3, 1, 7), (7, 7, 7), (2, 6, 4)]:
            xs = [d[i, j, k] for d in data]
            mean = sum(xs) / len(xs)
            var = sum((x - mean) ** 2 for x in xs) / len(xs)
            assert summary.mean_volume.values[i, j, k] == pytest.approx(mean, abs=1e-12)
            assert summary.std_volume.values[i, j, k] == pytest.approx(
                np.sqrt(var), abs=1e-12
            )

    def test_permutation_invariant(self):
        stack = random_stack(m=7, n=8, seed=6)
        shuffled = RealizationStack(
            stack.method, [stack.realizations[i] for i in [4, 0, 6, 2, 5, 1, 3]]
        )
        a = summarize(stack)
        b = summarize(shuffled)
        assert np.max(np.abs(a.mean_volume.values - b.mean_volume.values)) <= 1e-12
        assert np.max(np.abs(a.std_volume.values - b.std_volume.values)) <= 1e-12

    def test_std_nonnegative_and_dims_match(self):
        stack = random_stack()
        summary = summarize(stack)
        assert np.all(summary.std_volume.values >= 0)
        assert summary.mean_volume.dims == stack.grid.dims

    def test_mismatched_dims_rejected(self):
        with pytest.raises(ValueError):
            RealizationStack(
                "ensemble",
                [volume_of(np.zeros((2, 2, 2))), volume_of(np.zeros((3, 3, 3)))],
            )


class TestPsnrRmse:
    def test_identical_volumes(self):
        v = volume_of(np.random.default_rng(2).normal(size=(4, 4, 4)))
        psnr, rmse = psnr_rmse(v, v)
        assert rmse == 0.0
        assert psnr == float("inf")

    def test_unit_range_tenth_rmse_is_20db(self):
        ref = volume_of([[[0.0, 1.0]]])
        cand = volume_of([[[0.1, 1.1]]])
        psnr, rmse = psnr_rmse(ref, cand)
        assert rmse == pytest.approx(0.1)
        assert psnr == pytest.approx(20.0)

    def test_matches_brute_force_mse(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(8, 8, 8))
        b = rng.normal(size=(8, 8, 8))
        psnr, rmse = psnr_rmse(volume_of(a), volume_of(b))
        a32, b32 = a.astype(np.float32), b.astype(np.float32)
        mse = 0.0
        for x, y in zip(a32.ravel(), b32.ravel()):
            mse += (float(x) - float(y)) ** 2
        mse /= a32.size
        assert rmse == pytest.approx(np.sqrt(mse), abs=1e-12)
        peak = float(a32.max()) - float(a32.min())
        assert psnr == pytest.approx(20.0 * np.log10(peak / np.sqrt(mse)), abs=1e-9)

    def test_psnr_decreases_with_rmse(self):
        ref = volume_of(np.linspace(0, 1, 64).reshape(4, 4, 4))
        noisy = [
            volume_of(ref.values + eps * np.ones((4, 4, 4), dtype=np.float32))
            for eps in (0.01, 0.05, 0.2)
        ]
        psnrs = [psnr_rmse(ref, n)[0] for n in noisy]
        assert psnrs[0] > psnrs[1] > psnrs[2]

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            psnr_rmse(volume_of(np.zeros((2, 2, 2))), volume_of(np.zeros((3, 3, 3))))


@pytest.fixture(scope="module")
def trained_tiny():
    volume = generate_teardrop(8)
    topo = FieldTopology(hidden_width=12, n_blocks=3)
    cfg = TrainConfig(batch_size=128, lr=5e-4, epochs=120, train_dropout=0.05, seed=2)
    params, _ = train_single(volume, topo, cfg)
    return volume, params


class TestReconstruct:
    def test_mc_is_deterministic_per_seed(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        a = reconstruct_mc(params, volume.grid, norm, m=3, rate=0.2, seed=11)
        b = reconstruct_mc(params, volume.grid, norm, m=3, rate=0.2, seed=11)
        for va, vb in zip(a.realizations, b.realizations):
            assert np.array_equal(va.values, vb.values)
        assert a.seeds == [11, 12, 13]

    def test_vanishing_rate_approaches_deterministic(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        det = reconstruct_deterministic(params, volume.grid, norm)
        near = reconstruct_mc(params, volume.grid, norm, m=1, rate=1e-12, seed=0)
        assert np.max(np.abs(det.values - near.realizations[0].values)) < 1e-5

    def test_mc_realizations_vary(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        stack = reconstruct_mc(params, volume.grid, norm, m=2, rate=0.2, seed=4)
        assert not np.array_equal(
            stack.realizations[0].values, stack.realizations[1].values
        )

    def test_ensemble_single_member_equals_plain_reconstruction(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        stack = reconstruct_ensemble([params], volume.grid, norm)
        det = reconstruct_deterministic(params, volume.grid, norm)
        assert stack.m == 1
        assert np.array_equal(stack.realizations[0].values, det.values)

    def test_identical_members_give_zero_std(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        stack = reconstruct_ensemble([params, params, params], volume.grid, norm)
        assert not summarize(stack).std_volume.values.any()

    def test_geometry_is_preserved(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        det = reconstruct_deterministic(params, volume.grid, norm)
        assert det.grid == volume.grid

    def test_subset_takes_prefix(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        stack = reconstruct_mc(params, volume.grid, norm, m=4, rate=0.2, seed=0)
        sub = stack.subset(2)
        assert sub.m == 2
        assert np.array_equal(
            sub.realizations[1].values, stack.realizations[1].values
        )
        assert sub.seeds == stack.seeds[:2]

    def test_invalid_rate_rejected(self, trained_tiny):
        volume, params = trained_tiny
        norm = make_normalizer(volume)
        with pytest.raises(ValueError):
            reconstruct_mc(params, volume.grid, norm, m=1, rate=0.0, seed=0)
