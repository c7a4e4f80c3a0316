"""Sinusoidal residual MLP: init, forward, dropout, backward, checkpoints.

The forward oracle below re-implements the layer math with plain loops so
regressions in the vectorized path cannot hide.
"""

import math

import numpy as np
import pytest

from uqvol.checkpoint import CheckpointError, load_params, save_params
from uqvol.network import (
    MODE_MC,
    MODE_TRAIN,
    DropoutState,
    FieldTopology,
    ParameterSet,
    StaleTape,
    backward,
    dropout_blocks_for_layout,
    forward,
    init_params,
)


def reference_forward(params, coords):
    """Straight-line scalar evaluation of the network, dropout off."""
    topo = params.topology
    omega = topo.omega0
    outs = []
    for x in coords:
        w_in, b_in = params.tensors[0], params.tensors[1]
        u = [
            math.sin(omega * (sum(x[i] * w_in[i, j] for i in range(topo.in_dim)) + b_in[j]))
            for j in range(topo.hidden_width)
        ]
        for blk in range(topo.n_blocks):
            w_a, b_a, w_b, b_b = params.block_tensors(blk)
            in_scale = 0.5 if blk > 0 else 1.0
            out_scale = 0.5 if blk == topo.n_blocks - 1 else 1.0
            t = [in_scale * v for v in u]
            z = [
                math.sin(omega * (sum(t[i] * w_a[i, j] for i in range(len(t))) + b_a[j]))
                for j in range(topo.hidden_width)
            ]
            w = [
                math.sin(omega * (sum(z[i] * w_b[i, j] for i in range(len(z))) + b_b[j]))
                for j in range(topo.hidden_width)
            ]
            u = [out_scale * (u[j] + w[j]) for j in range(topo.hidden_width)]
        w_out, b_out = params.tensors[-2], params.tensors[-1]
        outs.append(sum(u[i] * w_out[i, 0] for i in range(len(u))) + b_out[0])
    return np.array(outs)


class TestTopology:
    def test_default_dropout_blocks_are_last_two(self):
        topo = FieldTopology(n_blocks=10)
        assert topo.dropout_blocks == (8, 9)

    def test_layouts(self):
        assert dropout_blocks_for_layout(10, "last-two") == (8, 9)
        assert dropout_blocks_for_layout(10, "last-half") == (5, 6, 7, 8, 9)
        assert dropout_blocks_for_layout(10, "all") == tuple(range(10))
        assert dropout_blocks_for_layout(10, "none") == ()
        assert dropout_blocks_for_layout(1, "last-two") == (0,)

    def test_rejects_out_of_range_blocks(self):
        with pytest.raises(ValueError):
            FieldTopology(n_blocks=3, dropout_blocks=(3,))

    def test_default_parameter_count(self):
        topo = FieldTopology(in_dim=3, hidden_width=50, n_blocks=10)
        assert topo.n_params == 3 * 50 + 50 + 10 * 2 * (50 * 50 + 50) + 50 + 1
        assert topo.n_params == 51251


class TestInit:
    def test_deterministic_for_seed(self):
        topo = FieldTopology(hidden_width=8, n_blocks=2)
        a = init_params(topo, seed=5)
        b = init_params(topo, seed=5)
        for ta, tb in zip(a.tensors, b.tensors):
            assert np.array_equal(ta, tb)

    def test_seeds_differ(self):
        topo = FieldTopology(hidden_width=8, n_blocks=2)
        a = init_params(topo, seed=5)
        b = init_params(topo, seed=6)
        assert any(not np.array_equal(ta, tb) for ta, tb in zip(a.tensors, b.tensors))

    def test_first_layer_bound(self):
        topo = FieldTopology(in_dim=3, hidden_width=50, n_blocks=10)
        p = init_params(topo, seed=0)
        assert np.all(np.abs(p.tensors[0]) <= 1.0 / 3.0)

    def test_hidden_layer_and_bias_bounds(self):
        topo = FieldTopology(in_dim=3, hidden_width=50, n_blocks=2)
        p = init_params(topo, seed=0)
        bound = np.sqrt(6.0 / 50.0) / 30.0
        bias_bound = 1.0 / np.sqrt(50.0)
        for i in range(2):
            w_a, b_a, w_b, b_b = p.block_tensors(i)
            assert np.all(np.abs(w_a) <= bound)
            assert np.all(np.abs(w_b) <= bound)
            assert np.all(np.abs(b_a) <= bias_bound)
            assert np.all(np.abs(b_b) <= bias_bound)
        assert np.all(np.abs(p.tensors[-2]) <= bound)
        assert np.all(np.abs(p.tensors[1]) <= 1.0 / np.sqrt(3.0))


class TestForward:
    def test_all_zero_params_give_zero(self):
        topo = FieldTopology(hidden_width=4, n_blocks=2)
        p = init_params(topo, seed=0)
        zero = p.zeros_like()
        out, _ = forward(zero, np.random.default_rng(0).uniform(-1, 1, (7, 3)))
        assert np.array_equal(out, np.zeros(7))

    def test_matches_straight_line_oracle(self):
        topo = FieldTopology(in_dim=3, hidden_width=4, n_blocks=2)
        p = init_params(topo, seed=3, dtype=np.float64)
        x = np.random.default_rng(1).uniform(-1, 1, (5, 3))
        out, _ = forward(p, x)
        assert np.allclose(out, reference_forward(p, x), atol=1e-12)

    def test_train_mode_with_zero_rate_matches_off(self):
        topo = FieldTopology(hidden_width=6, n_blocks=3)
        p = init_params(topo, seed=2)
        x = np.random.default_rng(2).uniform(-1, 1, (10, 3)).astype(np.float32)
        off, _ = forward(p, x)
        train, _ = forward(p, x, DropoutState(rate=0.0, mode=MODE_TRAIN, seed=1))
        assert np.array_equal(off, train)

    def test_deterministic_given_mask_seed(self):
        topo = FieldTopology(hidden_width=6, n_blocks=3)
        p = init_params(topo, seed=2)
        x = np.random.default_rng(3).uniform(-1, 1, (10, 3)).astype(np.float32)
        a, _ = forward(p, x, DropoutState(rate=0.3, mode=MODE_MC, seed=9))
        b, _ = forward(p, x, DropoutState(rate=0.3, mode=MODE_MC, seed=9))
        c, _ = forward(p, x, DropoutState(rate=0.3, mode=MODE_MC, seed=10))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_off_mode_is_pure(self):
        topo = FieldTopology(hidden_width=6, n_blocks=2)
        p = init_params(topo, seed=4)
        x = np.random.default_rng(4).uniform(-1, 1, (8, 3)).astype(np.float32)
        snapshot = [t.copy() for t in p.tensors]
        a, _ = forward(p, x)
        b, _ = forward(p, x)
        assert np.array_equal(a, b)
        for t, s in zip(p.tensors, snapshot):
            assert np.array_equal(t, s)

    def test_shape_mismatch_rejected(self):
        topo = FieldTopology(hidden_width=4, n_blocks=1)
        p = init_params(topo, seed=0)
        with pytest.raises(ValueError):
            forward(p, np.zeros((5, 2)))

    def test_inverted_dropout_preserves_expectation(self):
        # mean over many masked passes of a fixed linear probe converges
        # to the unmasked value within 3 standard errors
        rate = 0.25
        rng = np.random.default_rng(11)
        activation = rng.uniform(0.2, 1.0, size=64)
        probe = rng.uniform(-1.0, 1.0, size=64)
        exact = float(activation @ probe)
        state = DropoutState(rate=rate, mode=MODE_MC, seed=123)
        n = 10_000
        samples = np.empty(n)
        for i in range(n):
            mask = state.draw_mask(activation.shape, np.dtype(np.float64))
            samples[i] = (activation * mask) @ probe
        stderr = samples.std(ddof=1) / np.sqrt(n)
        assert abs(samples.mean() - exact) <= 3.0 * stderr


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        topo = FieldTopology(hidden_width=5, n_blocks=2)
        p = init_params(topo, seed=1)
        x = np.random.default_rng(5).uniform(-1, 1, (6, 3)).astype(np.float32)
        _, tape = forward(p, x, want_tape=True)
        g = backward(p, tape, np.zeros(6))
        assert all(not t.any() for t in g.tensors)

    def test_final_bias_gradient_is_upstream_sum(self):
        topo = FieldTopology(hidden_width=5, n_blocks=2)
        p = init_params(topo, seed=1, dtype=np.float64)
        x = np.random.default_rng(6).uniform(-1, 1, (6, 3))
        _, tape = forward(p, x, want_tape=True)
        dl = np.random.default_rng(7).normal(size=6)
        g = backward(p, tape, dl)
        assert g.tensors[-1][0] == pytest.approx(dl.sum(), rel=1e-12)

    @pytest.mark.parametrize("dropout_on", [False, True])
    def test_matches_central_finite_differences(self, dropout_on):
        topo = FieldTopology(in_dim=3, hidden_width=8, n_blocks=3)
        p = init_params(topo, seed=42, dtype=np.float64)
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, (4, 3))
        dl = rng.normal(size=4)

        if dropout_on:
            # freeze one mask set so the finite-difference target is the
            # same deterministic function the tape recorded
            state = DropoutState(rate=0.4, mode=MODE_MC, seed=77)
            _, tape = forward(p, x, state, want_tape=True)
            masks = tape.masks
        else:
            _, tape = forward(p, x, want_tape=True)
            masks = None

        grads = backward(p, tape, dl)

        def central_diff(flat, k, eps):
            orig = flat[k]
            flat[k] = orig + eps
            up = _loss_with_masks(p, x, dl, masks)
            flat[k] = orig - eps
            dn = _loss_with_masks(p, x, dl, masks)
            flat[k] = orig
            return (up - dn) / (2.0 * eps)

        for t_idx, tensor in enumerate(p.tensors):
            flat = tensor.reshape(-1)
            gflat = grads.tensors[t_idx].reshape(-1)
            fd4 = np.array([central_diff(flat, k, 1e-4) for k in range(flat.size)])
            # at eps=1e-4 the oracle's own O(eps^2 * omega0^3) truncation
            # swamps near-zero entries, so compare at group level there and
            # per entry at a finer step
            group_rel = np.linalg.norm(fd4 - gflat) / max(np.linalg.norm(gflat), 1e-300)
            assert group_rel < 1e-4, f"tensor {t_idx}: group rel err {group_rel:.3e}"
            fd6 = np.array([central_diff(flat, k, 1e-6) for k in range(flat.size)])
            scale = np.abs(gflat).max()
            bound = 1e-4 * np.maximum(np.abs(fd6), np.abs(gflat)) + 1e-8 * max(scale, 1.0)
            assert np.all(np.abs(fd6 - gflat) <= bound), f"tensor {t_idx}: entry check"

    def test_stale_tape_rejected(self):
        topo_a = FieldTopology(hidden_width=5, n_blocks=2)
        topo_b = FieldTopology(hidden_width=6, n_blocks=2)
        pa = init_params(topo_a, seed=0)
        pb = init_params(topo_b, seed=0)
        x = np.random.default_rng(9).uniform(-1, 1, (4, 3)).astype(np.float32)
        _, tape = forward(pa, x, want_tape=True)
        with pytest.raises(StaleTape):
            backward(pb, tape, np.ones(4))


def _loss_with_masks(params, x, dl, masks):
    """dl . f(x) where f reuses the given dropout masks (None = off)."""
    topo = params.topology
    omega = params.dtype.type(topo.omega0)
    u = np.sin(omega * (x @ params.tensors[0] + params.tensors[1]))
    for i in range(topo.n_blocks):
        w_a, b_a, w_b, b_b = params.block_tensors(i)
        in_scale, out_scale = topo.block_scales(i)
        z = np.sin(omega * ((in_scale * u) @ w_a + b_a))
        w = np.sin(omega * (z @ w_b + b_b))
        if masks is not None and masks[i] is not None:
            w = w * masks[i]
        u = out_scale * (u + w)
    out = (u @ params.tensors[-2] + params.tensors[-1]).reshape(-1)
    return float(dl @ out)


class TestCheckpoint:
    def test_round_trip_preserves_outputs(self, tmp_path):
        topo = FieldTopology(in_dim=3, hidden_width=50, n_blocks=10)
        p = init_params(topo, seed=12)
        path = tmp_path / "model.ckpt"
        save_params(p, path, metadata={"seed": 12})
        back, manifest = load_params(path)
        assert manifest["seed"] == 12
        assert manifest["format_version"] == 1
        x = np.random.default_rng(10).uniform(-1, 1, (100, 3)).astype(np.float32)
        a, _ = forward(p, x)
        b, _ = forward(back, x)
        assert np.array_equal(a, b)

    def test_default_model_size_on_disk(self, tmp_path):
        topo = FieldTopology(in_dim=3, hidden_width=50, n_blocks=10)
        p = init_params(topo, seed=0)
        assert p.n_params == 51251
        path = tmp_path / "model.ckpt"
        save_params(p, path, metadata={"seed": 0, "value_range": [-2.0, 1.0]})
        size = path.stat().st_size
        assert 200_000 <= size <= 230_000

    def test_truncated_blob_rejected(self, tmp_path):
        topo = FieldTopology(hidden_width=8, n_blocks=2)
        p = init_params(topo, seed=0)
        path = tmp_path / "model.ckpt"
        save_params(p, path)
        data = path.read_bytes()
        path.write_bytes(data[:-40])
        with pytest.raises(CheckpointError):
            load_params(path)

    def test_garbage_file_rejected(self, tmp_path):
        path = tmp_path / "noise.ckpt"
        path.write_bytes(b"definitely not a checkpoint")
        with pytest.raises(CheckpointError):
            load_params(path)
