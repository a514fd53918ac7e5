import math

import numpy as np
import pytest

from connectx_lab.neural import (
    Adam, CorruptFileError, InvalidTargetError, Network, ShapeMismatchError,
    VersionMismatchError, load_checkpoint, loss, loss_and_grads, masked_log_softmax,
    save_checkpoint,
)


def batch_inputs(rng, batch=3):
    return rng.random((batch, 12, 12, 3))


def training_targets(rng, batch=3, legal=7):
    mask = np.zeros((batch, 12), dtype=bool)
    mask[:, :legal] = True
    pi = rng.random((batch, 12)) * mask
    pi /= pi.sum(axis=1, keepdims=True)
    z = rng.choice([-1.0, 0.0, 1.0], size=(batch, 1))
    return pi, z, mask


def network_loss(net, x, pi, z, mask):
    logits, values = net.forward(x)
    return loss_and_grads(logits, values, pi, z, mask)


def numeric_grad(net, x, pi, z, mask, param, index, h=1e-5):
    original = param[index]
    param[index] = original + h
    up = network_loss(net, x, pi, z, mask)[0]
    param[index] = original - h
    down = network_loss(net, x, pi, z, mask)[0]
    param[index] = original
    return (up - down) / (2 * h)


class TestForward:
    def test_zero_final_layers_give_neutral_outputs(self):
        net = Network(seed=0)
        net.policy_head.w[...] = 0.0
        net.policy_head.b[...] = 0.0
        net.value_head.w[...] = 0.0
        net.value_head.b[...] = 0.0
        x = batch_inputs(np.random.default_rng(0), batch=2)
        logits, values = net.forward(x)
        assert np.all(values == 0.0)
        mask = np.ones((2, 12), dtype=bool)
        probs = np.exp(masked_log_softmax(logits, mask))
        assert np.allclose(probs, 1.0 / 12.0)

    def test_identical_states_identical_rows(self):
        net = Network(seed=1)
        row = np.random.default_rng(1).random((1, 12, 12, 3))
        x = np.concatenate([row, row])
        logits, values = net.forward(x)
        assert np.array_equal(logits[0], logits[1])
        assert np.array_equal(values[0], values[1])

    def test_outputs_finite_and_value_inside_unit_interval(self):
        net = Network(seed=2)
        rng = np.random.default_rng(2)
        for _ in range(5):
            logits, values = net.forward(batch_inputs(rng, batch=4))
            assert np.all(np.isfinite(logits))
            assert np.all(np.abs(values) < 1.0)

    def test_shape_mismatch_rejected(self):
        net = Network()
        with pytest.raises(ShapeMismatchError):
            net.forward(np.zeros((2, 6, 7, 3)))
        with pytest.raises(ShapeMismatchError):
            net.forward(np.zeros((12, 12, 3)))


class TestLoss:
    def test_minimum_is_target_entropy(self):
        rng = np.random.default_rng(3)
        pi, _, mask = training_targets(rng, batch=2)
        # logits realizing the target distribution exactly, values equal to z
        logits = np.where(mask, np.log(np.where(pi > 0, pi, 1.0)), -40.0)
        z = np.array([[0.5], [-0.25]])
        values = z.copy()
        entropy = float(-(pi[pi > 0] * np.log(pi[pi > 0])).sum() / 2)
        assert loss(logits, values, pi, z, mask) == pytest.approx(entropy, rel=1e-12)

    def test_one_hot_limit_drives_loss_to_zero(self):
        mask = np.ones((1, 12), dtype=bool)
        pi = np.zeros((1, 12))
        pi[0, 3] = 1.0
        logits = np.zeros((1, 12))
        logits[0, 3] = 50.0
        values = np.array([[1.0]])
        z = np.array([[1.0]])
        assert loss(logits, values, pi, z, mask) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_seven_column_spot_value(self):
        mask = np.zeros((1, 12), dtype=bool)
        mask[0, :7] = True
        pi = np.where(mask, 1.0 / 7.0, 0.0)
        total = loss(np.zeros((1, 12)), np.zeros((1, 1)), pi, np.array([[1.0]]), mask)
        assert abs(total - (1.0 + math.log(7.0))) < 1e-9

    def test_mass_on_illegal_column_rejected(self):
        mask = np.zeros((1, 12), dtype=bool)
        mask[0, :7] = True
        pi = np.zeros((1, 12))
        pi[0, 8] = 1.0
        with pytest.raises(InvalidTargetError):
            loss(np.zeros((1, 12)), np.zeros((1, 1)), pi, np.array([[1.0]]), mask)

    def test_rows_must_sum_to_one(self):
        mask = np.ones((1, 12), dtype=bool)
        pi = np.full((1, 12), 0.01)
        with pytest.raises(InvalidTargetError):
            loss(np.zeros((1, 12)), np.zeros((1, 1)), pi, np.array([[0.0]]), mask)

    def test_masked_softmax_rows_normalized_with_zero_masked_mass(self):
        rng = np.random.default_rng(4)
        logits = rng.normal(size=(5, 12)) * 3
        mask = rng.random((5, 12)) > 0.4
        mask[:, 0] = True  # keep at least one legal entry
        probs = np.exp(masked_log_softmax(logits, mask))
        assert np.allclose(probs.sum(axis=1), 1.0)
        assert np.all(probs[~mask] == 0.0)


class TestBackward:
    def test_single_parameter_toy_layer(self):
        # one-weight linear model through the value path: loss = (tanh(w*x) - z)^2
        w = 0.3
        x = 0.7
        z = -0.5
        v = math.tanh(w * x)
        analytic = 2 * (v - z) * (1 - v * v) * x
        h = 1e-5
        up = (math.tanh((w + h) * x) - z) ** 2
        down = (math.tanh((w - h) * x) - z) ** 2
        numeric = (up - down) / (2 * h)
        assert abs(analytic - numeric) / max(abs(analytic), abs(numeric)) < 1e-6

    def test_gradients_match_finite_differences_all_layers(self):
        net = Network(seed=5)
        rng = np.random.default_rng(5)
        x = batch_inputs(rng, batch=2)
        pi, z, mask = training_targets(rng, batch=2)
        _, dlogits, dvalues = network_loss(net, x, pi, z, mask)
        net.forward(x)
        grads = net.backward(dlogits, dvalues)
        params = net.params()
        for pidx in range(len(params)):
            param = params[pidx]
            flat_indices = rng.choice(param.size, size=min(4, param.size), replace=False)
            for flat in flat_indices:
                index = np.unravel_index(flat, param.shape)
                numeric = numeric_grad(net, x, pi, z, mask, param, index)
                analytic = grads[pidx][index]
                rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-8)
                assert rel < 1e-4, (Network.PARAM_NAMES[pidx], index, numeric, analytic)

    def test_value_bias_gradient_on_saturating_batch(self):
        # zero the input and every layer before the value head: loss reduces to
        # (tanh(b) - z)^2 and the bias gradient is the plain chain rule on it
        net = Network(seed=6)
        for p in net.params():
            p[...] = 0.0
        b = 0.2
        net.value_head.b[0] = b
        x = np.zeros((1, 12, 12, 3))
        pi = np.full((1, 12), 1 / 12)
        z = np.array([[1.0]])
        mask = np.ones((1, 12), dtype=bool)
        _, dlogits, dvalues = network_loss(net, x, pi, z, mask)
        net.forward(x)
        grads = net.backward(dlogits, dvalues)
        v = math.tanh(b)
        expected = 2 * (v - 1.0) * (1 - v * v)
        assert grads[-1][0] == pytest.approx(expected, rel=1e-12)

    def test_backward_requires_matching_batch(self):
        net = Network(seed=0)
        net.forward(np.zeros((2, 12, 12, 3)))
        with pytest.raises(ShapeMismatchError):
            net.backward(np.zeros((3, 12)), np.zeros((3, 1)))


class TestAdam:
    def test_first_step_magnitude(self):
        params = [np.zeros((4, 4))]
        adam = Adam(params, lr=1e-3)
        adam.step(params, [np.ones((4, 4))])
        expected = -1e-3 * (1.0 / (1.0 + 1e-8))
        assert np.allclose(params[0], expected, rtol=1e-12)

    def test_zero_gradient_keeps_parameters(self):
        params = [np.full((3,), 7.0)]
        adam = Adam(params)
        adam.step(params, [np.zeros(3)])
        assert np.array_equal(params[0], np.full((3,), 7.0))
        assert adam.t == 1

    def test_constant_gradient_steps_equal_and_corrections_decay(self):
        # hand evaluation of steps 1 and 2 with g = 1: m_hat = v_hat = 1 at every
        # step, because both bias corrections cancel exactly for a constant
        # gradient, so the step size is the same; what decays is the correction
        # factor itself
        params = [np.zeros(1)]
        adam = Adam(params, lr=1e-3)
        adam.step(params, [np.ones(1)])
        first = params[0].copy()
        m_after_1 = adam.m[0].copy()
        adam.step(params, [np.ones(1)])
        second = params[0] - first
        assert first[0] == pytest.approx(second[0], rel=1e-9)
        correction_1 = 1.0 - 0.9 ** 1
        correction_2 = 1.0 - 0.9 ** 2
        assert m_after_1[0] / correction_1 == pytest.approx(1.0)
        assert adam.m[0][0] / correction_2 == pytest.approx(1.0)
        assert correction_2 > correction_1  # the bias correction decays toward 1

    def test_changing_gradients_change_step_size(self):
        params = [np.zeros(1)]
        adam = Adam(params, lr=1e-3)
        adam.step(params, [np.ones(1)])
        first = params[0].copy()
        adam.step(params, [np.full(1, 0.1)])
        second = params[0] - first
        assert not np.isclose(first[0], second[0])

    def test_shape_mismatch(self):
        params = [np.zeros((2, 2))]
        adam = Adam(params)
        with pytest.raises(ShapeMismatchError):
            adam.step(params, [np.zeros(3)])


class TestTrainingSanity:
    def test_loss_non_increasing_when_overfitting_fixed_batch(self):
        net = Network(seed=7)
        rng = np.random.default_rng(7)
        x = batch_inputs(rng, batch=8)
        pi, z, mask = training_targets(rng, batch=8)
        adam = Adam(net.params(), lr=1e-4)
        losses = []
        for _ in range(50):
            total, dlogits, dvalues = network_loss(net, x, pi, z, mask)
            grads = net.backward(dlogits, dvalues)
            adam.step(net.params(), grads)
            losses.append(total)
        for before, after in zip(losses, losses[1:]):
            assert after <= before + 1e-12
        assert losses[-1] < losses[0]


class TestCheckpoints:
    def test_round_trip_preserves_forward_outputs(self, tmp_path):
        net = Network(seed=8)
        adam = Adam(net.params(), lr=2e-3)
        adam.step(net.params(), [np.full_like(p, 0.01) for p in net.params()])
        probe = batch_inputs(np.random.default_rng(8), batch=2)
        logits, values = net.forward(probe)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net, adam, metadata={"iteration": 7, "lineage": "iter7"})
        loaded, loaded_adam, metadata = load_checkpoint(path)
        logits2, values2 = loaded.forward(probe)
        assert np.array_equal(logits, logits2)
        assert np.array_equal(values, values2)
        assert metadata == {"iteration": 7, "lineage": "iter7"}
        assert loaded_adam.t == adam.t
        assert loaded_adam.lr == adam.lr
        assert all(np.array_equal(a, b) for a, b in zip(loaded_adam.m, adam.m))

    def test_truncated_file_detected(self, tmp_path):
        net = Network(seed=9)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net)
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) // 2])
        with pytest.raises(CorruptFileError):
            load_checkpoint(path)

    def test_flipped_byte_detected(self, tmp_path):
        net = Network(seed=9)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net)
        blob = bytearray(path.read_bytes())
        blob[100] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CorruptFileError):
            load_checkpoint(path)

    def test_version_mismatch_detected(self, tmp_path):
        net = Network(seed=9)
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, net)
        blob = bytearray(path.read_bytes())
        # bump the version field and re-stamp the checksum
        import struct
        from hashlib import blake2b
        struct.pack_into("<I", blob, 8, 99)
        payload = bytes(blob[:-16])
        path.write_bytes(payload + blake2b(payload, digest_size=16).digest())
        with pytest.raises(VersionMismatchError):
            load_checkpoint(path)

    def test_float32_round_trip(self, tmp_path):
        net = Network(dtype=np.float32, seed=10)
        path = tmp_path / "net32.ckpt"
        save_checkpoint(path, net, metadata={"iteration": 1})
        loaded, _, _ = load_checkpoint(path)
        assert loaded.dtype == np.float32
        assert all(np.array_equal(a, b) for a, b in zip(loaded.params(), net.params()))
