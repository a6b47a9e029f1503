import math

import numpy as np
import pytest

from snrtrain.ctc import ctc_grad, ctc_loss
from snrtrain.errors import DataError
from snrtrain.model import (ModelConfig, RecurrentCtcModel, adam_init,
                            adam_step, load_checkpoint)


def small_model(dropout=0.0, seed=1, outputs=5):
    return RecurrentCtcModel(ModelConfig(num_outputs=outputs, input_dim=7,
                                         hidden_size=6, dropout=dropout,
                                         init_seed=seed))


class TestForward:
    def test_zero_weights_give_uniform_rows(self):
        model = small_model()
        for k in model.params:
            model.params[k][...] = 0.0
        lp = model.forward(np.random.default_rng(0).normal(size=(4, 7)))
        np.testing.assert_allclose(lp, math.log(1.0 / 5.0), atol=1e-12)

    def test_rows_normalize_for_random_weights(self):
        model = small_model(seed=3)
        lp = model.forward(np.random.default_rng(1).normal(size=(9, 7)))
        np.testing.assert_allclose(np.logaddexp.reduce(lp, axis=1), 0.0,
                                   atol=1e-9)

    def test_batched_equals_single(self):
        model = small_model(seed=4)
        rng = np.random.default_rng(2)
        feats = [rng.normal(size=(n, 7)) for n in (5, 9, 3)]
        batched, _ = model.forward_batch(feats)
        for f, out in zip(feats, batched):
            np.testing.assert_allclose(out, model.forward(f), atol=1e-12)

    def test_dropout_needs_rng_and_changes_output(self):
        model = small_model(dropout=0.4)
        feats = np.random.default_rng(5).normal(size=(6, 7))
        with pytest.raises(DataError):
            model.forward(feats, train=True)
        eval_out = model.forward(feats)
        train_out = model.forward(feats, train=True,
                                  rng=np.random.default_rng(0))
        assert not np.allclose(eval_out, train_out)
        # eval mode ignores dropout entirely
        np.testing.assert_array_equal(eval_out, model.forward(feats))


class TestBackward:
    def test_end_to_end_gradient_check(self):
        model = small_model(seed=1)
        rng = np.random.default_rng(5)
        feats = rng.normal(size=(9, 7))
        labels = [0, 2, 1]

        def loss_now():
            return ctc_loss(model.forward(feats), labels)

        outputs, cache = model.forward_batch([feats])
        grads = model.backward_batch(cache, [ctc_grad(outputs[0], labels)])
        step = 1e-5
        worst = 0.0
        for name in model.params:
            flat = model.params[name].reshape(-1)
            for _ in range(10):
                i = int(rng.integers(0, flat.size))
                keep = flat[i]
                flat[i] = keep + step
                up = loss_now()
                flat[i] = keep - step
                down = loss_now()
                flat[i] = keep
                fd = (up - down) / (2 * step)
                an = float(grads[name].reshape(-1)[i])
                worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-6))
        assert worst <= 1e-3

    def test_batched_gradients_add_up(self):
        model = small_model(seed=2)
        rng = np.random.default_rng(3)
        feats = [rng.normal(size=(6, 7)), rng.normal(size=(4, 7))]
        targets = [[0, 1], [2]]
        separate = {}
        for f, y in zip(feats, targets):
            outs, cache = model.forward_batch([f])
            grads = model.backward_batch(cache, [ctc_grad(outs[0], y)])
            for k, v in grads.items():
                separate[k] = separate.get(k, 0.0) + v
        outs, cache = model.forward_batch(feats)
        together = model.backward_batch(
            cache, [ctc_grad(o, y) for o, y in zip(outs, targets)])
        for k in together:
            np.testing.assert_allclose(together[k], separate[k], atol=1e-12)


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        params = {"w": np.array([1.0, -2.0])}
        state = adam_init(params)
        adam_step(params, {"w": np.zeros(2)}, state)
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    def test_first_step_magnitude_is_learning_rate(self):
        params = {"w": np.zeros(3)}
        state = adam_init(params)
        adam_step(params, {"w": np.full(3, 0.7)}, state, learning_rate=1e-3)
        np.testing.assert_allclose(np.abs(params["w"]), 1e-3, rtol=1e-6)

    def test_quadratic_bowl_converges(self):
        params = {"x": np.array([5.0, -3.0, 2.0])}
        state = adam_init(params)
        for _ in range(2000):
            adam_step(params, {"x": 2.0 * params["x"]}, state,
                      learning_rate=1e-2)
        assert float(np.abs(params["x"]).max()) < 1e-3

    def test_deterministic(self):
        def run():
            params = {"w": np.array([0.5])}
            state = adam_init(params)
            for g in (0.3, -0.2, 0.8):
                adam_step(params, {"w": np.array([g])}, state)
            return params["w"][0]

        assert run() == run()


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = small_model(seed=6)
        path = tmp_path / "model.ckpt"
        model.save_checkpoint(path, epoch=17)
        loaded, epoch = load_checkpoint(path, dropout=0.0)
        assert epoch == 17
        assert loaded.config.hidden_size == model.config.hidden_size
        for k in model.params:
            np.testing.assert_allclose(loaded.params[k], model.params[k],
                                       atol=1e-7)

    def test_param_hash_tracks_values(self):
        model = small_model(seed=7)
        before = model.param_hash()
        assert before == small_model(seed=7).param_hash()
        model.params["w_in"][0, 0] += 1e-9
        assert model.param_hash() != before

    def test_not_a_checkpoint_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"nope")
        with pytest.raises(DataError):
            load_checkpoint(path)
