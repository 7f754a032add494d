import math

import numpy as np
import pytest

from refeednet.datasets import LabeledImage, TrafficClass
from refeednet.errors import (
    CheckpointFormatError,
    EmptyDatasetError,
    GradientShapeError,
    InputShapeError,
    ValidationError,
)
from refeednet.micronet import (
    TrainConfig,
    default_micro_cnn,
    evaluate,
    forward,
    freeze_base,
    load_checkpoint,
    loss_and_gradients,
    parameter_checksums,
    reinit_head,
    save_checkpoint,
    sgd_step,
    train,
)


def zero_head(model):
    for layer in model.head_layers():
        if layer.weight is not None:
            layer.weight[...] = 0.0
            layer.bias[...] = 0.0
    return model


def make_items(n, seed=0, label_cycle=(0, 1, 2, 3)):
    rng = np.random.default_rng(seed)
    return [
        LabeledImage(rng.uniform(0, 1, size=(32, 32, 1)),
                     TrafficClass(label_cycle[i % len(label_cycle)]),
                     source_id=f"mem:{seed}:{i}")
        for i in range(n)
    ]


class TestForward:
    def test_zero_head_gives_exact_uniform(self):
        model = zero_head(default_micro_cnn(seed=1))
        probs = forward(model, np.zeros((32, 32, 1)))
        np.testing.assert_array_equal(probs, [0.25, 0.25, 0.25, 0.25])

    def test_sums_to_one(self):
        model = default_micro_cnn(seed=2)
        rng = np.random.default_rng(3)
        for _ in range(5):
            probs = forward(model, rng.uniform(0, 1, (32, 32, 1)))
            assert probs.min() >= 0.0
            assert abs(probs.sum() - 1.0) <= 1e-9

    def test_deterministic_across_runs(self):
        img = np.random.default_rng(4).uniform(0, 1, (32, 32, 1))
        a = forward(default_micro_cnn(seed=42), img)
        b = forward(default_micro_cnn(seed=42), img)
        np.testing.assert_array_equal(a, b)

    def test_shape_mismatch_rejected(self):
        model = default_micro_cnn(seed=0)
        with pytest.raises(InputShapeError):
            forward(model, np.zeros((16, 16, 1)))


class TestLossAndGradients:
    def test_certain_prediction_has_zero_loss(self):
        model = zero_head(default_micro_cnn(seed=5))
        # huge bias on the true class saturates softmax to exactly 1.0
        dense = model.layers[-2]
        dense.bias[...] = [1000.0, 0.0, 0.0, 0.0]
        item = LabeledImage(np.zeros((32, 32, 1)), TrafficClass.Empty, "z")
        loss, _ = loss_and_gradients(model, [item])
        assert loss == 0.0

    def test_zero_head_loss_is_ln4(self):
        model = zero_head(default_micro_cnn(seed=6))
        loss, _ = loss_and_gradients(model, make_items(4))
        assert loss == pytest.approx(math.log(4), abs=1e-12)

    def test_empty_batch_rejected(self):
        with pytest.raises(EmptyDatasetError):
            loss_and_gradients(default_micro_cnn(seed=0), [])

    def test_frozen_gradients_zero_filled(self):
        model = freeze_base(default_micro_cnn(seed=7))
        _, grads = loss_and_gradients(model, make_items(2))
        for i, layer in model.parameter_layers():
            if layer.frozen:
                assert not grads[i]["weight"].any()
                assert not grads[i]["bias"].any()
            else:
                assert grads[i]["weight"].any()


class TestSgdStep:
    def test_zero_learning_rate_is_identity(self):
        model = default_micro_cnn(seed=8)
        _, grads = loss_and_gradients(model, make_items(3))
        stepped = sgd_step(model, grads, 0.0)
        assert parameter_checksums(stepped) == parameter_checksums(model)

    def test_single_weight_update_rule(self):
        model = default_micro_cnn(seed=9)
        _, grads = loss_and_gradients(model, make_items(3))
        stepped = sgd_step(model, grads, 0.1)
        i, dense = model.parameter_layers()[-1]
        np.testing.assert_array_equal(
            stepped.layers[i].weight, dense.weight - 0.1 * grads[i]["weight"])

    def test_gradient_shape_mismatch_rejected(self):
        model = default_micro_cnn(seed=10)
        _, grads = loss_and_gradients(model, make_items(2))
        grads[7] = {"weight": np.zeros((3, 3)), "bias": np.zeros(4)}
        with pytest.raises(GradientShapeError):
            sgd_step(model, grads, 0.1)

    def test_frozen_layers_bitwise_unchanged_after_many_steps(self):
        model = freeze_base(default_micro_cnn(seed=11))
        before = {i: (l.weight.tobytes(), l.bias.tobytes())
                  for i, l in model.parameter_layers() if l.frozen}
        items = make_items(10, seed=12)
        for _ in range(100):
            _, grads = loss_and_gradients(model, items)
            model = sgd_step(model, grads, 0.05)
        after = {i: (l.weight.tobytes(), l.bias.tobytes())
                 for i, l in model.parameter_layers() if l.frozen}
        assert before == after


class TestTrainConfig:
    def test_epochs_zero_rejected(self):
        with pytest.raises(ValidationError):
            TrainConfig(epochs=0)

    def test_bad_batch_and_lr_rejected(self):
        with pytest.raises(ValidationError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValidationError):
            TrainConfig(learning_rate=0.0)


class TestTrain:
    def test_history_length_and_batch_count(self):
        model = default_micro_cnn(seed=13)
        items = make_items(40, seed=14)
        cfg = TrainConfig(epochs=3, batch_size=10, seed=15)
        _, history = train(model, items, None, cfg)
        assert len(history) == 3
        assert all(h["val_accuracy"] is None for h in history)

    def test_empty_train_set_rejected(self):
        with pytest.raises(EmptyDatasetError):
            train(default_micro_cnn(seed=0), [], None, TrainConfig())

    def test_determinism_same_seed_same_params(self):
        items = make_items(20, seed=16)
        cfg = TrainConfig(epochs=2, batch_size=5, seed=17)
        m1, h1 = train(default_micro_cnn(seed=18), items, None, cfg)
        m2, h2 = train(default_micro_cnn(seed=18), items, None, cfg)
        assert h1 == h2
        assert parameter_checksums(m1) == parameter_checksums(m2)

    def test_different_seed_changes_batch_order(self):
        items = make_items(20, seed=16)
        m1, h1 = train(default_micro_cnn(seed=18), items, None,
                       TrainConfig(epochs=1, batch_size=5, seed=1))
        m2, h2 = train(default_micro_cnn(seed=18), items, None,
                       TrainConfig(epochs=1, batch_size=5, seed=2))
        assert h1 != h2 or parameter_checksums(m1) != parameter_checksums(m2)

    def test_frozen_base_untouched_by_training(self):
        model = freeze_base(default_micro_cnn(seed=19))
        base_before = {i: (l.weight.tobytes(), l.bias.tobytes())
                       for i, l in model.parameter_layers() if l.frozen}
        trained, _ = train(model, make_items(20, seed=20), None,
                           TrainConfig(epochs=2, batch_size=5, seed=21))
        base_after = {i: (l.weight.tobytes(), l.bias.tobytes())
                      for i, l in trained.parameter_layers() if l.frozen}
        assert base_before == base_after


class TestEvaluate:
    def test_all_correct_gives_one(self):
        model = zero_head(default_micro_cnn(seed=22))
        model.layers[-2].bias[...] = [0.0, 50.0, 0.0, 0.0]
        items = [LabeledImage(np.zeros((32, 32, 1)), TrafficClass.Fluid, f"f{i}")
                 for i in range(5)]
        res = evaluate(model, items)
        assert res.accuracy == 1.0
        assert res.correct == [True] * 5

    def test_uniform_model_ties_break_to_class_zero(self):
        model = zero_head(default_micro_cnn(seed=23))
        items = make_items(8, seed=24)  # labels cycle 0..3 -> 2 of class 0
        res = evaluate(model, items)
        assert res.predicted == [0] * 8
        assert res.accuracy == 0.25

    def test_paper_shaped_accuracy(self):
        # 126 of 192 correct must report 65.625%
        assert 126 / 192 == 0.65625

    def test_empty_test_set_rejected(self):
        with pytest.raises(EmptyDatasetError):
            evaluate(default_micro_cnn(seed=0), [])

    def test_order_preserved(self):
        model = default_micro_cnn(seed=25)
        items = make_items(12, seed=26)
        res = evaluate(model, items)
        singles = [evaluate(model, [it]).correct[0] for it in items]
        assert res.correct == singles


class TestFreezeAndHead:
    def test_freeze_base_targets_only_base_param_layers(self):
        model = freeze_base(default_micro_cnn(seed=27))
        for i, layer in enumerate(model.layers):
            if layer.weight is None:
                continue
            assert layer.frozen == (i < model.base_boundary)

    def test_boundary_zero_freezes_nothing(self):
        from refeednet.micronet import Dense, Flatten, Softmax, build_model
        model = build_model([Flatten(), Dense(4), Softmax()],
                            input_shape=(8, 8, 1), base_boundary=0, seed=0)
        frozen = freeze_base(model)
        assert not any(l.frozen for l in frozen.layers)

    def test_reinit_head_replaces_only_head_params(self):
        model = default_micro_cnn(seed=28)
        fresh = reinit_head(model, seed=99)
        for (i, a), (_, b) in zip(model.parameter_layers(), fresh.parameter_layers()):
            if i < model.base_boundary:
                assert a.weight.tobytes() == b.weight.tobytes()
            else:
                assert a.weight.tobytes() != b.weight.tobytes()


class TestPretrainSource:
    def test_reaches_090_on_held_out_source_data(self):
        from refeednet.datasets import synth_dataset
        from refeednet.micronet import pretrain_config, pretrain_source

        model = pretrain_source(pretrain_config(seed=0))
        holdout = synth_dataset(60, seed=9000, domain="source")
        assert evaluate(model, holdout).accuracy >= 0.90

    def test_deterministic_and_moves_base_weights(self):
        from refeednet.micronet import pretrain_source

        cfg = TrainConfig(epochs=1, batch_size=10, seed=3)
        a = pretrain_source(cfg, per_class=20)
        b = pretrain_source(cfg, per_class=20)
        assert parameter_checksums(a) == parameter_checksums(b)
        init = default_micro_cnn(seed=3)
        moved = sum(
            float(np.sum((la.weight - lb.weight) ** 2))
            for (_, la), (_, lb) in zip(a.parameter_layers(), init.parameter_layers())
        )
        assert moved > 0.0


class TestCheckpoint:
    def test_round_trip_bitwise_identity(self):
        model = freeze_base(default_micro_cnn(seed=29))
        blob = save_checkpoint(model)
        loaded = load_checkpoint(blob)
        assert loaded.base_boundary == model.base_boundary
        assert loaded.input_shape == model.input_shape
        assert loaded.seed == model.seed
        for (i, a), (j, b) in zip(model.parameter_layers(), loaded.parameter_layers()):
            assert i == j
            assert a.frozen == b.frozen
            assert a.weight.tobytes() == b.weight.tobytes()
            assert a.bias.tobytes() == b.bias.tobytes()
        assert save_checkpoint(loaded) == blob

    def test_truncated_stream_is_a_format_error(self):
        blob = save_checkpoint(default_micro_cnn(seed=30))
        for cut in (0, 3, 10, len(blob) // 2, len(blob) - 1):
            with pytest.raises(CheckpointFormatError):
                load_checkpoint(blob[:cut])

    def test_bad_magic_reports_offset_zero(self):
        blob = b"XXXX" + save_checkpoint(default_micro_cnn(seed=31))[4:]
        with pytest.raises(CheckpointFormatError) as exc:
            load_checkpoint(blob)
        assert exc.value.offset == 0

    def test_flipped_byte_fails_crc(self):
        blob = bytearray(save_checkpoint(default_micro_cnn(seed=32)))
        blob[len(blob) // 2] ^= 0xFF
        with pytest.raises(CheckpointFormatError, match="CRC"):
            load_checkpoint(bytes(blob))

    def test_loaded_model_evaluates_identically(self):
        model = default_micro_cnn(seed=33)
        items = make_items(16, seed=34)
        loaded = load_checkpoint(save_checkpoint(model))
        assert evaluate(model, items).predicted == evaluate(loaded, items).predicted
