"""Training loop, evaluation, and the desk-scale source-task pretraining
that stands in for large-corpus pretraining."""

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import EmptyDatasetError, ValidationError
from .model import (
    MicroCnn,
    _to_nchw,
    default_micro_cnn,
    forward_batch,
    forward_prefix,
    loss_and_gradients_arrays,
    lowest_trainable_index,
    sgd_step,
)

DEFAULT_LEARNING_RATE = 0.05
EVAL_CHUNK = 128


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 10
    learning_rate: float = DEFAULT_LEARNING_RATE
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")

    def with_seed(self, seed):
        return replace(self, seed=seed)


@dataclass
class EvalResult:
    accuracy: float
    correct: list = field(repr=False)
    predicted: list = field(repr=False)


def _stack(items, input_shape):
    x = _to_nchw([it.pixels for it in items], input_shape)
    y = np.array([int(it.label) for it in items])
    return x, y


def evaluate_arrays(model, x, labels, start=0):
    n = x.shape[0]
    predicted = np.empty(n, dtype=np.int64)
    for s in range(0, n, EVAL_CHUNK):
        probs = forward_batch(model, x[s:s + EVAL_CHUNK], start=start)
        # ties resolve to the lowest class index (np.argmax picks the first max)
        predicted[s:s + EVAL_CHUNK] = np.argmax(probs, axis=1)
    correct = predicted == labels
    return EvalResult(float(correct.mean()), correct.tolist(), predicted.tolist())


def evaluate(model, test_set):
    """Argmax accuracy plus the per-image correctness list in input order."""
    items = list(test_set)
    if not items:
        raise EmptyDatasetError("cannot evaluate on an empty test set")
    x, y = _stack(items, model.input_shape)
    return evaluate_arrays(model, x, y)


def train(model, train_set, val_set, config: TrainConfig):
    """Mini-batch SGD for exactly config.epochs epochs.

    The batch order is a per-epoch permutation drawn from config.seed, so a
    run is fully reproducible. Returns (model, history) where history has
    one {epoch, train_loss, val_accuracy} entry per epoch.
    """
    items = list(train_set)
    if not items:
        raise EmptyDatasetError("cannot train on an empty dataset")
    x, y = _stack(items, model.input_shape)
    val_xy = None
    if val_set is not None:
        val_items = list(val_set)
        if val_items:
            val_xy = _stack(val_items, model.input_shape)

    # everything below the lowest trainable layer is frozen or stateless,
    # so those activations can be computed once and reused every step
    cut = lowest_trainable_index(model)
    if cut > 0:
        x = forward_prefix(model, x, cut)
        if val_xy is not None:
            val_xy = (forward_prefix(model, val_xy[0], cut), val_xy[1])

    n = len(items)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        losses = []
        for s in range(0, n, config.batch_size):
            idx = perm[s:s + config.batch_size]
            loss, _, grads = loss_and_gradients_arrays(model, x[idx], y[idx], start=cut)
            model = sgd_step(model, grads, config.learning_rate)
            losses.append(loss)
        val_acc = None
        if val_xy is not None:
            val_acc = evaluate_arrays(model, val_xy[0], val_xy[1], start=cut).accuracy
        history.append({
            "epoch": epoch,
            "train_loss": float(np.mean(losses)),
            "val_accuracy": val_acc,
        })
    return model, history


PRETRAIN_PER_CLASS = 500
PRETRAIN_EPOCHS = 24


def pretrain_config(seed=0):
    """Default budget for source-task pretraining (larger than the
    deployment fine-tune budget, mirroring large-corpus pretraining)."""
    return TrainConfig(epochs=PRETRAIN_EPOCHS, batch_size=10,
                       learning_rate=DEFAULT_LEARNING_RATE, seed=seed)


def pretrain_source(config: TrainConfig, per_class=PRETRAIN_PER_CLASS,
                    input_shape=(32, 32, 1), variant="standard"):
    """Train a fresh model (nothing frozen) on the synthetic source task.

    Stands in for large-dataset pretraining: the returned model's
    convolutional base is what transfer learning reuses.
    """
    from ..datasets import SplitSpec, split, synth_dataset

    corpus = synth_dataset(per_class, seed=config.seed, domain="source")
    train_set, holdout = split(corpus, SplitSpec(0.9, seed=config.seed))
    model = default_micro_cnn(seed=config.seed, input_shape=input_shape, variant=variant)
    model, _ = train(model, train_set, holdout, config)
    return model
