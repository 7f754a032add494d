"""From-scratch tensor/CNN training engine with frozen-base transfer
learning, checkpointing and deterministic SGD."""

from .checkpoint import (
    checkpoint_checksum,
    load_checkpoint,
    load_checkpoint_file,
    save_checkpoint,
    save_checkpoint_file,
)
from .layers import Conv2D, Dense, Flatten, MaxPool2D, ReLU, Softmax
from .model import (
    MicroCnn,
    PIXEL_OFFSET,
    build_model,
    default_micro_cnn,
    forward,
    forward_batch,
    forward_prefix,
    freeze_base,
    loss_and_gradients,
    loss_and_gradients_arrays,
    lowest_trainable_index,
    parameter_checksums,
    reinit_head,
    sgd_step,
)
from .training import (
    DEFAULT_LEARNING_RATE,
    PRETRAIN_EPOCHS,
    PRETRAIN_PER_CLASS,
    EvalResult,
    TrainConfig,
    evaluate,
    evaluate_arrays,
    pretrain_config,
    pretrain_source,
    train,
)

__all__ = [
    "Conv2D",
    "DEFAULT_LEARNING_RATE",
    "Dense",
    "EvalResult",
    "Flatten",
    "MaxPool2D",
    "MicroCnn",
    "PIXEL_OFFSET",
    "PRETRAIN_EPOCHS",
    "PRETRAIN_PER_CLASS",
    "ReLU",
    "Softmax",
    "TrainConfig",
    "build_model",
    "checkpoint_checksum",
    "default_micro_cnn",
    "evaluate",
    "evaluate_arrays",
    "forward",
    "forward_batch",
    "forward_prefix",
    "freeze_base",
    "load_checkpoint",
    "load_checkpoint_file",
    "loss_and_gradients",
    "loss_and_gradients_arrays",
    "lowest_trainable_index",
    "parameter_checksums",
    "pretrain_config",
    "pretrain_source",
    "reinit_head",
    "save_checkpoint",
    "save_checkpoint_file",
    "sgd_step",
    "train",
]
