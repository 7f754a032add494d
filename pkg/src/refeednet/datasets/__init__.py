"""Image corpus handling: loading, splits, augmentations and synthesis."""

from .augment import expand_with_augmentations, reflect_h, translate
from .corpus import load_dir, materialize, resize_nearest, shuffle, split, subsample_stride
from .pnm import decode_pnm, encode_png, encode_pnm, load_pnm, save_pnm
from .synth import (
    FAMILIES,
    SHIFTED,
    SOURCE,
    TARGET,
    VEHICLE_COUNTS,
    SceneFamily,
    synth_dataset,
    synth_scene,
)
from .types import CLASS_NAMES, Dataset, LabeledImage, SplitSpec, TrafficClass

__all__ = [
    "CLASS_NAMES",
    "Dataset",
    "FAMILIES",
    "LabeledImage",
    "SHIFTED",
    "SOURCE",
    "SceneFamily",
    "SplitSpec",
    "TARGET",
    "TrafficClass",
    "VEHICLE_COUNTS",
    "decode_pnm",
    "expand_with_augmentations",
    "encode_png",
    "encode_pnm",
    "load_dir",
    "load_pnm",
    "materialize",
    "reflect_h",
    "resize_nearest",
    "save_pnm",
    "shuffle",
    "split",
    "subsample_stride",
    "synth_dataset",
    "synth_scene",
    "translate",
]
