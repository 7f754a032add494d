"""Core data types for image corpora."""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ..errors import ValidationError


class TrafficClass(IntEnum):
    """Four-way road congestion taxonomy."""

    Empty = 0
    Fluid = 1
    Heavy = 2
    Jam = 3

    @classmethod
    def from_name(cls, name):
        try:
            return cls[name]
        except KeyError:
            raise ValidationError(
                f"unknown traffic class {name!r}; expected one of "
                f"{[c.name for c in cls]}"
            ) from None


CLASS_NAMES = tuple(c.name for c in TrafficClass)


@dataclass
class LabeledImage:
    """An image with its class label.

    pixels: (H, W, C) float64 in [0, 1], C in {1, 3}, H and W >= 8.
    source_id: file path or synthetic descriptor identifying the origin.
    """

    pixels: np.ndarray
    label: TrafficClass
    source_id: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim == 2:
            px = px[:, :, None]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValidationError(f"pixels must be HxWxC with C in {{1,3}}, got shape {px.shape}")
        if px.shape[0] < 8 or px.shape[1] < 8:
            raise ValidationError(f"image too small: {px.shape[0]}x{px.shape[1]} (minimum 8x8)")
        if px.size and (px.min() < 0.0 or px.max() > 1.0):
            raise ValidationError("pixel values must lie in [0, 1]")
        self.pixels = px
        self.label = TrafficClass(self.label)


@dataclass
class Dataset:
    """Ordered collection of labeled images; order is load order."""

    items: list = field(default_factory=list)

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def counts(self):
        """Per-class item counts as a tuple indexed by TrafficClass value."""
        out = [0, 0, 0, 0]
        for item in self.items:
            out[int(item.label)] += 1
        return tuple(out)

    def source_ids(self):
        return [item.source_id for item in self.items]


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split: train_fraction of each class goes to the train side."""

    train_fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )
