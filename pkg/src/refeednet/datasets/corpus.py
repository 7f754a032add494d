"""Directory-per-class corpus loading, deterministic splits, frame
subsampling and materialization back to disk."""

import logging
import os

import numpy as np

from ..errors import CorpusLayoutError, DegenerateSplitError, EmptyDatasetError, ValidationError
from . import pnm
from .types import Dataset, LabeledImage, SplitSpec, TrafficClass

log = logging.getLogger(__name__)

PNM_EXTENSIONS = (".pgm", ".ppm", ".pnm")


def resize_nearest(pixels, out_h, out_w):
    """Nearest-neighbor resampling: output cell (i, j) takes the source
    pixel at (floor(i*H/out_h), floor(j*W/out_w))."""
    h, w = pixels.shape[:2]
    if (h, w) == (out_h, out_w):
        return pixels
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    return pixels[rows][:, cols]


def to_grayscale(pixels):
    """Channel-mean grayscale conversion."""
    if pixels.shape[2] == 1:
        return pixels
    return pixels.mean(axis=2, keepdims=True)


def load_dir(root, size=(32, 32), grayscale=True):
    """Load a `root/<ClassName>/*.p?m` corpus.

    Files are sorted lexicographically within each class and classes are
    visited in enum order, so the item order is deterministic. Pixels are
    rescaled to [0, 1], resized with nearest-neighbor resampling, and
    optionally collapsed to one channel. Unreadable files are skipped with
    a warning and counted in the returned dataset's `skipped` attribute.
    """
    if not os.path.isdir(root):
        raise CorpusLayoutError(f"corpus root {root!r} is not a directory")
    missing = [c.name for c in TrafficClass if not os.path.isdir(os.path.join(root, c.name))]
    if missing:
        raise CorpusLayoutError(
            f"corpus root {root!r} is missing class directories: {', '.join(missing)}"
        )
    out_h, out_w = size
    items = []
    skipped = 0
    for cls in TrafficClass:
        class_dir = os.path.join(root, cls.name)
        for name in sorted(os.listdir(class_dir)):
            if not name.lower().endswith(PNM_EXTENSIONS):
                continue
            path = os.path.join(class_dir, name)
            try:
                px = pnm.load_pnm(path)
            except (OSError, Exception) as exc:  # noqa: BLE001 - per-file isolation
                log.warning("skipping unreadable image %s: %s", path, exc)
                skipped += 1
                continue
            px = resize_nearest(px, out_h, out_w)
            if grayscale:
                px = to_grayscale(px)
            items.append(LabeledImage(px, cls, source_id=path))
    ds = Dataset(items)
    ds.skipped = skipped
    return ds


def split(dataset, spec: SplitSpec):
    """Stratified shuffle split.

    Each class is shuffled with the spec seed and round(train_fraction *
    class_count) items go to the train side (round-half-to-even, as in
    Python's round). The partitions are disjoint and jointly exhaustive.
    """
    if len(dataset) < 2:
        raise EmptyDatasetError(f"cannot split a dataset of {len(dataset)} items")
    rng = np.random.default_rng(spec.seed)
    train_items, holdout_items = [], []
    for cls in TrafficClass:
        idxs = [i for i, item in enumerate(dataset.items) if item.label == cls]
        if not idxs:
            continue
        order = rng.permutation(len(idxs))
        n_train = int(round(spec.train_fraction * len(idxs)))
        n_train = min(max(n_train, 0), len(idxs))
        for k, pos in enumerate(order):
            (train_items if k < n_train else holdout_items).append(dataset.items[idxs[pos]])
    if not train_items or not holdout_items:
        raise DegenerateSplitError(
            f"fraction {spec.train_fraction} left one side empty "
            f"({len(train_items)} train / {len(holdout_items)} holdout)"
        )
    return Dataset(train_items), Dataset(holdout_items)


def subsample_stride(frames, stride):
    """Keep frames at indices 0, stride, 2*stride, ... preserving order."""
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    return list(frames[::stride])


def shuffle(dataset, seed):
    """Deterministically permute item order (e.g. to turn a class-ordered
    synthetic corpus into an interleaved test stream)."""
    rng = np.random.default_rng(seed)
    items = list(dataset)
    return Dataset([items[i] for i in rng.permutation(len(items))])


def materialize(dataset, root):
    """Write a dataset to the directory-per-class PNM layout.

    Returns the number of files written. File names are the zero-padded
    per-class index, so identical datasets produce identical trees.
    """
    written = 0
    per_class = {cls: 0 for cls in TrafficClass}
    for cls in TrafficClass:
        os.makedirs(os.path.join(root, cls.name), exist_ok=True)
    for item in dataset:
        idx = per_class[item.label]
        per_class[item.label] += 1
        ext = ".pgm" if item.pixels.shape[2] == 1 else ".ppm"
        path = os.path.join(root, item.label.name, f"{idx:05d}{ext}")
        pnm.save_pnm(item.pixels, path)
        written += 1
    return written
