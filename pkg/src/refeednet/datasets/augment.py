"""The two augmentations used by the training pipeline: horizontal
reflection and pixel translation. Both preserve label, shape and source_id."""

import numpy as np

from ..errors import TranslationRangeError
from .types import Dataset, LabeledImage


def reflect_h(img: LabeledImage) -> LabeledImage:
    """Mirror columns: column j maps to column W-1-j. Involution."""
    return LabeledImage(img.pixels[:, ::-1, :].copy(), img.label, img.source_id)


def translate(img: LabeledImage, dx: int, dy: int) -> LabeledImage:
    """Shift content by dx columns (right for dx > 0) and dy rows (down for
    dy > 0); vacated pixels are zero-filled and dimensions are unchanged."""
    h, w = img.pixels.shape[:2]
    if abs(dx) >= w or abs(dy) >= h:
        raise TranslationRangeError(
            f"shift ({dx}, {dy}) out of range for a {w}x{h} image"
        )
    out = np.zeros_like(img.pixels)
    src_rows = slice(max(0, -dy), h - max(0, dy))
    src_cols = slice(max(0, -dx), w - max(0, dx))
    dst_rows = slice(max(0, dy), h - max(0, -dy))
    dst_cols = slice(max(0, dx), w - max(0, -dx))
    out[dst_rows, dst_cols] = img.pixels[src_rows, src_cols]
    return LabeledImage(out, img.label, img.source_id)


def expand_with_augmentations(dataset, shifts=((0, -1), (0, 1), (0, -2), (0, 2))):
    """Training-set expansion: originals, their reflections, and translated
    copies of both. Vertical shifts are the default because the road band has
    empty margins, so no scene content is clipped away."""
    items = list(dataset)
    both = items + [reflect_h(it) for it in items]
    out = list(both)
    for dx, dy in shifts:
        out += [translate(it, dx, dy) for it in both]
    return Dataset(out)
