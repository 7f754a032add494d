"""Procedural traffic-scene generator.

Scenes are 32x32 grayscale: a dark road band across the frame with N light
"vehicle" rectangles, where N is drawn from a per-class range. Additive
noise and a global brightness offset model lighting/weather variation.

Three parameter families exist: `source` (the pre-training task), `target`
(the deployment corpus) and `shifted` (a drifted distribution with altered
brightness range, noise level and vehicle aspect ratios, used to provoke an
accuracy drop when a target-trained model is tested on it).
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .types import Dataset, LabeledImage, TrafficClass

SCENE_SIZE = 32

# vehicles drawn per class (inclusive ranges)
VEHICLE_COUNTS = {
    TrafficClass.Empty: (0, 0),
    TrafficClass.Fluid: (1, 4),
    TrafficClass.Heavy: (5, 10),
    TrafficClass.Jam: (11, 18),
}


@dataclass(frozen=True)
class SceneFamily:
    """Generator constants for one domain.

    vehicle_shapes are (w, h) pairs of equal area so that covered road area
    tracks the vehicle count; the drawn shape varies the aspect ratio.
    """

    name: str
    background: tuple          # background value range
    road_value: tuple          # road band value range (darker than background)
    road_rows: tuple           # (top, bottom) of the band before jitter
    vehicle_value: tuple       # vehicle brightness range
    vehicle_shapes: tuple      # (w, h) candidates, one drawn per vehicle
    noise_sigma: float
    brightness_jitter: float   # additive global offset drawn from +/- this


SOURCE = SceneFamily(
    name="source",
    background=(0.42, 0.52),
    road_value=(0.12, 0.20),
    road_rows=(6, 27),
    vehicle_value=(0.88, 0.98),
    vehicle_shapes=((4, 4), (2, 8), (8, 2)),
    noise_sigma=0.02,
    brightness_jitter=0.03,
)

TARGET = SceneFamily(
    name="target",
    background=(0.38, 0.46),
    road_value=(0.14, 0.22),
    road_rows=(8, 26),
    vehicle_value=(0.86, 0.94),
    vehicle_shapes=((4, 3), (6, 2), (3, 4)),
    noise_sigma=0.01,
    brightness_jitter=0.02,
)

SHIFTED = SceneFamily(
    name="shifted",
    background=(0.30, 0.40),
    road_value=(0.10, 0.18),
    road_rows=(8, 26),
    vehicle_value=(0.60, 0.72),
    vehicle_shapes=((2, 6), (3, 4), (4, 3)),
    noise_sigma=0.04,
    brightness_jitter=0.05,
)

FAMILIES = {f.name: f for f in (SOURCE, TARGET, SHIFTED)}


def synth_scene(traffic_class, seed, family=TARGET, size=SCENE_SIZE):
    """Render one scene; a pure function of (class, seed, family)."""
    cls = TrafficClass(traffic_class)
    rng = np.random.default_rng(seed)

    img = np.full((size, size), rng.uniform(*family.background))
    top = int(family.road_rows[0] + rng.integers(-1, 2))
    bottom = int(family.road_rows[1] + rng.integers(-1, 2))
    top, bottom = max(0, top), min(size, bottom)
    img[top:bottom, :] = rng.uniform(*family.road_value)

    lo, hi = VEHICLE_COUNTS[cls]
    n = int(rng.integers(lo, hi + 1))
    placed = []

    def overlaps(x0, y0, vw, vh):
        return any(x0 < px + pw and px < x0 + vw and y0 < py + ph and py < y0 + vh
                   for px, py, pw, ph in placed)

    def overlaps_others(x0, y0, vw, vh, exclude):
        return any((px, py, pw, ph) != exclude
                   and x0 < px + pw and px < x0 + vw and y0 < py + ph and py < y0 + vh
                   for px, py, pw, ph in placed)

    for k in range(n):
        vw, vh = family.vehicle_shapes[int(rng.integers(0, len(family.vehicle_shapes)))]
        vh = min(vh, max(1, bottom - top))
        if cls is TrafficClass.Jam and placed and k % 2 == 1:
            # every second Jam vehicle is chained onto an earlier one with a
            # single-pixel corner overlap: occlusion is forced while the
            # covered area still tracks the vehicle count. Corner candidates
            # that would collide with other vehicles are rejected first.
            bx, by, bw, bh = placed[int(rng.integers(0, len(placed)))]
            corners = [(bx + bw - 1, by + bh - 1), (bx - vw + 1, by + bh - 1),
                       (bx + bw - 1, by - vh + 1), (bx - vw + 1, by - vh + 1)]
            order = rng.permutation(4)
            x0, y0 = corners[int(order[0])]
            for c in order:
                cx, cy = corners[int(c)]
                if 0 <= cx <= size - vw and top <= cy <= bottom - vh and \
                        not overlaps_others(cx, cy, vw, vh, exclude=(bx, by, bw, bh)):
                    x0, y0 = cx, cy
                    break
            x0 = int(np.clip(x0, 0, size - vw))
            y0 = int(np.clip(y0, top, max(top, bottom - vh)))
        else:
            # other vehicles avoid each other entirely so the covered area
            # tracks the vehicle count
            for _ in range(64):
                x0 = int(rng.integers(0, size - vw + 1))
                y0 = int(rng.integers(top, max(top + 1, bottom - vh + 1)))
                if not overlaps(x0, y0, vw, vh):
                    break
        value = rng.uniform(*family.vehicle_value)
        img[y0:y0 + vh, x0:x0 + vw] = value
        placed.append((x0, y0, vw, vh))

    img += rng.normal(0.0, family.noise_sigma, img.shape)
    img += rng.uniform(-family.brightness_jitter, family.brightness_jitter)
    img = np.clip(img, 0.0, 1.0)
    return LabeledImage(img[:, :, None], cls,
                        source_id=f"synth:{family.name}:{cls.name}:{seed}")


_DOMAIN_CODES = {"source": 101, "target": 202, "shifted": 303}


def scene_seed(dataset_seed, domain, traffic_class, index):
    """Stable per-image seed derived from the dataset seed."""
    ss = np.random.SeedSequence(
        [int(dataset_seed), _DOMAIN_CODES[domain], int(traffic_class), int(index)]
    )
    return int(ss.generate_state(1, np.uint64)[0])


def synth_dataset(per_class, seed, domain="target"):
    """Balanced synthetic dataset of 4 * per_class scenes.

    `domain` selects the generator family; source/target/shifted are
    distinct parameter families so cross-domain evaluation shows a drop.
    """
    if per_class < 1:
        raise ValidationError(f"per_class must be >= 1, got {per_class}")
    if domain not in FAMILIES:
        raise ValidationError(f"unknown domain {domain!r}; expected one of {sorted(FAMILIES)}")
    family = FAMILIES[domain]
    items = []
    for cls in TrafficClass:
        for i in range(per_class):
            img = synth_scene(cls, scene_seed(seed, domain, cls, i), family)
            img.source_id = f"synth:{domain}:{cls.name}:{seed}:{i}"
            items.append(img)
    return Dataset(items)
