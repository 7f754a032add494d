"""The retraining core: reFeed image stack, QoE gate, gain metrics, and the
offline/online training orchestrator.

The mechanism: after offline training, every misclassified test image is
pushed (with its true label) onto a bounded LIFO stack. If the measured
accuracy falls below the QoE threshold, the classifier head is retrained
from the stack contents alone and re-measured on a disjoint retest set.
"""

import json
import math
import time
from dataclasses import dataclass, replace

from .datasets import Dataset, SplitSpec, TrafficClass, expand_with_augmentations, split
from .errors import (
    DegenerateSplitError,
    EmptyDatasetError,
    ProtocolError,
    UndefinedGainError,
    ValidationError,
)
from .micronet import TrainConfig, evaluate, freeze_base, reinit_head, train


@dataclass(frozen=True)
class QoeConfig:
    """Quality-of-experience threshold: deployed accuracy must reach q."""

    q: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError(f"q must be in [0, 1], got {self.q}")


@dataclass
class StackEntry:
    image: object          # LabeledImage carrying the *true* label
    pushed_at: float = 0.0


class ReFeedStack:
    """Bounded LIFO of misclassified labeled images awaiting retraining.

    Pushing onto a full stack evicts the oldest (bottom) entry. Duplicate
    source_ids are kept: repeated failures act as natural sample weights.
    """

    def __init__(self, capacity, clock=time.time):
        if capacity < 1:
            raise ValidationError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.entries = []          # bottom .. top
        self.total_pushed = 0
        self.evicted = 0
        self._clock = clock

    def __len__(self):
        return len(self.entries)

    def push(self, image, pushed_at=None):
        """Push an image; returns the evicted entry if the stack was full."""
        stamp = self._clock() if pushed_at is None else pushed_at
        self.entries.append(StackEntry(image, stamp))
        self.total_pushed += 1
        if len(self.entries) > self.capacity:
            self.evicted += 1
            return self.entries.pop(0)
        return None

    def pop(self):
        if not self.entries:
            raise EmptyDatasetError("pop from empty stack")
        return self.entries.pop().image

    def reset(self):
        self.entries.clear()

    def images(self):
        """Entries bottom-to-top as LabeledImages."""
        return [e.image for e in self.entries]

    def as_dataset(self):
        return Dataset(self.images())

    def source_ids(self):
        return [e.image.source_id for e in self.entries]

    # --- persistence: one JSON object per line, images by reference ---

    def to_jsonl(self):
        lines = [json.dumps({"source_id": e.image.source_id,
                             "class": e.image.label.name,
                             "pushed_at": e.pushed_at})
                 for e in self.entries]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text, capacity, image_lookup, clock=time.time):
        """Rebuild a stack from its log; image_lookup maps source_id ->
        pixel array (entries whose images cannot be resolved raise)."""
        stack = cls(capacity, clock=clock)
        from .datasets import LabeledImage

        for line in text.splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            label = TrafficClass.from_name(rec["class"])
            pixels = image_lookup(rec["source_id"])
            stack.push(LabeledImage(pixels, label, rec["source_id"]),
                       pushed_at=rec["pushed_at"])
        return stack


def default_stack_capacity(offline_train_size):
    """Cap the retrain set at 10% of the offline corpus size."""
    return max(1, math.ceil(0.10 * offline_train_size))


def qoe_satisfied(accuracy_or_per_image, q):
    """True iff measured accuracy P >= q (the boundary counts as satisfied)."""
    if isinstance(accuracy_or_per_image, (int, float)):
        accuracy = float(accuracy_or_per_image)
    else:
        flags = list(accuracy_or_per_image)
        if not flags:
            raise EmptyDatasetError("empty correctness list")
        accuracy = sum(bool(f) for f in flags) / len(flags)
    if not 0.0 <= accuracy <= 1.0:
        raise ValidationError(f"accuracy must be in [0, 1], got {accuracy}")
    return accuracy >= q


def _check_scale(name, value):
    if value < 0 or value > 100:
        raise ValidationError(f"{name} must be a fraction or percentage, got {value}")


def gain_factor(p0, pf):
    """Absolute accuracy change |pf - p0| (same scale as the inputs)."""
    _check_scale("p0", p0)
    _check_scale("pf", pf)
    return abs(pf - p0)


def gain(p0, pf):
    """Multiplicative improvement pf / p0; undefined at p0 == 0."""
    _check_scale("p0", p0)
    _check_scale("pf", pf)
    if p0 == 0:
        raise UndefinedGainError("gain pf/p0 is undefined when p0 == 0")
    return pf / p0


@dataclass(frozen=True)
class GainMetrics:
    """Accuracy bookkeeping around one retraining round.

    p0 is the pre-retrain test accuracy; pf, r and gain are populated only
    when a retraining round ran. Values are stored as fractions; gain is
    dimensionless.
    """

    p0: float
    q: float
    pf: float = None
    r: float = None
    gain: float = None

    @classmethod
    def from_accuracies(cls, p0, q, pf=None):
        if pf is None:
            return cls(p0=p0, q=q)
        g = gain(p0, pf) if p0 > 0 else None
        return cls(p0=p0, q=q, pf=pf, r=gain_factor(p0, pf), gain=g)

    def as_dict(self):
        return {"p0": self.p0, "pf": self.pf, "r": self.r,
                "gain": self.gain, "q": self.q}


def relationship_residual(metrics: GainMetrics):
    """R*p0 - (r + p0): zero when pf >= p0, -2r when pf < p0 (the absolute
    value in the gain factor breaks the identity for regressions)."""
    if metrics.pf is None:
        raise ValidationError("relationship residual needs a populated pf")
    return gain(metrics.p0, metrics.pf) * metrics.p0 - (gain_factor(metrics.p0, metrics.pf) + metrics.p0)


def _as_q(qoe):
    return qoe.q if isinstance(qoe, QoeConfig) else QoeConfig(q=float(qoe)).q


def _check_disjoint(a, b, what):
    overlap = set(a) & set(b)
    if overlap:
        raise ProtocolError(
            f"{what} share {len(overlap)} images (e.g. {sorted(overlap)[0]!r}); "
            "evaluation on retraining data is biased"
        )


def retrain_from_stack(model, stack, cfg: TrainConfig, augment=True):
    """The online phase: fine-tune the head on the stack contents.

    Stack images are split 75:25 train/validation when the class counts
    allow it; tiny stacks fall back to training on everything. The stack is
    not consumed here; callers reset it when the round completes.
    """
    if len(stack) == 0:
        raise EmptyDatasetError("cannot retrain from an empty stack")
    data = stack.as_dataset()
    online_cfg = replace(cfg, seed=cfg.seed + 1)
    try:
        train_set, val_set = split(data, SplitSpec(0.75, seed=online_cfg.seed))
    except (DegenerateSplitError, EmptyDatasetError):
        train_set, val_set = data, None
    if augment:
        train_set = expand_with_augmentations(train_set)
    return train(model, train_set, val_set, online_cfg)


@dataclass
class Algorithm1Result:
    model: object
    metrics: GainMetrics
    stack: ReFeedStack
    rounds: int
    offline_history: list
    online_history: list = None


def algorithm1_execute(model, offline_train, test, retest, qoe, cfg: TrainConfig,
                       offline_split=0.75, stack_capacity=None, fresh_head=True,
                       augment=True, clock=time.time):
    """Offline training, QoE-gated stack collection, and one online round.

    1. Freeze the convolutional base, (re)initialize the classifier head and
       train it on an offline_split train/validation partition.
    2. Sweep the test set; every misclassified image is pushed with its true
       label; p0 is the accuracy over the full sweep.
    3. If p0 < q and the stack is non-empty, fine-tune the head from the
       stack, measure pf on the disjoint retest set, and reset the stack.
    4. Otherwise return with only p0 populated.
    """
    if len(offline_train) == 0 or len(test) == 0 or len(retest) == 0:
        raise EmptyDatasetError("offline_train, test and retest must be non-empty")
    _check_disjoint([i.source_id for i in test], [i.source_id for i in retest],
                    "test and retest sets")
    q = _as_q(qoe)
    if stack_capacity is None:
        stack_capacity = default_stack_capacity(len(offline_train))
    stack = ReFeedStack(stack_capacity, clock=clock)

    model = freeze_base(model)
    if fresh_head:
        model = reinit_head(model, cfg.seed + 1)
    train_set, val_set = split(offline_train, SplitSpec(offline_split, seed=cfg.seed))
    if augment:
        train_set = expand_with_augmentations(train_set)
    model, offline_history = train(model, train_set, val_set, cfg)

    result = evaluate(model, test)
    for item, ok in zip(test, result.correct):
        if not ok:
            stack.push(item)
    p0 = result.accuracy

    if p0 < q and len(stack) > 0:
        model, online_history = retrain_from_stack(model, stack, cfg, augment=augment)
        pf = evaluate(model, retest).accuracy
        stack.reset()
        metrics = GainMetrics.from_accuracies(p0, q, pf)
        return Algorithm1Result(model, metrics, stack, rounds=1,
                                offline_history=offline_history,
                                online_history=online_history)
    return Algorithm1Result(model, GainMetrics.from_accuracies(p0, q), stack,
                            rounds=0, offline_history=offline_history)
