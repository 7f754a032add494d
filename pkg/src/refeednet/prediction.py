"""Prediction-side pipeline: classify frames, keep an append-only record
log, accept human review verdicts, and feed corrected frames back into
retraining via the reFeed stacks (assistive + continuous learning)."""

import json
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .datasets import LabeledImage, TrafficClass
from .errors import (
    EmptyDatasetError,
    NotFoundError,
    ProtocolError,
    ReviewConflictError,
    ValidationError,
)
from .micronet import TrainConfig, evaluate, forward
from .refeed import GainMetrics, QoeConfig, ReFeedStack, _as_q, retrain_from_stack


class ReviewStatus(str, Enum):
    UNREVIEWED = "unreviewed"
    CONFIRMED = "confirmed"
    CORRECTED = "corrected"


@dataclass
class PredictionRecord:
    id: int
    image_ref: str
    predicted: TrafficClass
    probabilities: list
    created_at: float
    review: ReviewStatus = ReviewStatus.UNREVIEWED
    corrected_label: TrafficClass = None

    def __post_init__(self):
        total = float(sum(self.probabilities))
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {total}, not 1")
        if (self.corrected_label is not None) != (self.review == ReviewStatus.CORRECTED):
            raise ValidationError("corrected_label present iff review == corrected")
        if self.corrected_label is not None and self.corrected_label == self.predicted:
            raise ValidationError("corrected_label must differ from the prediction")

    def as_dict(self):
        return {
            "id": self.id,
            "image_ref": self.image_ref,
            "predicted": self.predicted.name,
            "probabilities": [float(p) for p in self.probabilities],
            "created_at": self.created_at,
            "review": self.review.value,
            "corrected_label": None if self.corrected_label is None else self.corrected_label.name,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            id=d["id"],
            image_ref=d["image_ref"],
            predicted=TrafficClass.from_name(d["predicted"]),
            probabilities=list(d["probabilities"]),
            created_at=d["created_at"],
            review=ReviewStatus(d["review"]),
            corrected_label=None if d.get("corrected_label") is None
            else TrafficClass.from_name(d["corrected_label"]),
        )


class RecordStore:
    """Append-only record log with id and review-status lookup.

    Ids are unique and monotonically increasing; in-memory order is creation
    order and nothing ever removes or reorders entries. Review transitions
    follow Unreviewed -> {Confirmed, Corrected} exactly once; re-submitting
    the identical verdict is accepted idempotently.
    """

    def __init__(self, id_start=1):
        self.records = []
        self._by_id = {}
        self._next_id = id_start

    def __len__(self):
        return len(self.records)

    def next_id(self):
        nid = self._next_id
        self._next_id += 1
        return nid

    def append(self, record):
        if record.id in self._by_id:
            raise ValidationError(f"duplicate record id {record.id}")
        if self.records and record.id <= self.records[-1].id:
            raise ValidationError("record ids must be monotonically increasing")
        self.records.append(record)
        self._by_id[record.id] = record
        self._next_id = max(self._next_id, record.id + 1)
        return record

    def get(self, record_id):
        try:
            return self._by_id[record_id]
        except KeyError:
            raise NotFoundError(f"no record with id {record_id}") from None

    def by_status(self, status, limit=None):
        out = [r for r in self.records if r.review == status]
        return out if limit is None else out[:limit]

    def unreviewed(self, limit=None):
        return self.by_status(ReviewStatus.UNREVIEWED, limit)

    def transition(self, record_id, verdict: ReviewStatus, label=None):
        """Apply a review verdict; returns (record, changed)."""
        record = self.get(record_id)
        if verdict == ReviewStatus.CONFIRMED:
            if label is not None:
                raise ValidationError("a confirmation takes no label")
        elif verdict == ReviewStatus.CORRECTED:
            if label is None:
                raise ValidationError("a correction requires a label")
            label = TrafficClass(label)
            if label == record.predicted:
                raise ValidationError(
                    "corrected label equals the prediction; confirm instead"
                )
        else:
            raise ValidationError(f"invalid verdict {verdict!r}")

        if record.review != ReviewStatus.UNREVIEWED:
            if record.review == verdict and record.corrected_label == label:
                return record, False  # idempotent re-submission
            raise ReviewConflictError(
                f"record {record_id} already reviewed as {record.review.value}"
            )
        record.review = verdict
        record.corrected_label = label
        return record, True

    # --- persistence: every event appends a full snapshot line ---

    def snapshot_line(self, record):
        return json.dumps(record.as_dict())

    def to_jsonl(self):
        return "".join(self.snapshot_line(r) + "\n" for r in self.records)

    @classmethod
    def replay_jsonl(cls, text):
        """Rebuild from an event log: first appearance fixes creation order,
        the last snapshot per id wins for review status."""
        store = cls()
        seen = {}
        order = []
        for line in text.splitlines():
            if not line.strip():
                continue
            rec = PredictionRecord.from_dict(json.loads(line))
            if rec.id not in seen:
                order.append(rec.id)
            seen[rec.id] = rec
        for rid in order:
            store.append(seen[rid])
        return store


DEFAULT_PREDICTION_STACK_CAPACITY = 256


class Predictor:
    """Couples a deployed model with its record store, correction stack and
    frame storage (in-memory dict plus an optional fallback loader)."""

    def __init__(self, model, stack_capacity=DEFAULT_PREDICTION_STACK_CAPACITY,
                 clock=time.time, id_start=1, store=None, stack=None,
                 image_loader=None):
        self.model = model
        self.store = store if store is not None else RecordStore(id_start=id_start)
        self.stack = stack if stack is not None else ReFeedStack(stack_capacity, clock=clock)
        self.images = {}
        self._image_loader = image_loader
        self._clock = clock

    def lookup_image(self, ref):
        pixels = self.images.get(ref)
        if pixels is None and self._image_loader is not None:
            pixels = self._image_loader(ref)
            if pixels is not None:
                self.images[ref] = pixels
        if pixels is None:
            raise NotFoundError(f"no stored frame for {ref}")
        return pixels

    def predict_and_store(self, pixels, source_id=None):
        """Classify one frame and append an Unreviewed record."""
        probs = forward(self.model, pixels)
        predicted = TrafficClass(int(np.argmax(probs)))
        rid = self.store.next_id()
        ref = source_id if source_id is not None else f"frame:{rid:08d}"
        self.images.setdefault(ref, np.asarray(pixels, dtype=np.float64))
        record = PredictionRecord(
            id=rid, image_ref=ref, predicted=predicted,
            probabilities=[float(p) for p in probs],
            created_at=self._clock(),
        )
        return self.store.append(record)

    def apply_correction(self, record_id, verdict, label=None):
        """Apply a review verdict; a correction pushes the frame with its
        corrected label onto the prediction-side stack."""
        try:
            verdict = ReviewStatus(verdict)
        except ValueError:
            raise ValidationError(
                f"verdict must be 'confirmed' or 'corrected', got {verdict!r}"
            ) from None
        record, changed = self.store.transition(record_id, verdict, label)
        if changed and verdict == ReviewStatus.CORRECTED:
            pixels = self.lookup_image(record.image_ref)
            self.stack.push(LabeledImage(pixels, record.corrected_label,
                                         record.image_ref))
        return record

    def transfer_corrections(self, training_stack):
        return transfer_corrections(self.stack, training_stack)

    def corrected_count(self):
        return len(self.store.by_status(ReviewStatus.CORRECTED))


@dataclass
class TransferReport:
    moved: int
    evicted: int


def transfer_corrections(prediction_stack, training_stack):
    """Move all entries to the training stack, preserving LIFO order; the
    prediction stack ends empty. Overflow evicts the training stack's
    oldest entries and the eviction count is reported."""
    moved = len(prediction_stack)
    evicted = 0
    for entry in prediction_stack.entries:  # bottom-to-top keeps pop order
        if training_stack.push(entry.image, pushed_at=entry.pushed_at) is not None:
            evicted += 1
    prediction_stack.reset()
    return TransferReport(moved=moved, evicted=evicted)


@dataclass
class CycleResult:
    model: object
    metrics: GainMetrics = None
    status: str = "empty-stack"
    cycle: int = 0
    deployed_changed: bool = False
    online_history: list = field(default=None, repr=False)


def continuous_cycle(model, training_stack, retest, qoe, cfg: TrainConfig,
                     cycle_number=0, augment=True):
    """One stack-driven retraining round with rollback.

    The candidate model replaces the deployed one only when it strictly
    improves retest accuracy (ties keep the old model), so the deployed
    model's measured accuracy never decreases. The stack is consumed either
    way. An empty stack is a no-op."""
    if len(training_stack) == 0:
        return CycleResult(model=model, status="empty-stack", cycle=cycle_number)
    if len(retest) == 0:
        raise EmptyDatasetError("retest set must be non-empty")
    overlap = set(i.source_id for i in retest) & set(training_stack.source_ids())
    if overlap:
        raise ProtocolError(
            f"retest shares {len(overlap)} images with the retraining stack"
        )
    q = _as_q(qoe)
    p0 = evaluate(model, retest).accuracy
    candidate, online_history = retrain_from_stack(model, training_stack, cfg,
                                                   augment=augment)
    pf = evaluate(candidate, retest).accuracy
    training_stack.reset()
    metrics = GainMetrics.from_accuracies(p0, q, pf)
    if pf > p0:
        return CycleResult(model=candidate, metrics=metrics, status="retrained",
                           cycle=cycle_number, deployed_changed=True,
                           online_history=online_history)
    return CycleResult(model=model, metrics=metrics, status="rolled-back",
                       cycle=cycle_number, deployed_changed=False,
                       online_history=online_history)
