"""HTTP service: review queue, metrics, retraining control and model info.

All state lives as plain files under the data directory and every mutation
is persisted before the response goes out, so killing the process between
any two requests loses nothing:

    model.rfn1          deployed model checkpoint
    records.jsonl       append-only record event log (snapshot per event)
    stack.jsonl         training-side reFeed stack contents
    corrections.jsonl   prediction-side stack (reviewed corrections pending
                        transfer into the training stack)
    metrics.jsonl       one line per completed retraining cycle
    images/             normalized frames as P5 graymaps
    retest/             optional directory-per-class corpus used to measure
                        cycle accuracy (required for /retrain)

The environment variable REFEEDNET_DATA overrides the data directory; an
explicit CLI flag wins over the environment.
"""

import json
import os
import threading
import time
from dataclasses import dataclass

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import datasets
from .datasets import CLASS_NAMES, TrafficClass, decode_pnm, encode_png
from .datasets.corpus import resize_nearest, to_grayscale
from .errors import (
    IoError,
    NotFoundError,
    ReviewConflictError,
    ValidationError,
)
from .micronet import (
    TrainConfig,
    checkpoint_checksum,
    default_micro_cnn,
    load_checkpoint,
    save_checkpoint,
)
from .prediction import (
    Predictor,
    RecordStore,
    ReviewStatus,
    continuous_cycle,
    transfer_corrections,
)
from .refeed import QoeConfig, ReFeedStack, default_stack_capacity

ENV_DATA_DIR = "REFEEDNET_DATA"

CHECKPOINT_FILE = "model.rfn1"
RECORDS_FILE = "records.jsonl"
STACK_FILE = "stack.jsonl"
CORRECTIONS_FILE = "corrections.jsonl"
METRICS_FILE = "metrics.jsonl"
IMAGES_DIR = "images"
RETEST_DIR = "retest"


@dataclass
class ServiceConfig:
    data_dir: str
    host: str = "127.0.0.1"
    port: int = 8374
    q: float = 0.7
    auto_cycle_every: int = None
    max_rounds: int = 5
    model_seed: int = 0
    train_stack_capacity: int = None   # None: 10% of the retest-corpus size, min 40
    cycle_epochs: int = 10
    cycle_batch_size: int = 10
    learning_rate: float = None        # None: engine default
    token: str = None                  # optional static auth token

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError(f"q must be in [0, 1], got {self.q}")
        if self.max_rounds < 1:
            raise ValidationError("max_rounds must be >= 1")
        if self.auto_cycle_every is not None and self.auto_cycle_every < 1:
            raise ValidationError("auto_cycle_every must be >= 1")


def resolve_data_dir(flag_value=None):
    """CLI flag wins over REFEEDNET_DATA; default ./refeednet-data."""
    if flag_value:
        return flag_value
    return os.environ.get(ENV_DATA_DIR) or "refeednet-data"


def _fsync_write(path, data: bytes):
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _fsync_append(path, text: str):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())


class ServiceState:
    """Owns the deployed model, the predictor, both stacks, persistence and
    the single-writer retraining gate."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = config.data_dir
        os.makedirs(os.path.join(self.data_dir, IMAGES_DIR), exist_ok=True)
        self.lock = threading.RLock()
        self.retrain_lock = threading.Lock()
        self.cycle_history = []
        self.corrections_since_cycle = 0
        self.deployed_at = None
        self._load_state()

    # --- paths ---

    def _path(self, name):
        return os.path.join(self.data_dir, name)

    # --- startup / restore ---

    def _load_state(self):
        ckpt_path = self._path(CHECKPOINT_FILE)
        if os.path.exists(ckpt_path):
            with open(ckpt_path, "rb") as fh:
                blob = fh.read()
            model = load_checkpoint(blob)  # corrupt file -> refuse to start
        else:
            model = default_micro_cnn(seed=self.config.model_seed)
            blob = save_checkpoint(model)
            _fsync_write(ckpt_path, blob)
        self.model = model
        self.checkpoint_bytes = blob
        self.deployed_at = os.path.getmtime(ckpt_path)

        self.retest = None
        retest_dir = self._path(RETEST_DIR)
        if os.path.isdir(retest_dir):
            self.retest = datasets.load_dir(retest_dir, size=model.input_shape[:2])

        capacity = self.config.train_stack_capacity
        if capacity is None:
            capacity = max(40, default_stack_capacity(len(self.retest) if self.retest else 0))
        lookup = self._load_image
        stack_path = self._path(STACK_FILE)
        if os.path.exists(stack_path):
            with open(stack_path, encoding="utf-8") as fh:
                self.training_stack = ReFeedStack.from_jsonl(fh.read(), capacity, lookup)
        else:
            self.training_stack = ReFeedStack(capacity)

        records_path = self._path(RECORDS_FILE)
        if os.path.exists(records_path):
            with open(records_path, encoding="utf-8") as fh:
                store = RecordStore.replay_jsonl(fh.read())
        else:
            store = RecordStore()

        corr_path = self._path(CORRECTIONS_FILE)
        if os.path.exists(corr_path):
            with open(corr_path, encoding="utf-8") as fh:
                pred_stack = ReFeedStack.from_jsonl(fh.read(), 4096, lookup)
        else:
            pred_stack = ReFeedStack(4096)

        self.predictor = Predictor(model, store=store, stack=pred_stack,
                                   image_loader=self._load_image)

        metrics_path = self._path(METRICS_FILE)
        if os.path.exists(metrics_path):
            with open(metrics_path, encoding="utf-8") as fh:
                self.cycle_history = [json.loads(l) for l in fh if l.strip()]

    def _load_image(self, ref):
        path = os.path.normpath(os.path.join(self.data_dir, ref))
        if not path.startswith(os.path.normpath(self.data_dir) + os.sep):
            raise NotFoundError(f"image reference escapes the data dir: {ref}")
        if not os.path.exists(path):
            return None
        return datasets.load_pnm(path)

    # --- persistence hooks ---

    def persist_record(self, record):
        _fsync_append(self._path(RECORDS_FILE),
                      self.predictor.store.snapshot_line(record) + "\n")

    def persist_stacks(self):
        _fsync_write(self._path(STACK_FILE), self.training_stack.to_jsonl().encode())
        _fsync_write(self._path(CORRECTIONS_FILE), self.predictor.stack.to_jsonl().encode())

    def persist_model(self):
        blob = save_checkpoint(self.model)
        _fsync_write(self._path(CHECKPOINT_FILE), blob)
        self.checkpoint_bytes = blob
        self.deployed_at = time.time()

    def persist_metrics_line(self, line):
        self.cycle_history.append(line)
        _fsync_append(self._path(METRICS_FILE), json.dumps(line) + "\n")

    def save_frame(self, pixels, record_id):
        ref = f"{IMAGES_DIR}/{record_id:08d}.pgm"
        data = datasets.encode_pnm(pixels)
        _fsync_write(os.path.join(self.data_dir, ref), data)
        return ref

    # --- metrics view ---

    def metrics_payload(self):
        latest = self.cycle_history[-1] if self.cycle_history else {}
        return {
            "p0": latest.get("p0"),
            "pf": latest.get("pf"),
            "r": latest.get("r"),
            "gain": latest.get("gain"),
            "q": self.config.q,
            "rounds": latest.get("rounds", 0),
            "cycles": len(self.cycle_history),
            "stack_size": len(self.training_stack),
            "pending_corrections": len(self.predictor.stack),
            "busy": self.retrain_lock.locked(),
            "history": self.cycle_history,
        }

    # --- retraining ---

    def can_retrain(self):
        """Returns (ok, reason)."""
        if self.retrain_lock.locked():
            return False, "busy"
        if len(self.training_stack) == 0 and len(self.predictor.stack) == 0:
            return False, "stack empty"
        if self.retest is None:
            return False, "no retest corpus"
        return True, ""

    def run_retrain_round(self):
        """One /retrain invocation: transfer pending corrections, then run
        cycles until the QoE holds, the stack runs dry, or max_rounds."""
        with self.lock:
            transfer_corrections(self.predictor.stack, self.training_stack)
            self.persist_stacks()
        lr = self.config.learning_rate
        cfg_kwargs = {"epochs": self.config.cycle_epochs,
                      "batch_size": self.config.cycle_batch_size,
                      "seed": len(self.cycle_history)}
        if lr is not None:
            cfg_kwargs["learning_rate"] = lr
        cfg = TrainConfig(**cfg_kwargs)
        rounds = 0
        while rounds < self.config.max_rounds and len(self.training_stack) > 0:
            result = continuous_cycle(self.model, self.training_stack, self.retest,
                                      QoeConfig(self.config.q), cfg,
                                      cycle_number=len(self.cycle_history))
            rounds += 1
            with self.lock:
                if result.deployed_changed:
                    self.model = result.model
                    self.predictor.model = result.model
                    self.persist_model()
                self.persist_stacks()
                line = dict(result.metrics.as_dict(), rounds=rounds,
                            cycle=result.cycle, status=result.status)
                self.persist_metrics_line(line)
                self.corrections_since_cycle = 0
            measured = result.metrics.pf if result.deployed_changed else result.metrics.p0
            if measured >= self.config.q:
                break

    def start_retrain(self):
        """Non-blocking: claims the gate and runs the round in a thread."""
        if not self.retrain_lock.acquire(blocking=False):
            return False

        def runner():
            try:
                self.run_retrain_round()
            finally:
                self.retrain_lock.release()

        t = threading.Thread(target=runner, name="refeed-retrain", daemon=True)
        t.start()
        return True


class ReviewBody(BaseModel):
    verdict: str
    label: str = None


def build_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="refeednet", version="0.1.0")
    app.state.service = state

    def auth_error(request):
        if config.token and request.headers.get("x-auth-token") != config.token:
            return JSONResponse({"error": "invalid or missing token"}, status_code=401)
        return None

    @app.exception_handler(ValidationError)
    async def _validation(request, exc):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(NotFoundError)
    async def _not_found(request, exc):
        return JSONResponse({"error": str(exc)}, status_code=404)

    @app.exception_handler(ReviewConflictError)
    async def _conflict(request, exc):
        return JSONResponse({"error": str(exc)}, status_code=409)

    @app.exception_handler(IoError)
    async def _io(request, exc):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.get("/records")
    def get_records(status: str = None, limit: int = None):
        with state.lock:
            if status is None:
                records = state.predictor.store.records
                records = records if limit is None else records[:limit]
            else:
                try:
                    wanted = ReviewStatus(status)
                except ValueError:
                    raise ValidationError(f"unknown status {status!r}") from None
                records = state.predictor.store.by_status(wanted, limit)
            return [r.as_dict() for r in records]

    @app.get("/images/{source_id:path}")
    def get_image(source_id: str):
        pixels = state._load_image(source_id)
        if pixels is None:
            raise NotFoundError(f"no image {source_id}")
        return Response(content=encode_png(pixels), media_type="image/png")

    @app.post("/records/{record_id}/review")
    def review(record_id: int, body: ReviewBody, request: Request):
        denied = auth_error(request)
        if denied:
            return denied
        label = None
        if body.label is not None:
            if body.label not in CLASS_NAMES:
                raise ValidationError(
                    f"label must be one of {list(CLASS_NAMES)}, got {body.label!r}")
            label = TrafficClass.from_name(body.label)
        with state.lock:
            record = state.predictor.apply_correction(record_id, body.verdict, label)
            state.persist_record(record)
            state.persist_stacks()
            cycle_started = False
            if record.review == ReviewStatus.CORRECTED:
                state.corrections_since_cycle += 1
                every = config.auto_cycle_every
                ok, _ = state.can_retrain()
                if every and state.corrections_since_cycle >= every and ok:
                    cycle_started = state.start_retrain()
        return dict(record.as_dict(), cycle_started=cycle_started)

    @app.get("/metrics")
    def metrics():
        with state.lock:
            return state.metrics_payload()

    @app.post("/retrain")
    def retrain(request: Request):
        denied = auth_error(request)
        if denied:
            return denied
        with state.lock:
            ok, reason = state.can_retrain()
            if not ok:
                return JSONResponse({"error": reason}, status_code=409)
            started = state.start_retrain()
        if not started:
            return JSONResponse({"error": "busy"}, status_code=409)
        return JSONResponse({"started": True}, status_code=202)

    @app.get("/model")
    def model_info():
        with state.lock:
            return {
                "architecture": state.model.summary(),
                "input_shape": list(state.model.input_shape),
                "class_count": state.model.class_count,
                "base_boundary": state.model.base_boundary,
                "checkpoint_checksum": checkpoint_checksum(state.checkpoint_bytes),
                "deployed_at": state.deployed_at,
            }

    @app.post("/predict")
    async def predict(request: Request):
        denied = auth_error(request)
        if denied:
            return denied
        body = await request.body()
        pixels = decode_pnm(body)
        h, w, _ = state.model.input_shape
        pixels = to_grayscale(resize_nearest(pixels, h, w))
        with state.lock:
            rid = state.predictor.store._next_id
            ref = state.save_frame(pixels, rid)
            record = state.predictor.predict_and_store(pixels, source_id=ref)
            state.persist_record(record)
        return record.as_dict()

    ui_dir = os.path.join(os.path.dirname(__file__), "ui")
    if os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(config: ServiceConfig):
    """Run the service until interrupted; state persists per request, and a
    final flush runs on shutdown."""
    import uvicorn

    app = build_app(config)
    state: ServiceState = app.state.service

    @app.on_event("shutdown")
    def _flush():
        with state.lock:
            state.persist_stacks()
            state.persist_model()

    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
