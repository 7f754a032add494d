"""Operator command line: corpus synthesis, training, evaluation, the
experiment groups, prediction, and the review service.

JSON goes to stdout, logs (including the resolved seed) to stderr. Exit
codes: 0 success, 2 IO, 3 protocol, 4 validation/usage.
"""

import argparse
import json
import sys

from . import datasets
from .errors import IoError, ProtocolError, RefeedNetError, ValidationError
from .micronet import (
    DEFAULT_LEARNING_RATE,
    TrainConfig,
    checkpoint_checksum,
    default_micro_cnn,
    evaluate,
    freeze_base,
    load_checkpoint_file,
    pretrain_config,
    pretrain_source,
    reinit_head,
    save_checkpoint_file,
    train,
)
from .refeed import GainMetrics, QoeConfig, algorithm1_execute, relationship_residual

EXIT_OK = 0
EXIT_IO = 2
EXIT_PROTOCOL = 3
EXIT_VALIDATION = 4

G1_FRACTIONS = (0.9, 0.8, 0.75, 0.7, 0.6, 0.5)


class UsageError(ValidationError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def log(msg):
    print(msg, file=sys.stderr)


def emit(payload):
    print(json.dumps(payload, indent=2))


def cmd_synth(args):
    ds = datasets.synth_dataset(args.per_class, seed=args.seed, domain=args.domain)
    written = datasets.materialize(ds, args.out)
    emit({
        "command": "synth",
        "out": args.out,
        "domain": args.domain,
        "per_class": args.per_class,
        "seed": args.seed,
        "files_written": written,
        "counts": list(ds.counts()),
    })
    return EXIT_OK


def _load_corpus(path, size=(32, 32)):
    return datasets.load_dir(path, size=size)


def cmd_train(args):
    corpus = _load_corpus(args.data)
    train_set, val_set = datasets.split(
        corpus, datasets.SplitSpec(args.split, seed=args.seed))
    if args.init:
        model = load_checkpoint_file(args.init)
    else:
        model = default_micro_cnn(seed=args.seed)
    if args.freeze_base:
        model = reinit_head(freeze_base(model), args.seed + 1)
    if args.augment:
        train_set = datasets.expand_with_augmentations(train_set)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch,
                      learning_rate=args.lr, seed=args.seed)
    model, history = train(model, train_set, val_set, cfg)
    blob = save_checkpoint_file(model, args.model)
    emit({
        "command": "train",
        "seed": args.seed,
        "split": args.split,
        "epochs": args.epochs,
        "batch": args.batch,
        "learning_rate": args.lr,
        "augment": bool(args.augment),
        "train_size": len(train_set),
        "val_size": len(val_set),
        "history": history,
        "final_val_accuracy": history[-1]["val_accuracy"],
        "model_path": args.model,
        "checkpoint_checksum": checkpoint_checksum(blob),
    })
    return EXIT_OK


def cmd_eval(args):
    corpus = _load_corpus(args.data)
    model = load_checkpoint_file(args.model)
    result = evaluate(model, corpus)
    emit({
        "command": "eval",
        "seed": args.seed,
        "data": args.data,
        "model": args.model,
        "images": len(corpus),
        "correct": sum(result.correct),
        "accuracy": result.accuracy,
    })
    return EXIT_OK


def cmd_predict(args):
    from .prediction import Predictor

    model = load_checkpoint_file(args.model)
    pixels = datasets.load_pnm(args.image)
    h, w, _ = model.input_shape
    pixels = datasets.corpus.to_grayscale(datasets.resize_nearest(pixels, h, w))
    predictor = Predictor(model)
    record = predictor.predict_and_store(pixels, source_id=args.image)
    payload = record.as_dict()
    if args.no_timestamps:
        payload.pop("created_at")
    emit(payload)
    return EXIT_OK


def _experiment_g1(args):
    base = pretrain_source(pretrain_config(args.seed))
    corpus = datasets.synth_dataset(args.per_class, seed=args.seed, domain="target")
    results = []
    for fraction in G1_FRACTIONS:
        train_set, val_set = datasets.split(
            corpus, datasets.SplitSpec(fraction, seed=args.seed))
        model = reinit_head(freeze_base(base), args.seed + 1)
        cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch,
                          learning_rate=args.lr, seed=args.seed)
        model, history = train(
            model, datasets.expand_with_augmentations(train_set), val_set, cfg)
        log(f"g1 fraction={fraction}: val_accuracy={history[-1]['val_accuracy']:.4f}")
        results.append({
            "fraction": fraction,
            "train_size": len(train_set),
            "val_size": len(val_set),
            "val_accuracy": history[-1]["val_accuracy"],
        })
    return {
        "command": "experiment",
        "group": "g1-analog",
        "seed": args.seed,
        "q": args.q,
        "per_class": args.per_class,
        "results": results,
    }


def _experiment_refeed(args, variant):
    base = pretrain_source(pretrain_config(args.seed), variant=variant)
    offline = datasets.synth_dataset(args.per_class, seed=args.seed, domain="target")
    test = datasets.shuffle(
        datasets.synth_dataset(48, seed=args.seed + 500, domain="shifted"), args.seed + 1)
    retest = datasets.shuffle(
        datasets.synth_dataset(48, seed=args.seed + 600, domain="shifted"), args.seed + 2)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch,
                      learning_rate=args.lr, seed=args.seed)
    res = algorithm1_execute(base, offline, test, retest, QoeConfig(args.q), cfg)
    m = res.metrics
    payload = {
        "command": "experiment",
        "group": f"{'g2' if variant == 'standard' else 'g3'}-analog",
        "variant": variant,
        "seed": args.seed,
        "q": args.q,
        "per_class": args.per_class,
        "offline_split": 0.75,
        "test_size": len(test),
        "retest_size": len(retest),
        "stack_capacity": res.stack.capacity,
        "rounds": res.rounds,
        "p0": m.p0,
        "pf": m.pf,
        "r": m.r,
        "gain": m.gain,
        "p0_pct": round(m.p0 * 100, 2),
        "pf_pct": None if m.pf is None else round(m.pf * 100, 2),
        "r_pct": None if m.r is None else round(m.r * 100, 2),
        "identity_residual": None if m.pf is None else relationship_residual(m),
    }
    log(f"{payload['group']}: p0={m.p0:.4f} pf={m.pf} gain={m.gain}")
    return payload


def cmd_experiment(args):
    if args.group == "g1-analog":
        payload = _experiment_g1(args)
    elif args.group == "g2-analog":
        payload = _experiment_refeed(args, "standard")
    elif args.group == "g3-analog":
        payload = _experiment_refeed(args, "wide")
    else:  # pragma: no cover - argparse choices guard this
        raise UsageError(f"unknown group {args.group}")
    emit(payload)
    return EXIT_OK


def cmd_serve(args):
    from .service import ServiceConfig, resolve_data_dir, serve

    config = ServiceConfig(
        data_dir=resolve_data_dir(args.data_dir),
        host=args.host,
        port=args.port,
        q=args.q,
        auto_cycle_every=args.auto_cycle_every,
        max_rounds=args.max_rounds,
        model_seed=args.seed,
        token=args.token,
    )
    log(f"serving on {config.host}:{config.port} (data: {config.data_dir})")
    serve(config)
    return EXIT_OK


def build_parser():
    parser = Parser(prog="refeednet",
                    description="traffic-density classifier with QoE-gated retraining")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="run seed (printed to stderr)")
        p.add_argument("--no-timestamps", action="store_true",
                       help="exclude timestamps from JSON output")

    p = sub.add_parser("synth", help="materialize a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--domain", choices=("source", "target", "shifted"), default="target")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a corpus directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, help="output checkpoint path")
    p.add_argument("--init", help="initialize from an existing checkpoint")
    p.add_argument("--freeze-base", action="store_true",
                   help="freeze the convolutional base and reinitialize the head")
    p.add_argument("--split", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    p.add_argument("--no-augment", dest="augment", action="store_false")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a corpus directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment", help="run an experiment group end to end")
    p.add_argument("--group", choices=("g1-analog", "g2-analog", "g3-analog"),
                   required=True)
    p.add_argument("--q", type=float, default=0.7)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--lr", type=float, default=DEFAULT_LEARNING_RATE)
    common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("predict", help="classify one PNM image with a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the review/retraining service")
    p.add_argument("--data-dir", help="overrides REFEEDNET_DATA")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8374)
    p.add_argument("--q", type=float, default=0.7)
    p.add_argument("--auto-cycle-every", type=int)
    p.add_argument("--max-rounds", type=int, default=5)
    p.add_argument("--token")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        log(f"seed: {getattr(args, 'seed', 0)}")
        return args.func(args)
    except UsageError as exc:
        log(f"usage error: {exc}")
        return EXIT_VALIDATION
    except ProtocolError as exc:
        log(f"protocol error: {exc}")
        return EXIT_PROTOCOL
    except (IoError, OSError) as exc:
        log(f"io error: {exc}")
        return EXIT_IO
    except ValidationError as exc:
        log(f"validation error: {exc}")
        return EXIT_VALIDATION
    except RefeedNetError as exc:
        log(f"error: {exc}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
