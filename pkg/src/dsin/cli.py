"""Command-line entry point: ``dsin {synth-data,train,evaluate,gradcheck}``.

Exit codes: 0 success, 1 runtime or check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path

from .config import MODEL_TAGS, ConfigError, load_config
from .features import SchemaError, build_vocab, encode_records
from .gradcheck import default_suite, run_suite
from .metrics import MetricError, auc
from .models import make_model
from .sessionizer import IngestionError, generate_synthetic, load_dataset, save_dataset
from .train import (CheckpointError, TrainingError, dump_weights, load_checkpoint, save_checkpoint,
                    train, write_scores)

log = logging.getLogger("dsin")


class UsageError(Exception):
    pass


def _overrides(args, names) -> dict:
    out = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def cmd_synth_data(args) -> int:
    cfg = load_config(args.config, _overrides(args, ["seed"]))
    train_set, test_set = generate_synthetic(cfg.synth())
    n_train = save_dataset(train_set, args.out_train)
    n_test = save_dataset(test_set, args.out_test)
    print(f"wrote {n_train} train records to {args.out_train}")
    print(f"wrote {n_test} test records to {args.out_test}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config, _overrides(args, ["model", "seed", "epochs", "lr", "batch_size",
                                                     "train", "test", "out_dir"]))
    if not cfg.train or not cfg.test:
        raise UsageError("train needs --train and --test (or train/test config keys)")
    if (args.dump_attention or args.dump_activation) and not cfg.model.startswith("dsin"):
        raise UsageError("--dump-attention/--dump-activation need a dsin-* model")
    train_records = load_dataset(cfg.train)
    test_records = load_dataset(cfg.test)
    vocab = build_vocab(train_records)
    train_set = encode_records(train_records, vocab, cfg.K, cfg.T, cfg.gap_seconds)
    test_set = encode_records(test_records, vocab, cfg.K, cfg.T, cfg.gap_seconds)

    model = make_model(cfg.model, vocab, cfg)
    report, best = train(model, train_set, test_set, cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "metrics.csv")
    save_checkpoint(out / "checkpoint.json", model, cfg, best, report.best_epoch)
    for e in report.epochs:
        print(f"epoch {e.epoch:3d}  train_loss {e.train_loss:.5f}  test_auc {e.test_auc:.4f}")
    print(f"best epoch {report.best_epoch} test AUC {report.best_auc:.4f}; config {report.config_hash}")

    if args.dump_attention or args.dump_activation:
        model.params.load_state(best)
        dump_weights(model, test_set, args.dump_attention, args.dump_activation)
    return 0


def cmd_evaluate(args) -> int:
    model, cfg = load_checkpoint(args.checkpoint)
    records = load_dataset(args.test)
    data = encode_records(records, model.vocab, cfg.K, cfg.T, cfg.gap_seconds)
    scores = model.predict(data)
    value = auc(scores, data.labels)
    write_scores(args.scores, scores, data.labels)
    if args.dump_attention or args.dump_activation:
        dump_weights(model, data, args.dump_attention, args.dump_activation)
    print(f"AUC {value:.4f}")
    return 0


def cmd_gradcheck(args) -> int:
    results = run_suite(default_suite(), h=args.h, tol=args.tol, seed=args.seed, repeats=args.repeats)
    worst = max(results, key=lambda r: r.report.max_rel_err)
    failed = [r for r in results if not r.report.passed]
    for r in results:
        status = "ok  " if r.report.passed else "FAIL"
        print(f"{status} {r.name:22s} max_rel_err={r.report.max_rel_err:.3e}  ({r.report.checked} coords)")
    if failed:
        print(f"gradcheck failed: worst offender {worst.name} at {worst.report.worst} "
              f"(rel err {worst.report.max_rel_err:.3e} >= tol {args.tol:g})", file=sys.stderr)
        return 1
    print(f"gradcheck passed: {len(results)} cases, worst {worst.name} {worst.report.max_rel_err:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="generate a synthetic session-structured click log")
    p.add_argument("--config")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train one model and write metrics.csv + checkpoint.json")
    p.add_argument("--config")
    p.add_argument("--model", choices=MODEL_TAGS)
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--dump-attention")
    p.add_argument("--dump-activation")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a test set with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--scores", default="scores.csv")
    p.add_argument("--dump-attention")
    p.add_argument("--dump-activation")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gradcheck", help="finite-difference check of every op and model")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _thread_limit():
    raw = os.environ.get("SIN_THREADS")
    if not raw:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(raw)))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"dsin: error: {exc}", file=sys.stderr)
        return 2
    except (IngestionError, SchemaError, MetricError, CheckpointError, TrainingError,
            OSError, ValueError) as exc:
        print(f"dsin: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
