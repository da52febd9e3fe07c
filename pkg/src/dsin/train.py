"""Mini-batch training loop, evaluation, checkpoints and CSV outputs."""

from __future__ import annotations

import base64
import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, from_mapping
from .features import ExampleBatch, FeatureVocab
from .head import CtrModel
from .metrics import auc
from .models import make_model
from .optim import Adam
from .params import ParameterError
from .tensor import NumericError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "dsin-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    test_auc: float
    seconds: float


@dataclass
class TrainReport:
    seed: int
    config_hash: str
    epochs: list = field(default_factory=list)
    best_epoch: int = 0
    best_auc: float = float("-inf")

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "test_auc", "seconds"])
            for e in self.epochs:
                w.writerow([e.epoch, repr(e.train_loss), repr(e.test_auc), f"{e.seconds:.3f}"])


def evaluate_loss(model: CtrModel, data: ExampleBatch, batch_size: int) -> float:
    total = 0.0
    for start in range(0, len(data), batch_size):
        part = data.take(slice(start, start + batch_size))
        total += float(model.loss(part).data) * len(part)
    return total / max(len(data), 1)


def train(model: CtrModel, train_set: ExampleBatch, test_set: ExampleBatch, cfg: RunConfig) -> tuple:
    """Fit ``model`` with Adam and return ``(report, best_state)``.

    Epoch 0 records the untrained model. The best state is the parameter set
    with the highest test AUC seen so far (earliest epoch wins ties).
    """
    report = TrainReport(seed=cfg.seed, config_hash=cfg.hash())
    opt = Adam(model.params, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
    shuffle = np.random.default_rng([cfg.seed, 1])

    started = time.perf_counter()
    best_state = model.params.state()
    loss0 = evaluate_loss(model, train_set, cfg.batch_size)
    auc0 = auc(model.predict(test_set), test_set.labels)
    report.epochs.append(EpochStats(0, loss0, auc0, time.perf_counter() - started))
    report.best_epoch, report.best_auc = 0, auc0

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle.permutation(len(train_set))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = train_set.take(order[start:start + cfg.batch_size])
            model.params.zero_grad()
            step += 1
            try:
                loss = model.loss(batch)
            except NumericError as exc:
                raise TrainingError(f"loss diverged at step {step} (epoch {epoch}): {exc}") from exc
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"loss diverged to {value} at step {step} (epoch {epoch})")
            loss.backward()
            opt.step()
            total += value * len(batch)
        test_auc = auc(model.predict(test_set), test_set.labels)
        stats = EpochStats(epoch, total / len(train_set), test_auc, time.perf_counter() - started)
        report.epochs.append(stats)
        log.info("epoch %d loss %.5f auc %.4f", epoch, stats.train_loss, test_auc)
        if test_auc > report.best_auc:
            report.best_epoch, report.best_auc = epoch, test_auc
            best_state = model.params.state()
    model.params.zero_grad()
    return report, best_state


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def _encode(a: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(text: str, shape) -> np.ndarray:
    return np.frombuffer(base64.b64decode(text), dtype="<f8").reshape(shape).astype(np.float64)


def save_checkpoint(path, model: CtrModel, cfg: RunConfig, state: dict | None = None,
                    epoch: int | None = None) -> None:
    state = state if state is not None else model.params.state()
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "model": model.tag,
        "config": cfg.model_dict(),
        "config_hash": cfg.hash(),
        "epoch": epoch,
        "vocab": model.vocab.to_json(),
        "params": [{"name": n, "shape": list(state[n].shape), "data": _encode(state[n])}
                   for n in model.params],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1))


def load_checkpoint(path) -> tuple:
    """Rebuild the model stored at ``path``; returns ``(model, cfg)``."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    cfg = from_mapping(doc["config"])
    vocab = FeatureVocab.from_json(doc["vocab"])
    model = make_model(doc["model"], vocab, cfg)
    state = {p["name"]: _decode(p["data"], p["shape"]) for p in doc["params"]}
    try:
        model.params.load_state(state)
    except ParameterError as exc:
        raise CheckpointError(f"{path}: {exc.args[0]}") from exc
    return model, cfg


# ---------------------------------------------------------------------------
# plain-data dumps
# ---------------------------------------------------------------------------


def write_scores(path, scores: np.ndarray, labels: np.ndarray) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "label", "score"])
        for i, (y, s) in enumerate(zip(labels, scores)):
            w.writerow([i, int(y), repr(float(s))])


def dump_weights(model: CtrModel, data: ExampleBatch, attention_path=None, activation_path=None,
                 batch_size: int = 512) -> None:
    """Write self-attention (summed over heads) and activation weights as CSV."""
    att_fh = open(attention_path, "w", newline="") if attention_path else None
    act_fh = open(activation_path, "w", newline="") if activation_path else None
    try:
        att = csv.writer(att_fh) if att_fh else None
        act = csv.writer(act_fh) if act_fh else None
        K, T = data.session_mask.shape[1], data.behavior_mask.shape[2]
        if att:
            att.writerow(["example", "session", "query"] + [f"key{t}" for t in range(T)])
        if act:
            act.writerow(["example", "kind"] + [f"session{k}" for k in range(K)])
        for start in range(0, len(data), batch_size):
            part = data.take(slice(start, start + batch_size))
            trace: dict = {}
            model.logits(part, trace=trace)
            for i in range(len(part)):
                ex = start + i
                if att and "attention" in trace:
                    for k in np.flatnonzero(part.session_mask[i]):
                        for t in np.flatnonzero(part.behavior_mask[i, k]):
                            att.writerow([ex, k, t] + [repr(float(v)) for v in trace["attention"][i, k, t]])
                if act:
                    for kind in ("a_I", "a_H"):
                        if kind in trace:
                            act.writerow([ex, kind[2:]] + [repr(float(v)) for v in trace[kind][i]])
    finally:
        for fh in (att_fh, act_fh):
            if fh:
                fh.close()
