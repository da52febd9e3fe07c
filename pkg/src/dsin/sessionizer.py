"""Click-log records, session division, padding and the JSONL dataset format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .tensor import ContractError

DEFAULT_GAP_SECONDS = 1800


class IngestionError(ValueError):
    """A dataset file could not be parsed into records."""


class ValidationError(IngestionError):
    """A record parsed but breaks the schema contract (label, ordering, leakage)."""


@dataclass(frozen=True)
class BehaviorEvent:
    item: object
    cat: object
    ts: int


@dataclass
class ExampleRecord:
    user: dict
    item: dict
    behaviors: list
    label: int
    ts: int

    def to_json(self) -> dict:
        return {
            "user": self.user,
            "item": self.item,
            "behaviors": [{"item": b.item, "cat": b.cat, "ts": b.ts} for b in self.behaviors],
            "label": self.label,
            "ts": self.ts,
        }


@dataclass
class SessionizedSequence:
    """K x T grid of (item, category) indices; sessions oldest to newest, padding is 0."""

    items: np.ndarray
    cats: np.ndarray
    behavior_mask: np.ndarray
    session_mask: np.ndarray

    @property
    def K(self) -> int:
        return self.items.shape[0]

    @property
    def T(self) -> int:
        return self.items.shape[1]


def divide_sessions(events: Sequence[BehaviorEvent], gap_seconds: float = DEFAULT_GAP_SECONDS) -> list:
    """Split a time-sorted event list wherever consecutive events are more than
    ``gap_seconds`` apart. A gap of exactly ``gap_seconds`` does not split."""
    if gap_seconds <= 0:
        raise ValueError("gap_seconds must be positive")
    sessions: list = []
    current: list = []
    prev = None
    for ev in events:
        if prev is not None:
            if ev.ts < prev.ts:
                raise ContractError(f"events not sorted by timestamp: {prev.ts} then {ev.ts}")
            if ev.ts - prev.ts > gap_seconds:
                sessions.append(current)
                current = []
        current.append(ev)
        prev = ev
    if current:
        sessions.append(current)
    return sessions


def pad_and_mask(sessions: Sequence[Sequence[tuple]], K: int, T: int) -> SessionizedSequence:
    """Keep the newest ``K`` sessions and the newest ``T`` behaviors of each.

    ``sessions`` holds ``(item_index, cat_index)`` pairs, oldest first.
    """
    if K < 1 or T < 1:
        raise ValueError("K and T must be at least 1")
    items = np.zeros((K, T), dtype=np.int64)
    cats = np.zeros((K, T), dtype=np.int64)
    bmask = np.zeros((K, T), dtype=bool)
    kept = [s for s in sessions if len(s)][-K:]
    for k, sess in enumerate(kept):
        tail = list(sess)[-T:]
        for t, (item, cat) in enumerate(tail):
            items[k, t] = item
            cats[k, t] = cat
            bmask[k, t] = True
    return SessionizedSequence(items, cats, bmask, bmask.any(axis=1))


# ---------------------------------------------------------------------------
# JSONL ingestion
# ---------------------------------------------------------------------------


def _parse_record(obj, where: str) -> ExampleRecord:
    if not isinstance(obj, dict):
        raise IngestionError(f"{where}: record must be a JSON object")
    for key in ("user", "item", "behaviors", "label", "ts"):
        if key not in obj:
            raise IngestionError(f"{where}: missing field {key!r}")
    if not isinstance(obj["user"], dict) or not isinstance(obj["item"], dict):
        raise IngestionError(f"{where}: 'user' and 'item' must be objects")
    label = obj["label"]
    if isinstance(label, bool) or label not in (0, 1):
        raise ValidationError(f"{where}: label must be 0 or 1, got {label!r}")
    ts = obj["ts"]
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise IngestionError(f"{where}: 'ts' must be an integer")
    behaviors = []
    for b in obj["behaviors"]:
        try:
            ev = BehaviorEvent(b["item"], b["cat"], b["ts"])
        except (TypeError, KeyError) as exc:
            raise IngestionError(f"{where}: malformed behavior {b!r}") from exc
        if not isinstance(ev.ts, int) or isinstance(ev.ts, bool):
            raise IngestionError(f"{where}: behavior ts must be an integer")
        if behaviors and ev.ts < behaviors[-1].ts:
            raise ValidationError(f"{where}: behaviors not sorted by timestamp")
        behaviors.append(ev)
    if behaviors and behaviors[-1].ts >= ts:
        raise ValidationError(f"{where}: behavior at {behaviors[-1].ts} does not precede event time {ts}")
    return ExampleRecord(dict(obj["user"]), dict(obj["item"]), behaviors, int(label), ts)


def load_dataset(path) -> list:
    path = Path(path)
    records = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{where}: invalid JSON ({exc.msg})") from exc
            records.append(_parse_record(obj, where))
    return records


def save_dataset(records: Iterable[ExampleRecord], path) -> int:
    n = 0
    with Path(path).open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), separators=(",", ":")) + "\n")
            n += 1
    return n


# ---------------------------------------------------------------------------
# synthetic click logs
# ---------------------------------------------------------------------------

DAY = 86400
EPOCH = 1494028800  # 2017-05-06 00:00:00 UTC


@dataclass
class SynthConfig:
    n_users: int = 5000
    n_items: int = 200
    n_categories: int = 10
    sessions_per_user: int = 4
    behaviors_per_session: int = 5
    interest_shift_prob: float = 0.8
    focus_prob: float = 0.9
    records_per_user: int = 4
    n_days: int = 8
    within_gap: tuple = (10, 1500)
    between_gap: tuple = (1900, 36000)
    recency_decay: float = 0.3
    history_target_prob: float = 0.5
    n_genders: int = 2
    n_ages: int = 6
    n_cities: int = 20
    seed: int = 0

    def validate(self) -> None:
        counts = ("n_users", "n_items", "sessions_per_user", "behaviors_per_session",
                  "records_per_user", "n_days")
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.n_categories < 2:
            raise ValueError("n_categories must be at least 2")
        if self.n_items < self.n_categories:
            raise ValueError("need at least one item per category")
        lo, hi = self.within_gap
        if not 0 <= lo <= hi <= DEFAULT_GAP_SECONDS:
            raise ValueError("within_gap must lie in [0, 1800]")
        lo, hi = self.between_gap
        if not DEFAULT_GAP_SECONDS < lo <= hi:
            raise ValueError("between_gap must exceed 1800 seconds")
        for name in ("interest_shift_prob", "focus_prob", "history_target_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if not 0.0 < self.recency_decay <= 1.0:
            raise ValueError("recency_decay must lie in (0, 1]")


def recency_weights(n_sessions: int, decay: float) -> np.ndarray:
    """Mixture weights over sessions, oldest first; the newest session weighs most."""
    w = decay ** np.arange(n_sessions - 1, -1, -1, dtype=np.float64)
    return w / w.sum()


def _user_timeline(cfg: SynthConfig, rng: np.random.Generator, item_cat, by_cat):
    """Return (behaviors, per-session interests) ending at time 0, oldest first."""
    n_s, n_b = cfg.sessions_per_user, cfg.behaviors_per_session
    interests = [int(rng.integers(cfg.n_categories))]
    for _ in range(n_s - 1):
        cur = interests[-1]
        if rng.random() < cfg.interest_shift_prob:
            cur = int((cur + 1 + rng.integers(cfg.n_categories - 1)) % cfg.n_categories)
        interests.append(cur)

    # offsets are built newest-last then shifted so the last click sits at 0
    offsets, t = [], 0
    for s in range(n_s):
        if s:
            t += int(rng.integers(cfg.between_gap[0], cfg.between_gap[1] + 1))
        for b in range(n_b):
            if b:
                t += int(rng.integers(cfg.within_gap[0], cfg.within_gap[1] + 1))
            offsets.append(t)
    offsets = [o - t for o in offsets]

    behaviors = []
    for s, cat in enumerate(interests):
        for b in range(n_b):
            if rng.random() < cfg.focus_prob:
                item = int(rng.choice(by_cat[cat]))
            else:
                item = int(rng.integers(cfg.n_items))
            behaviors.append((item, int(item_cat[item]), offsets[s * n_b + b]))
    return behaviors, interests


def generate_synthetic(cfg: SynthConfig) -> tuple:
    """Generate (train, test) record lists with session-homogeneous click histories.

    Each user clicks within one latent category per session; the category
    changes between sessions with ``interest_shift_prob``. A record is positive
    when the target's category equals the interest of a session drawn with
    recency-weighted probability. Records on the last day form the test split.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    item_cat = rng.permutation(np.arange(cfg.n_items) % cfg.n_categories)
    by_cat = [np.flatnonzero(item_cat == c) for c in range(cfg.n_categories)]
    weights = recency_weights(cfg.sessions_per_user, cfg.recency_decay)

    train, test = [], []
    for _ in range(cfg.n_users):
        profile = {
            "gender": int(rng.integers(cfg.n_genders)),
            "age": int(rng.integers(cfg.n_ages)),
            "city": int(rng.integers(cfg.n_cities)),
        }
        day = int(rng.integers(cfg.n_days))
        event_ts = EPOCH + day * DAY + int(rng.integers(DAY // 2, DAY - 3600))
        last_click = event_ts - int(rng.integers(60, 1200))
        raw, interests = _user_timeline(cfg, rng, item_cat, by_cat)
        behaviors = [BehaviorEvent(item, cat, last_click + off) for item, cat, off in raw]

        for r in range(cfg.records_per_user):
            if rng.random() < cfg.history_target_prob:
                target_cat = interests[int(rng.integers(len(interests)))]
            else:
                target_cat = int(rng.integers(cfg.n_categories))
            target = int(rng.choice(by_cat[target_cat]))
            drawn = interests[int(rng.choice(len(interests), p=weights))]
            rec = ExampleRecord(
                user=dict(profile),
                item={"item_id": target, "cat_id": target_cat},
                behaviors=list(behaviors),
                label=int(drawn == target_cat),
                ts=event_ts + r,
            )
            (test if day == cfg.n_days - 1 else train).append(rec)
    return train, test
