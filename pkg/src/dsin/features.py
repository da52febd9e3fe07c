"""Sparse-feature vocabularies, embedding tables and batch encoding."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .sessionizer import DEFAULT_GAP_SECONDS, IngestionError, divide_sessions, pad_and_mask
from .tensor import Tensor, concat, embedding

VOCAB_VERSION = 1
ITEM_FIELD = "item_id"
CAT_FIELD = "cat_id"


class SchemaError(ValueError):
    pass


@dataclass
class FeatureVocab:
    """Per-field map from raw id (as a string) to a dense index; 0 is reserved."""

    user_fields: tuple
    item_fields: tuple
    fields: dict

    def size(self, field: str) -> int:
        return len(self.fields[field]) + 1

    def index(self, field: str, raw) -> int:
        return self.fields[field].get(str(raw), 0)

    def to_json(self) -> dict:
        return {
            "version": VOCAB_VERSION,
            "user_fields": list(self.user_fields),
            "item_fields": list(self.item_fields),
            "fields": self.fields,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureVocab":
        if obj.get("version") != VOCAB_VERSION:
            raise SchemaError(f"unsupported vocab version {obj.get('version')!r}")
        return cls(tuple(obj["user_fields"]), tuple(obj["item_fields"]),
                   {f: dict(m) for f, m in obj["fields"].items()})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "FeatureVocab":
        return cls.from_json(json.loads(Path(path).read_text()))


def build_vocab(records: Sequence) -> FeatureVocab:
    """Index every raw id seen in ``records`` in first-seen order.

    Behavior item and category ids share the target item's ``item_id`` and
    ``cat_id`` fields, so history and target live in one id space.
    """
    if not records:
        raise IngestionError("cannot build a vocabulary from an empty dataset")
    user_fields = tuple(records[0].user)
    item_fields = tuple(records[0].item)
    for name in (ITEM_FIELD, CAT_FIELD):
        if name not in item_fields:
            raise SchemaError(f"item profile must contain {name!r}")
    fields: dict = {f: {} for f in user_fields + item_fields}

    def see(field, raw):
        table = fields[field]
        key = str(raw)
        if key not in table:
            table[key] = len(table) + 1

    for rec in records:
        if tuple(rec.user) != user_fields or tuple(rec.item) != item_fields:
            raise SchemaError("records disagree on profile fields")
        for f in user_fields:
            see(f, rec.user[f])
        for f in item_fields:
            see(f, rec.item[f])
        for b in rec.behaviors:
            see(ITEM_FIELD, b.item)
            see(CAT_FIELD, b.cat)
    return FeatureVocab(user_fields, item_fields, fields)


class EmbeddingTable:
    """Trainable ``rows x dim`` matrix whose row 0 is padding and stays zero."""

    def __init__(self, weight: Tensor):
        weight.data[0] = 0.0
        self.weight = weight

    @property
    def rows(self) -> int:
        return self.weight.shape[0]

    def __call__(self, ids) -> Tensor:
        return embedding(self.weight, ids, padding_idx=0)


def embed_lookup(table: EmbeddingTable, ids) -> Tensor:
    return table(ids)


def behavior_embed(item_ids, cat_ids, item_table: EmbeddingTable, cat_table: EmbeddingTable) -> Tensor:
    """Concatenate item-id and category halves into one behavior vector per id pair."""
    item_ids, cat_ids = np.asarray(item_ids), np.asarray(cat_ids)
    if item_ids.shape != cat_ids.shape:
        raise SchemaError(f"item ids {item_ids.shape} and category ids {cat_ids.shape} differ")
    return concat([item_table(item_ids), cat_table(cat_ids)], axis=-1)


@dataclass
class ExampleBatch:
    user: np.ndarray       # (B, N_u) indices
    item: np.ndarray       # (B, N_i) indices
    sess_item: np.ndarray  # (B, K, T)
    sess_cat: np.ndarray   # (B, K, T)
    behavior_mask: np.ndarray
    session_mask: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    def take(self, idx) -> "ExampleBatch":
        return ExampleBatch(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))

    def target_ids(self, vocab: FeatureVocab) -> tuple:
        return (self.item[:, vocab.item_fields.index(ITEM_FIELD)],
                self.item[:, vocab.item_fields.index(CAT_FIELD)])


def encode_records(records: Sequence, vocab: FeatureVocab, K: int, T: int,
                   gap_seconds: float = DEFAULT_GAP_SECONDS) -> ExampleBatch:
    """Map raw records to index arrays, sessionizing each behavior history."""
    B = len(records)
    user = np.zeros((B, len(vocab.user_fields)), dtype=np.int64)
    item = np.zeros((B, len(vocab.item_fields)), dtype=np.int64)
    sess_item = np.zeros((B, K, T), dtype=np.int64)
    sess_cat = np.zeros((B, K, T), dtype=np.int64)
    bmask = np.zeros((B, K, T), dtype=bool)
    smask = np.zeros((B, K), dtype=bool)
    labels = np.zeros(B, dtype=np.float64)
    for i, rec in enumerate(records):
        user[i] = [vocab.index(f, rec.user.get(f)) for f in vocab.user_fields]
        item[i] = [vocab.index(f, rec.item.get(f)) for f in vocab.item_fields]
        sessions = [[(vocab.index(ITEM_FIELD, b.item), vocab.index(CAT_FIELD, b.cat)) for b in s]
                    for s in divide_sessions(rec.behaviors, gap_seconds)]
        seq = pad_and_mask(sessions, K, T)
        sess_item[i], sess_cat[i] = seq.items, seq.cats
        bmask[i], smask[i] = seq.behavior_mask, seq.session_mask
        labels[i] = rec.label
    return ExampleBatch(user, item, sess_item, sess_cat, bmask, smask, labels)
