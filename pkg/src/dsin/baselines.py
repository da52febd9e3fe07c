"""Comparison models: average pooling over behaviors (with/without behaviors) and
target attention over individual behaviors."""

from __future__ import annotations

import numpy as np

from .extractor import masked_mean
from .features import ExampleBatch, behavior_embed
from .head import CtrModel
from .params import make_mlp, mlp_forward
from .tensor import Tensor, concat, softmax, tsum


def _flat(batch: ExampleBatch) -> tuple:
    B, K, T = batch.sess_item.shape
    return (batch.sess_item.reshape(B, K * T), batch.sess_cat.reshape(B, K * T),
            batch.behavior_mask.reshape(B, K * T))


class YoutubeNet(CtrModel):
    """Masked mean of all behavior embeddings, ignoring session structure."""

    def __init__(self, vocab, cfg, use_behaviors: bool = True, seed: int | None = None):
        self.uses_behaviors = use_behaviors
        self.tag = "youtube" if use_behaviors else "youtube-no-ub"
        super().__init__(vocab, cfg, seed)

    def behavior_width(self) -> int:
        return self.cfg.d_model if self.uses_behaviors else 0

    def behavior_features(self, batch, x_item, trace) -> list:
        if not self.uses_behaviors:
            return []
        items, cats, mask = _flat(batch)
        return [masked_mean(behavior_embed(items, cats, self.bhv_item, self.bhv_cat), mask)]


def din_attention(behaviors: Tensor, query: Tensor, mask, layers: list) -> tuple:
    """Score each behavior with a small ReLU network on (b, q, b*q) and softmax over real ones.

    Returns ``(weights, pooled)``; users with no behaviors pool to zeros.
    """
    L = behaviors.shape[-2]
    q = query.reshape(query.shape[0], 1, query.shape[-1])
    q_rep = concat([q] * L, axis=-2)
    feats = concat([behaviors, q_rep, behaviors * q_rep], axis=-1)
    scores = mlp_forward(feats, layers)
    scores = scores.reshape(*scores.shape[:-1])
    a = softmax(scores, axis=-1, mask=np.asarray(mask, dtype=bool))
    return a, tsum(a.reshape(*a.shape, 1) * behaviors, axis=-2)


class DIN(CtrModel):
    tag = "din"

    def build(self) -> None:
        d = self.cfg.d_model
        self.scorer = make_mlp(self.params, "din", [3 * d, self.cfg.din_hidden, 1])

    def behavior_width(self) -> int:
        return self.cfg.d_model

    def behavior_features(self, batch, x_item, trace) -> list:
        items, cats, mask = _flat(batch)
        seq = behavior_embed(items, cats, self.bhv_item, self.bhv_cat)
        t_item, t_cat = batch.target_ids(self.vocab)
        query = behavior_embed(t_item, t_cat, self.bhv_item, self.bhv_cat)
        a, pooled = din_attention(seq, query, mask, self.scorer)
        if trace is not None:
            trace["a_behavior"] = a.data
        return [pooled]

