"""Target-aware activation over session vectors, the prediction MLP and the loss.

Also holds :class:`CtrModel`, the embedding/MLP plumbing every model variant
shares.
"""

from __future__ import annotations

import numpy as np

from .features import CAT_FIELD, ITEM_FIELD, EmbeddingTable, ExampleBatch, FeatureVocab, behavior_embed
from .params import ModelParams, make_mlp, mlp_forward
from .tensor import ContractError, Tensor, bce_with_logits, concat, matmul, softmax, tsum


def activate(interests: Tensor, mask, W: Tensor, x_item: Tensor, strict: bool = True,
             trace: dict | None = None, key: str = "activation") -> Tensor:
    """Weight session vectors (..., K, w) by their affinity to the flattened target.

    The affinity of session k is ``interests_k @ W @ x_item``; the weights are a
    softmax over real sessions and the result is their weighted sum.
    """
    mask = np.asarray(mask, dtype=bool)
    if strict and not mask.any(axis=-1).all():
        raise ContractError("activation over a sequence with no real sessions")
    projected = matmul(interests, W)                                   # (..., K, N_i*d)
    logits = tsum(projected * x_item.reshape(*x_item.shape[:-1], 1, x_item.shape[-1]), axis=-1)
    a = softmax(logits, axis=-1, mask=mask)
    if trace is not None:
        trace[key] = a.data
    return tsum(a.reshape(*a.shape, 1) * interests, axis=-2)


def nll_loss(logits: Tensor, labels) -> Tensor:
    """Batch-mean binary negative log-likelihood of ``sigmoid(logits)``."""
    return bce_with_logits(logits, labels)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


class CtrModel:
    """Profile and behavior embeddings plus the final MLP.

    Subclasses add their behavior block in :meth:`behavior_features` and
    declare its width in :meth:`behavior_width`.
    """

    tag = ""
    uses_behaviors = True

    def __init__(self, vocab: FeatureVocab, cfg, seed: int | None = None):
        self.vocab = vocab
        self.cfg = cfg
        self.params = ModelParams(np.random.default_rng(cfg.seed if seed is None else seed))
        d = cfg.d_model
        p = self.params
        self.user_tables = [EmbeddingTable(p.glorot(f"emb.user.{f}", (vocab.size(f), d)))
                            for f in vocab.user_fields]
        self.item_tables = [EmbeddingTable(p.glorot(f"emb.item.{f}", (vocab.size(f), d)))
                            for f in vocab.item_fields]
        if self.uses_behaviors:
            self.bhv_item = EmbeddingTable(p.glorot("emb.bhv.item", (vocab.size(ITEM_FIELD), d // 2)))
            self.bhv_cat = EmbeddingTable(p.glorot("emb.bhv.cat", (vocab.size(CAT_FIELD), d // 2)))
        self.build()
        n_profile = (len(vocab.user_fields) + len(vocab.item_fields)) * d
        self.mlp = make_mlp(p, "mlp", [n_profile + self.behavior_width()] + list(cfg.mlp_hidden) + [1])

    def build(self) -> None:
        pass

    def behavior_width(self) -> int:
        return 0

    def profile(self, batch: ExampleBatch) -> tuple:
        """Flattened user profile (B, N_u*d) and item profile (B, N_i*d)."""
        xu = concat([t(batch.user[:, j]) for j, t in enumerate(self.user_tables)], axis=-1)
        xi = concat([t(batch.item[:, j]) for j, t in enumerate(self.item_tables)], axis=-1)
        return xu, xi

    def sessions(self, batch: ExampleBatch) -> Tensor:
        return behavior_embed(batch.sess_item, batch.sess_cat, self.bhv_item, self.bhv_cat)

    def behavior_features(self, batch: ExampleBatch, x_item: Tensor, trace) -> list:
        return []

    def logits(self, batch: ExampleBatch, trace: dict | None = None) -> Tensor:
        xu, xi = self.profile(batch)
        blocks = [xu, xi] + self.behavior_features(batch, xi, trace)
        out = mlp_forward(concat(blocks, axis=-1), self.mlp)
        return out.reshape(out.shape[0])

    def loss(self, batch: ExampleBatch) -> Tensor:
        return nll_loss(self.logits(batch), batch.labels)

    def predict(self, batch: ExampleBatch, batch_size: int = 1024) -> np.ndarray:
        out = []
        for start in range(0, len(batch), batch_size):
            z = self.logits(batch.take(slice(start, start + batch_size))).data
            e = np.exp(-np.abs(z))
            out.append(np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e)))
        return np.concatenate(out) if out else np.zeros(0)
