"""Session interest extractor: bias/positional encoding, per-session multi-head
self-attention with shared weights, and masked average pooling."""

from __future__ import annotations

import numpy as np

from .params import ModelParams
from .tensor import (ContractError, DimensionError, Tensor, layer_norm, matmul, relu,
                     softmax, tsum, where)


def init_extractor(params: ModelParams, d_model: int, heads: int, K: int, T: int,
                   encoding: str = "bias", d_ff: int | None = None) -> None:
    if d_model % heads:
        raise DimensionError(f"d_model={d_model} not divisible by heads={heads}")
    dh = d_model // heads
    d_ff = d_ff or 4 * d_model
    if encoding == "bias":
        params.zeros("be.session", (K,))
        params.zeros("be.position", (T,))
        params.zeros("be.unit", (d_model,))
    elif encoding == "positional":
        params.zeros("pe", (T, d_model))
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    for name in ("wq", "wk", "wv"):
        params.glorot(f"attn.{name}", (heads, dh, dh))
    params.glorot("attn.wo", (d_model, d_model))
    params.full("ln1.gamma", (d_model,), 1.0)
    params.zeros("ln1.beta", (d_model,))
    params.glorot("ffn.w1", (d_model, d_ff))
    params.zeros("ffn.b1", (d_ff,))
    params.glorot("ffn.w2", (d_ff, d_model))
    params.zeros("ffn.b2", (d_model,))
    params.full("ln2.gamma", (d_model,), 1.0)
    params.zeros("ln2.beta", (d_model,))


def bias_encode(Q: Tensor, w_session: Tensor, w_position: Tensor, w_unit: Tensor) -> Tensor:
    """Add ``w_session[k] + w_position[t] + w_unit[c]`` to every cell of a K x T x d block."""
    K, T, d = Q.shape[-3:]
    if w_session.shape != (K,) or w_position.shape != (T,) or w_unit.shape != (d,):
        raise DimensionError(
            f"bias shapes {w_session.shape}, {w_position.shape}, {w_unit.shape} vs sessions {(K, T, d)}")
    be = w_session.reshape(K, 1, 1) + w_position.reshape(T, 1) + w_unit
    return Q + be


def positional_encode(Q: Tensor, pe: Tensor) -> Tensor:
    if pe.shape != Q.shape[-2:]:
        raise DimensionError(f"positional table {pe.shape} vs sessions {Q.shape}")
    return Q + pe


def self_attention(x: Tensor, mask, params: ModelParams, heads: int, scale: str = "model",
                   eps: float = 1e-6, trace: dict | None = None) -> Tensor:
    """Post-norm transformer block over the T axis of ``x`` (..., T, d).

    Masked positions are never attended to as keys and come out as zero rows.
    """
    mask = np.asarray(mask, dtype=bool)
    *lead, T, d = x.shape
    dh = d // heads
    denom = np.sqrt(d if scale == "model" else dh)

    split = x.reshape(*lead, T, heads, dh).swapaxes(-3, -2)      # (..., H, T, dh)
    q = matmul(split, params["attn.wq"])
    k = matmul(split, params["attn.wk"])
    v = matmul(split, params["attn.wv"])
    scores = matmul(q, k.swapaxes(-1, -2)) * (1.0 / denom)         # (..., H, T, T)
    key_mask = mask[..., None, None, :]
    weights = softmax(scores, axis=-1, mask=key_mask)
    if trace is not None:
        trace["attention"] = weights.data.sum(axis=-3)
    merged = matmul(weights, v).swapaxes(-3, -2).reshape(*lead, T, d)
    attn_out = matmul(merged, params["attn.wo"])

    y1 = layer_norm(x + attn_out, params["ln1.gamma"], params["ln1.beta"], eps)
    ff = matmul(relu(matmul(y1, params["ffn.w1"]) + params["ffn.b1"]), params["ffn.w2"]) + params["ffn.b2"]
    y2 = layer_norm(y1 + ff, params["ln2.gamma"], params["ln2.beta"], eps)
    return where(mask[..., None], y2, 0.0)


def self_attention_session(Qk: Tensor, params: ModelParams, mask, heads: int,
                           scale: str = "model", eps: float = 1e-6) -> Tensor:
    """Single-session form: ``Qk`` is T x d and at least one position must be real."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ContractError("self-attention over a session with no real behaviors")
    return self_attention(Qk, mask, params, heads, scale, eps)


def masked_mean(x: Tensor, mask) -> Tensor:
    """Mean over axis -2 counting only masked-in rows; rows with none give zeros."""
    mask = np.asarray(mask, dtype=bool)
    count = np.maximum(mask.sum(axis=-1, keepdims=True), 1).astype(np.float64)
    return tsum(where(mask[..., None], x, 0.0), axis=-2) * (1.0 / count)


def session_interest(IQ: Tensor, mask) -> Tensor:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ContractError("session interest of a session with no real behaviors")
    return masked_mean(IQ, mask)


def extract_all(Q: Tensor, behavior_mask, params: ModelParams, encoding: str, heads: int,
                scale: str = "model", eps: float = 1e-6, trace: dict | None = None) -> tuple:
    """Encode, attend and pool every session of ``Q`` (..., K, T, d).

    Returns ``(I, session_mask)`` with ``I`` of shape (..., K, d); sessions
    without real behaviors give zero rows.
    """
    behavior_mask = np.asarray(behavior_mask, dtype=bool)
    if encoding == "bias":
        Q = bias_encode(Q, params["be.session"], params["be.position"], params["be.unit"])
    elif encoding == "positional":
        Q = positional_encode(Q, params["pe"])
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    IQ = self_attention(Q, behavior_mask, params, heads, scale, eps, trace)
    return masked_mean(IQ, behavior_mask), behavior_mask.any(axis=-1)
