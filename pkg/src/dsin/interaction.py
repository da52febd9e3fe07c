"""Session interest interaction: a bi-directional peephole LSTM over session interests."""

from __future__ import annotations

import numpy as np

from .params import ModelParams
from .tensor import ContractError, Tensor, concat, matmul, sigmoid, stack, tanh, where

GATES = ("i", "f", "c", "o")


def init_lstm(params: ModelParams, prefix: str, d: int, forget_bias: float = 1.0) -> dict:
    p = {}
    for g in GATES:
        p[f"w_x{g}"] = params.glorot(f"{prefix}.w_x{g}", (d, d))
        p[f"w_h{g}"] = params.glorot(f"{prefix}.w_h{g}", (d, d))
    for g in ("i", "f", "o"):
        p[f"w_c{g}"] = params.zeros(f"{prefix}.w_c{g}", (d,))
    for g in GATES:
        p[f"b_{g}"] = params.full(f"{prefix}.b_{g}", (d,), forget_bias if g == "f" else 0.0)
    return p


def direction(params: ModelParams, prefix: str) -> dict:
    """Collect one direction's tensors from a full parameter set."""
    cut = len(prefix) + 1
    return {name[cut:]: t for name, t in params.items() if name.startswith(prefix + ".")}


def _fuse(p: dict) -> tuple:
    wx = concat([p[f"w_x{g}"] for g in GATES], axis=-1)
    wh = concat([p[f"w_h{g}"] for g in GATES], axis=-1)
    b = concat([p[f"b_{g}"] for g in GATES], axis=-1)
    return wx, wh, b


def _cell(xz: Tensor, h_prev: Tensor, c_prev: Tensor, wh: Tensor, p: dict) -> tuple:
    """Cell update given the input projection ``xz`` (..., 4d) with biases folded in."""
    d = c_prev.shape[-1]
    z = xz + matmul(h_prev, wh)
    i = sigmoid(z[..., 0:d] + p["w_ci"] * c_prev)
    f = sigmoid(z[..., d:2 * d] + p["w_cf"] * c_prev)
    c = f * c_prev + i * tanh(z[..., 2 * d:3 * d])
    o = sigmoid(z[..., 3 * d:] + p["w_co"] * c)
    return o * tanh(c), c


def lstm_step(x: Tensor, h_prev: Tensor, c_prev: Tensor, p: dict) -> tuple:
    """One peephole LSTM cell update; peepholes are diagonal (elementwise).

    ``x``, ``h_prev`` and ``c_prev`` are (..., d); a single vector is allowed.
    """
    if x.ndim == 1:
        h, c = lstm_step(x.reshape(1, -1), h_prev.reshape(1, -1), c_prev.reshape(1, -1), p)
        return h.reshape(-1), c.reshape(-1)
    wx, wh, b = _fuse(p)
    return _cell(matmul(x, wx) + b, h_prev, c_prev, wh, p)


def _run(I: Tensor, mask: np.ndarray, p: dict, order) -> list:
    wx, wh, b = _fuse(p)
    xz = matmul(I, wx) + b                                   # (..., K, 4d) for all steps at once
    d = wh.shape[0]
    h = Tensor(np.zeros(I.shape[:-2] + (d,)))
    c = Tensor(np.zeros(I.shape[:-2] + (d,)))
    outs = [None] * I.shape[-2]
    for k in order:
        h_new, c_new = _cell(xz[..., k, :], h, c, wh, p)
        m = mask[..., k, None]
        # padded slots carry the state through and emit zeros
        h = where(m, h_new, h)
        c = where(m, c_new, c)
        outs[k] = where(m, h_new, 0.0)
    return outs


def bilstm(I: Tensor, session_mask, fwd: dict, bwd: dict, merge: str = "sum",
           strict: bool = True) -> Tensor:
    """Run forward (oldest to newest) and backward passes over (..., K, d) interests.

    ``merge='sum'`` adds the two hidden states; ``'concat'`` stacks them to 2d.
    """
    mask = np.asarray(session_mask, dtype=bool)
    if strict and not mask.any(axis=-1).all():
        raise ContractError("Bi-LSTM over a sequence with no real sessions")
    if I.ndim == 2:
        return bilstm(I.reshape(1, *I.shape), mask[None], fwd, bwd, merge, strict).reshape(
            I.shape[0], -1)
    K = I.shape[-2]
    hf = stack(_run(I, mask, fwd, range(K)), axis=-2)
    hb = stack(_run(I, mask, bwd, range(K - 1, -1, -1)), axis=-2)
    if merge == "sum":
        return hf + hb
    if merge == "concat":
        return concat([hf, hb], axis=-1)
    raise ValueError(f"unknown merge {merge!r}")
