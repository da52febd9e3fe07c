"""Finite-difference suite covering every primitive op, each layer and each full model."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import tensor as tn
from .config import MODEL_TAGS, RunConfig
from .extractor import bias_encode, extract_all, init_extractor, self_attention
from .features import build_vocab, encode_records
from .head import activate
from .interaction import bilstm, direction, init_lstm
from .models import make_model
from .params import ModelParams
from .sessionizer import SynthConfig, generate_synthetic
from .tensor import GradCheckReport, Tensor, finite_diff_check


@dataclass
class Case:
    """``build(rng)`` returns ``(f, inputs)`` where ``f(*inputs)`` is a scalar Tensor."""

    name: str
    build: Callable
    max_coords: int | None = None


@dataclass
class CaseResult:
    name: str
    report: GradCheckReport


def _leaf(rng, *shape, low=-1.0, high=1.0, name=None):
    return Tensor(rng.uniform(low, high, size=shape), requires_grad=True, name=name)


def _away_from_zero(rng, *shape):
    x = rng.uniform(0.1, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return Tensor(x, requires_grad=True)


def _weighted(rng, shape):
    """Random projection so each check exercises a non-trivial upstream gradient."""
    w = rng.normal(size=shape)
    return lambda out: tn.tsum(out * w)


def primitive_cases() -> list:
    def matmul_case(rng):
        m, k, n = rng.integers(1, 5, size=3)
        r = _weighted(rng, (m, n))
        return (lambda a, b: r(tn.matmul(a, b))), [_leaf(rng, m, k), _leaf(rng, k, n)]

    def batched_matmul_case(rng):
        r = _weighted(rng, (3, 2, 4, 5))
        return (lambda a, b: r(tn.matmul(a, b))), [_leaf(rng, 3, 2, 4, 3), _leaf(rng, 2, 3, 5)]

    def broadcast_add_case(rng):
        r = _weighted(rng, (3, 4))
        return (lambda a, b: r(a + b)), [_leaf(rng, 3, 4), _leaf(rng, 4)]

    def mul_div_case(rng):
        r = _weighted(rng, (2, 3))
        return (lambda a, b: r(a * b / (b * b + 1.0) - a)), [_leaf(rng, 2, 3), _leaf(rng, 1, 3)]

    def reduce_case(rng):
        return (lambda x: tn.tsum(tn.mean(x, axis=1) * tn.tsum(x, axis=(0, 2), keepdims=True).reshape(1, -1)[:, :3])), \
            [_leaf(rng, 2, 3, 3)]

    def shape_case(rng):
        r = _weighted(rng, (4, 3, 2))
        return (lambda x: r(x.reshape(2, 3, 4).transpose(2, 1, 0))), [_leaf(rng, 6, 4)]

    def index_case(rng):
        r = _weighted(rng, (2, 3))
        return (lambda x: r(x[1:3, ::2] + x[[0, 0], 1:4:1][:, :3:1][:, ::1][:, :3][:, [0, 1, 2]])), \
            [_leaf(rng, 4, 5)]

    def concat_stack_case(rng):
        r = _weighted(rng, (2, 2, 5))
        return (lambda a, b: r(tn.stack([tn.concat([a, b], axis=-1)] * 2, axis=0))), \
            [_leaf(rng, 2, 2), _leaf(rng, 2, 3)]

    def where_case(rng):
        cond = rng.random((3, 4)) < 0.5
        r = _weighted(rng, (3, 4))
        return (lambda a, b: r(tn.where(cond, a, b))), [_leaf(rng, 3, 4), _leaf(rng, 3, 4)]

    def pointwise_case(kind):
        def build(rng):
            r = _weighted(rng, (3, 4))
            x = _away_from_zero(rng, 3, 4) if kind == "relu" else _leaf(rng, 3, 4, low=-3, high=3)
            return (lambda v: r(tn.elementwise(v, kind))), [x]
        return build

    def exp_log_case(rng):
        r = _weighted(rng, (5,))
        return (lambda x, y: r(tn.exp(x) + tn.log(y))), [_leaf(rng, 5), _leaf(rng, 5, low=0.5, high=2.0)]

    def softmax_case(rng):
        mask = rng.random((3, 5)) < 0.7
        mask[:, 0] = True
        r = _weighted(rng, (3, 5))
        return (lambda x: r(tn.softmax(x, axis=-1, mask=mask))), [_leaf(rng, 3, 5, low=-3, high=3)]

    def layer_norm_case(rng):
        r = _weighted(rng, (2, 3, 6))
        return (lambda x, g, b: r(tn.layer_norm(x, g, b, 1e-6))), \
            [_leaf(rng, 2, 3, 6), _leaf(rng, 6, low=0.5, high=1.5), _leaf(rng, 6)]

    def embedding_case(rng):
        ids = np.array([[1, 2, 0], [2, 2, 3]])
        r = _weighted(rng, (2, 3, 4))
        return (lambda t: r(tn.embedding(t, ids))), [_leaf(rng, 4, 4)]

    def bce_case(rng):
        y = (rng.random(6) < 0.5).astype(float)
        return (lambda z: tn.bce_with_logits(z, y)), [_leaf(rng, 6, low=-4, high=4)]

    cases = [
        Case("matmul", matmul_case), Case("matmul_broadcast", batched_matmul_case),
        Case("add_broadcast", broadcast_add_case), Case("mul_div", mul_div_case),
        Case("sum_mean", reduce_case), Case("reshape_transpose", shape_case),
        Case("getitem", index_case), Case("concat_stack", concat_stack_case),
        Case("where", where_case), Case("exp_log", exp_log_case),
        Case("softmax_masked", softmax_case), Case("layer_norm", layer_norm_case),
        Case("embedding", embedding_case), Case("bce_with_logits", bce_case),
    ]
    cases += [Case(kind, pointwise_case(kind)) for kind in ("sigmoid", "tanh", "relu")]
    return cases


def layer_cases(d: int = 8, K: int = 3, T: int = 4, heads: int = 2) -> list:
    def masks(rng, B):
        bmask = rng.random((B, K, T)) < 0.7
        bmask[:, 0, 0] = True
        return bmask

    def bias_case(rng):
        r = _weighted(rng, (K, T, d))
        return (lambda q, a, b, c: r(bias_encode(q, a, b, c))), \
            [_leaf(rng, K, T, d), _leaf(rng, K), _leaf(rng, T), _leaf(rng, d)]

    def attention_case(rng):
        p = ModelParams(rng)
        init_extractor(p, d, heads, K, T, "bias")
        for name in ("be.session", "be.position", "be.unit"):
            p[name].data[:] = rng.normal(scale=0.3, size=p[name].shape)
        bmask = masks(rng, 2)
        names = list(p)
        x = _leaf(rng, 2, K, T, d, name="Q")
        r = _weighted(rng, (2, K, d))

        def f(q, *ts):
            local = dict(zip(names, ts))
            return r(extract_all(q, bmask, local, "bias", heads)[0])

        return f, [x] + [p[n] for n in names]

    def lstm_case(rng):
        p = ModelParams(rng)
        init_lstm(p, "fwd", d)
        init_lstm(p, "bwd", d)
        for name in p:
            if name.split(".")[1].startswith("w_c"):
                p[name].data[:] = rng.normal(scale=0.5, size=d)
        smask = np.array([[True, True, False], [True, False, False]])
        names = list(p)
        x = _leaf(rng, 2, K, d, name="I")

        def f(i, *ts):
            local = ModelParams()
            local.update(zip(names, ts))
            return tn.tsum(bilstm(i, smask, direction(local, "fwd"), direction(local, "bwd")))

        return f, [x] + [p[n] for n in names]

    def activation_case(rng):
        smask = np.array([[True, True, False], [True, False, False]])
        r = _weighted(rng, (2, d))
        return (lambda i, w, x: r(activate(i, smask, w, x))), \
            [_leaf(rng, 2, K, d), _leaf(rng, d, 2 * d), _leaf(rng, 2, 2 * d)]

    def self_attention_dh_case(rng):
        p = ModelParams(rng)
        init_extractor(p, d, heads, K, T, "positional")
        mask = np.array([True, True, True, False])
        names = list(p)
        r = _weighted(rng, (T, d))

        def f(q, *ts):
            return r(self_attention(q, mask, dict(zip(names, ts)), heads, scale="dh"))

        return f, [_leaf(rng, T, d)] + [p[n] for n in names]

    return [Case("bias_encode", bias_case), Case("self_attention", attention_case, 12),
            Case("self_attention_dh", self_attention_dh_case, 12),
            Case("bilstm", lstm_case, 12), Case("activate", activation_case)]


def tiny_batch(cfg: RunConfig, seed: int, n: int = 2):
    train, test = generate_synthetic(SynthConfig(
        n_users=6, n_items=12, n_categories=3, sessions_per_user=cfg.K,
        behaviors_per_session=cfg.T - 1, n_days=2, seed=seed))
    records = train + test
    vocab = build_vocab(records)
    batch = encode_records(records, vocab, cfg.K, cfg.T, cfg.gap_seconds)
    # drop one session and one behavior so padding paths are exercised
    batch.behavior_mask[0, -1] = False
    batch.session_mask[0, -1] = False
    batch.sess_item[0, -1] = batch.sess_cat[0, -1] = 0
    idx = np.array([0, 1 + (seed % (len(batch) - 1))])[:n]
    batch = batch.take(idx)
    batch.labels[:] = [1.0, 0.0][:n]
    return vocab, batch


def model_cases(d: int = 8, K: int = 3, T: int = 4, coords: int = 6) -> list:
    def build_for(tag):
        def build(rng):
            seed = int(rng.integers(1 << 30))
            cfg = RunConfig(model=tag, d_model=d, K=K, T=T, heads=2, seed=seed)
            vocab, batch = tiny_batch(cfg, seed)
            model = make_model(tag, vocab, cfg)
            for name, t in model.params.items():
                # random non-zero biases and peepholes so every path carries signal
                if t.ndim == 1 and not name.startswith("ln"):
                    t.data[:] = rng.normal(scale=0.2, size=t.shape)
            names = list(model.params)

            def f(*ts):
                return model.loss(batch)

            return f, [model.params[n] for n in names]
        return build

    return [Case(f"model:{tag}", build_for(tag), coords) for tag in MODEL_TAGS]


def default_suite() -> list:
    return primitive_cases() + layer_cases() + model_cases()


def run_suite(cases: list, h: float = 1e-5, tol: float = 1e-4, seed: int = 0,
              repeats: int = 1) -> list:
    results = []
    for case in cases:
        worst = None
        for r in range(repeats):
            rng = np.random.default_rng([seed, r, zlib.crc32(case.name.encode())])
            f, inputs = case.build(rng)
            rep = finite_diff_check(f, inputs, h=h, tol=tol, max_coords=case.max_coords, rng=rng)
            if worst is None or rep.max_rel_err > worst.max_rel_err:
                worst = rep
        results.append(CaseResult(case.name, worst))
    return results
