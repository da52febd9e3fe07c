"""Independent reference implementations written with plain Python loops.

They share no code with the package and are only used to freeze expected values.
"""

import math


def matmul_loops(A, B):
    return [[sum(A[i][l] * B[l][j] for l in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def auc_pairs(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def sessions_brute(timestamps, gap):
    """Split index lists wherever a consecutive pair is more than ``gap`` apart."""
    if not timestamps:
        return []
    cuts = [i + 1 for i in range(len(timestamps) - 1) if timestamps[i + 1] - timestamps[i] > gap]
    bounds = [0] + cuts + [len(timestamps)]
    return [timestamps[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def _layer_norm_row(row, gamma, beta, eps):
    mu = sum(row) / len(row)
    var = sum((v - mu) ** 2 for v in row) / len(row)
    return [gamma[c] * (row[c] - mu) / math.sqrt(var + eps) + beta[c] for c in range(len(row))]


def attention_block_loops(x, mask, P, heads, scale_dim, eps):
    """Multi-head self-attention over one session followed by W^O, residual + layer
    norm, ReLU feed-forward, residual + layer norm; masked rows come out zero.

    ``P`` maps names to nested lists: wq/wk/wv are heads x dh x dh.
    """
    T, d = len(x), len(x[0])
    dh = d // heads
    concat = [[0.0] * d for _ in range(T)]
    for h in range(heads):
        cols = range(h * dh, (h + 1) * dh)
        xs = [[x[t][c] for c in cols] for t in range(T)]
        q = [[sum(xs[t][a] * P["wq"][h][a][b] for a in range(dh)) for b in range(dh)] for t in range(T)]
        k = [[sum(xs[t][a] * P["wk"][h][a][b] for a in range(dh)) for b in range(dh)] for t in range(T)]
        v = [[sum(xs[t][a] * P["wv"][h][a][b] for a in range(dh)) for b in range(dh)] for t in range(T)]
        for t in range(T):
            logits = {j: sum(q[t][b] * k[j][b] for b in range(dh)) / math.sqrt(scale_dim)
                      for j in range(T) if mask[j]}
            top = max(logits.values())
            expd = {j: math.exp(s - top) for j, s in logits.items()}
            z = sum(expd.values())
            for b in range(dh):
                concat[t][h * dh + b] = sum(expd[j] / z * v[j][b] for j in expd)
    out = []
    for t in range(T):
        if not mask[t]:
            out.append([0.0] * d)
            continue
        attn = [sum(concat[t][a] * P["wo"][a][c] for a in range(d)) for c in range(d)]
        y1 = _layer_norm_row([x[t][c] + attn[c] for c in range(d)], P["ln1.gamma"], P["ln1.beta"], eps)
        hidden = [max(0.0, sum(y1[a] * P["w1"][a][j] for a in range(d)) + P["b1"][j])
                  for j in range(len(P["b1"]))]
        ff = [sum(hidden[j] * P["w2"][j][c] for j in range(len(hidden))) + P["b2"][c] for c in range(d)]
        out.append(_layer_norm_row([y1[c] + ff[c] for c in range(d)], P["ln2.gamma"], P["ln2.beta"], eps))
    return out


def extractor_params_as_lists(params):
    names = {"attn.wq": "wq", "attn.wk": "wk", "attn.wv": "wv", "attn.wo": "wo",
             "ffn.w1": "w1", "ffn.b1": "b1", "ffn.w2": "w2", "ffn.b2": "b2",
             "ln1.gamma": "ln1.gamma", "ln1.beta": "ln1.beta",
             "ln2.gamma": "ln2.gamma", "ln2.beta": "ln2.beta"}
    return {short: params[full].data.tolist() for full, short in names.items()}
