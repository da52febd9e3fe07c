"""The session interest network and its ablations (positional encoding, no interaction layer)."""

from __future__ import annotations

from .extractor import extract_all, init_extractor
from .features import ExampleBatch
from .head import CtrModel, activate
from .interaction import bilstm, direction, init_lstm
from .tensor import Tensor

VARIANTS = {
    "dsin-be": ("bias", True),
    "dsin-pe": ("positional", True),
    "dsin-be-no-siil": ("bias", False),
}


class DSIN(CtrModel):
    """Sessions -> encoded self-attention interests -> (Bi-LSTM) -> target activation -> MLP."""

    def __init__(self, vocab, cfg, variant: str = "dsin-be", seed: int | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown DSIN variant {variant!r}; expected one of {sorted(VARIANTS)}")
        self.tag = variant
        self.encoding, self.interact = VARIANTS[variant]
        super().__init__(vocab, cfg, seed)

    def build(self) -> None:
        cfg, p = self.cfg, self.params
        d = cfg.d_model
        init_extractor(p, d, cfg.heads, cfg.K, cfg.T, self.encoding)
        item_width = len(self.vocab.item_fields) * d
        p.glorot("act_i.w", (d, item_width))
        if self.interact:
            init_lstm(p, "lstm.fwd", d, cfg.forget_bias)
            init_lstm(p, "lstm.bwd", d, cfg.forget_bias)
            p.glorot("act_h.w", (self.hidden_width(), item_width))

    def hidden_width(self) -> int:
        return self.cfg.d_model * (2 if self.cfg.merge == "concat" else 1)

    def behavior_width(self) -> int:
        return self.cfg.d_model + (self.hidden_width() if self.interact else 0)

    def interests(self, batch: ExampleBatch, trace: dict | None = None) -> tuple:
        Q = self.sessions(batch)
        return extract_all(Q, batch.behavior_mask, self.params, self.encoding, self.cfg.heads,
                           self.cfg.scale, self.cfg.ln_eps, trace)

    def behavior_features(self, batch: ExampleBatch, x_item: Tensor, trace) -> list:
        p = self.params
        I, smask = self.interests(batch, trace)
        blocks = [activate(I, smask, p["act_i.w"], x_item, strict=False, trace=trace, key="a_I")]
        if self.interact:
            H = bilstm(I, smask, direction(p, "lstm.fwd"), direction(p, "lstm.bwd"),
                       self.cfg.merge, strict=False)
            blocks.append(activate(H, smask, p["act_h.w"], x_item, strict=False, trace=trace, key="a_H"))
        return blocks
