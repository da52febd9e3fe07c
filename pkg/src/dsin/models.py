"""Model registry keyed by the command-line tags."""

from __future__ import annotations

from .baselines import DIN, YoutubeNet
from .config import MODEL_TAGS
from .dsin import DSIN, VARIANTS
from .head import CtrModel


def make_model(tag: str, vocab, cfg, seed: int | None = None) -> CtrModel:
    if tag in VARIANTS:
        return DSIN(vocab, cfg, tag, seed)
    if tag == "youtube":
        return YoutubeNet(vocab, cfg, True, seed)
    if tag == "youtube-no-ub":
        return YoutubeNet(vocab, cfg, False, seed)
    if tag == "din":
        return DIN(vocab, cfg, seed)
    raise ValueError(f"unknown model tag {tag!r}; valid: {', '.join(MODEL_TAGS)}")
