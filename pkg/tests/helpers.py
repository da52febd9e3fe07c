"""Shared test data builders."""

import numpy as np

from dsin.config import RunConfig
from dsin.features import build_vocab, encode_records
from dsin.sessionizer import SynthConfig, generate_synthetic

# one PASS/FAIL line per acceptance criterion, printed by conftest at session end
ACCEPTANCE_LINES = []


def small_data(K=3, T=4, n_users=30, seed=0):
    """Tiny synthetic dataset with ragged histories so every padding path is hit."""
    train, test = generate_synthetic(SynthConfig(
        n_users=n_users, n_items=20, n_categories=4, sessions_per_user=K + 1,
        behaviors_per_session=T + 1, records_per_user=2, n_days=3, seed=seed))
    rng = np.random.default_rng(seed)
    for rec in train + test:
        cut = int(rng.integers(0, len(rec.behaviors)))
        rec.behaviors = rec.behaviors[cut:]
    vocab = build_vocab(train)
    cfg = RunConfig(K=K, T=T, d_model=8, heads=2, mlp_hidden=[16, 8], din_hidden=6, seed=seed)
    return cfg, vocab, encode_records(train, vocab, K, T), encode_records(test, vocab, K, T)
