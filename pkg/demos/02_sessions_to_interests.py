"""From a raw click history to session interests and activation weights for one user."""

import numpy as np

from dsin.config import RunConfig
from dsin.features import build_vocab, encode_records
from dsin.models import make_model
from dsin.sessionizer import SynthConfig, divide_sessions, generate_synthetic

train, test = generate_synthetic(SynthConfig(n_users=50, n_items=40, n_categories=5, seed=1))
rec = train[0]
print(f"{len(train)} train / {len(test)} test records; first user has {len(rec.behaviors)} clicks")

# clicks more than 30 minutes apart start a new session
for k, sess in enumerate(divide_sessions(rec.behaviors)):
    cats = [b.cat for b in sess]
    span = sess[-1].ts - sess[0].ts
    print(f"  session {k}: {len(sess)} clicks over {span:5d}s, categories {cats}")
print("target category", rec.item["cat_id"], "label", rec.label)

# pad to K sessions x T behaviors; masks mark what is real
cfg = RunConfig(K=4, T=5, d_model=16, heads=2)
vocab = build_vocab(train)
batch = encode_records(train[:4], vocab, cfg.K, cfg.T)
print("behavior mask of example 0:\n", batch.behavior_mask[0].astype(int))

model = make_model("dsin-be", vocab, cfg)
trace = {}
p = model.predict(batch)
model.logits(batch, trace=trace)
print("untrained click probabilities", np.round(p, 4))
print("self-attention weights, session 0, summed over heads:\n", np.round(trace["attention"][0, 0], 3))
print("activation over session interests a_I:", np.round(trace["a_I"][0], 3))
print("activation over Bi-LSTM states a_H:   ", np.round(trace["a_H"][0], 3))
