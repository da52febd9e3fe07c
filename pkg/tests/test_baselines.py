import numpy as np
import pytest

from dsin.baselines import DIN, YoutubeNet, din_attention
from dsin.config import RunConfig
from dsin.features import build_vocab, encode_records
from dsin.params import ModelParams, make_mlp
from dsin.sessionizer import BehaviorEvent, ExampleRecord
from dsin.tensor import Tensor
from dsin.train import train


def shuffled_within_sessions(batch, seed=0):
    out = batch.take(np.arange(len(batch)))
    rng = np.random.default_rng(seed)
    for i in range(len(out)):
        for k in range(out.sess_item.shape[1]):
            real = np.flatnonzero(out.behavior_mask[i, k])
            perm = rng.permutation(real)
            out.sess_item[i, k, real] = out.sess_item[i, k, perm]
            out.sess_cat[i, k, real] = out.sess_cat[i, k, perm]
    return out


class TestYoutubeNet:
    def test_permutation_invariant(self, data):
        cfg, vocab, train_set, _ = data
        m = YoutubeNet(vocab, cfg)
        np.testing.assert_allclose(m.predict(train_set), m.predict(shuffled_within_sessions(train_set)),
                                   rtol=0, atol=1e-15)

    def test_empty_history_block_is_zero(self, data):
        cfg, vocab, train_set, _ = data
        m = YoutubeNet(vocab, cfg)
        b = train_set.take([0])
        b.behavior_mask[:] = False
        b.session_mask[:] = False
        b.sess_item[:] = b.sess_cat[:] = 0
        [block] = m.behavior_features(b, None, None)
        np.testing.assert_array_equal(block.data, 0.0)

    def test_without_behaviors_ignores_history(self, data):
        cfg, vocab, train_set, _ = data
        m = YoutubeNet(vocab, cfg, use_behaviors=False)
        other = train_set.take(np.arange(len(train_set)))
        other.sess_item = np.roll(other.sess_item, 1, axis=0)
        other.sess_cat = np.roll(other.sess_cat, 1, axis=0)
        np.testing.assert_array_equal(m.predict(train_set), m.predict(other))
        assert not any(n.startswith("emb.bhv") for n in m.params)


class TestDinAttention:
    def layers(self, d, seed=0):
        return make_mlp(ModelParams(np.random.default_rng(seed)), "din", [3 * d, 5, 1])

    def test_single_behavior(self):
        b = Tensor(np.random.default_rng(1).normal(size=(1, 3, 4)))
        a, pooled = din_attention(b, Tensor(np.ones((1, 4))), [[False, True, False]], self.layers(4))
        np.testing.assert_array_equal(a.data, [[0, 1, 0]])
        np.testing.assert_array_equal(pooled.data, b.data[:, 1])

    def test_identical_behaviors_uniform(self):
        row = np.random.default_rng(2).normal(size=4)
        b = Tensor(np.tile(row, (1, 3, 1)))
        a, _ = din_attention(b, Tensor(np.ones((1, 4))), [[True] * 3], self.layers(4))
        np.testing.assert_allclose(a.data, [[1 / 3] * 3], rtol=1e-15)


def din_toy(n, seed):
    """Two clicks per user, one in the target's category. The label is the parity of
    that click's item, so only attending to it predicts the label."""
    rng = np.random.default_rng(seed)
    records = []
    for u in range(n):
        tc, oc = rng.choice(4, size=2, replace=False)
        match = int(tc * 10 + rng.integers(10))
        other = int(oc * 10 + rng.integers(10))
        pair = [(match, int(tc)), (other, int(oc))]
        if rng.random() < 0.5:
            pair.reverse()
        behaviors = [BehaviorEvent(i, c, 1000 + 60 * j) for j, (i, c) in enumerate(pair)]
        records.append(ExampleRecord({"u": 0}, {"item_id": int(tc * 10 + rng.integers(10)), "cat_id": int(tc)},
                                     behaviors, match % 2, 2000))
    return records


@pytest.mark.slow
def test_din_attends_to_matching_category():
    records = din_toy(600, 0)
    vocab = build_vocab(records)
    cfg = RunConfig(model="din", K=1, T=2, d_model=8, mlp_hidden=[16], din_hidden=16,
                    epochs=40, lr=1e-2, batch_size=64, seed=0)
    train_set = encode_records(records[:500], vocab, 1, 2)
    test_set = encode_records(records[500:], vocab, 1, 2)
    model = DIN(vocab, cfg)
    report, best = train(model, train_set, test_set, cfg)
    model.params.load_state(best)
    trace = {}
    model.logits(test_set, trace=trace)
    target_cat = test_set.item[:, vocab.item_fields.index("cat_id")]
    matching = test_set.sess_cat[:, 0, :] == target_cat[:, None]
    w = trace["a_behavior"][matching]
    assert report.best_auc > 0.9
    assert w.mean() > 0.5
    assert (w > 0.5).mean() > 0.9
