import numpy as np
import pytest

from dsin.extractor import (bias_encode, extract_all, init_extractor, masked_mean, positional_encode,
                            self_attention, self_attention_session, session_interest)
from dsin.params import ModelParams
from dsin.tensor import ContractError, DimensionError, Tensor, layer_norm, matmul, relu

from oracles import attention_block_loops, extractor_params_as_lists


def random_params(seed, d, heads, K=2, T=4, encoding="bias"):
    rng = np.random.default_rng(seed)
    p = ModelParams(rng)
    init_extractor(p, d, heads, K, T, encoding)
    # move biases and gains off their init so the oracle sees every term
    for name, t in p.items():
        if t.ndim == 1:
            t.data[:] = rng.normal(scale=0.3, size=t.shape) + (1.0 if "gamma" in name else 0.0)
    return p, rng


class TestBiasEncode:
    def test_zero_biases_identity(self):
        Q = Tensor(np.random.default_rng(0).normal(size=(2, 3, 4)))
        out = bias_encode(Q, Tensor(np.zeros(2)), Tensor(np.zeros(3)), Tensor(np.zeros(4)))
        np.testing.assert_array_equal(out.data, Q.data)

    def test_worked_example(self):
        out = bias_encode(Tensor(np.zeros((1, 2, 2))), Tensor([0.5]), Tensor([0.1, 0.2]), Tensor([0.01, 0.02]))
        np.testing.assert_allclose(out.data, [[[0.61, 0.62], [0.71, 0.72]]], rtol=0, atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            bias_encode(Tensor(np.zeros((1, 2, 2))), Tensor([0.5, 0.1]), Tensor([0.1, 0.2]), Tensor([0.0, 0.0]))

    def test_positional(self):
        Q = Tensor(np.ones((2, 3, 4)))
        np.testing.assert_array_equal(positional_encode(Q, Tensor(np.zeros((3, 4)))).data, Q.data)
        with pytest.raises(DimensionError):
            positional_encode(Q, Tensor(np.zeros((4, 4))))


class TestSelfAttention:
    def test_single_position_chain(self):
        p, rng = random_params(1, 4, 2, T=1)
        x = Tensor(rng.normal(size=(1, 4)))
        out = self_attention_session(x, p, [True], heads=2).data
        # weight of the single key is 1, so the head output is just x W^V per head
        v = np.concatenate([x.data[:, :2] @ p["attn.wv"].data[0], x.data[:, 2:] @ p["attn.wv"].data[1]], axis=1)
        y1 = layer_norm(Tensor(x.data + v @ p["attn.wo"].data), p["ln1.gamma"], p["ln1.beta"], 1e-6)
        ff = matmul(relu(matmul(y1, p["ffn.w1"]) + p["ffn.b1"]), p["ffn.w2"]) + p["ffn.b2"]
        expect = layer_norm(y1 + ff, p["ln2.gamma"], p["ln2.beta"], 1e-6).data
        np.testing.assert_allclose(out, expect, rtol=0, atol=1e-12)

    def test_hand_sized_example(self):
        p, rng = random_params(2, 2, 1, T=2)
        x = rng.normal(size=(2, 2))
        got = self_attention_session(Tensor(x), p, [True, True], heads=1).data
        want = attention_block_loops(x.tolist(), [True, True], extractor_params_as_lists(p), 1, 2, 1e-6)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_dh_scaling_option(self):
        p, rng = random_params(3, 4, 2, T=3)
        x = rng.normal(size=(3, 4))
        got = self_attention(Tensor(x), [True] * 3, p, 2, scale="dh").data
        want = attention_block_loops(x.tolist(), [True] * 3, extractor_params_as_lists(p), 2, 2, 1e-6)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-10)

    def test_all_masked(self):
        p, _ = random_params(0, 4, 2)
        with pytest.raises(ContractError):
            self_attention_session(Tensor(np.ones((3, 4))), p, [False] * 3, heads=2)

    def test_masked_rows_zero_and_keys_ignored(self):
        p, rng = random_params(4, 4, 2, T=3)
        x = rng.normal(size=(3, 4))
        mask = [True, True, False]
        a = self_attention(Tensor(x), mask, p, 2).data
        x[2] = 1e6
        b = self_attention(Tensor(x), mask, p, 2).data
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(a[2], 0.0)

    def test_attention_trace_rows_sum_to_heads(self):
        p, rng = random_params(5, 4, 2, T=3)
        trace = {}
        self_attention(Tensor(rng.normal(size=(3, 4))), [True] * 3, p, 2, trace=trace)
        np.testing.assert_allclose(trace["attention"].sum(axis=-1), 2.0)


class TestPooling:
    def test_single_row(self):
        np.testing.assert_array_equal(session_interest(Tensor([[4.0, 5.0]]), [True]).data, [4, 5])

    def test_mean(self):
        np.testing.assert_array_equal(session_interest(Tensor([[1.0, 1.0], [3.0, 3.0]]), [True, True]).data, [2, 2])

    def test_masked(self):
        np.testing.assert_array_equal(session_interest(Tensor([[1.0, 1.0], [9.0, 9.0]]), [True, False]).data, [1, 1])

    def test_empty(self):
        with pytest.raises(ContractError):
            session_interest(Tensor([[1.0, 1.0]]), [False])

    def test_masked_mean_all_empty_is_zero(self):
        np.testing.assert_array_equal(masked_mean(Tensor(np.ones((2, 3))), [False] * 2).data, [0, 0, 0])


def test_extract_all_empty_sessions_are_zero():
    p, rng = random_params(6, 4, 2, K=3, T=2)
    mask = np.array([[True, True], [False, False], [False, False]])
    I, smask = extract_all(Tensor(rng.normal(size=(3, 2, 4))), mask, p, "bias", 2)
    assert smask.tolist() == [True, False, False]
    np.testing.assert_array_equal(I.data[1:], 0.0)
    assert np.abs(I.data[0]).sum() > 0


def test_shared_weights_across_sessions():
    # identical sessions at different slots differ only through the session bias
    p, rng = random_params(7, 4, 2, K=2, T=2)
    p["be.session"].data[:] = 0.0
    block = rng.normal(size=(2, 4))
    I, _ = extract_all(Tensor(np.stack([block, block])), np.ones((2, 2), bool), p, "bias", 2)
    np.testing.assert_array_equal(I.data[0], I.data[1])
