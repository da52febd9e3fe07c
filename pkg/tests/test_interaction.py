import math

import numpy as np
import pytest

from dsin.interaction import bilstm, direction, init_lstm, lstm_step
from dsin.params import ModelParams
from dsin.tensor import ContractError, Tensor, finite_diff_check, tsum


def zero_params(d):
    p = ModelParams(np.random.default_rng(0))
    init_lstm(p, "fwd", d, forget_bias=0.0)
    init_lstm(p, "bwd", d, forget_bias=0.0)
    for t in p.values():
        t.data[:] = 0.0
    return p


def random_params(seed, d):
    rng = np.random.default_rng(seed)
    p = ModelParams(rng)
    init_lstm(p, "fwd", d)
    init_lstm(p, "bwd", d)
    for name, t in p.items():
        if t.ndim == 1:
            t.data[:] = rng.normal(scale=0.5, size=t.shape)
    return p, rng


class TestStep:
    def test_all_zero(self):
        p = direction(zero_params(3), "fwd")
        h, c = lstm_step(Tensor(np.ones(3)), Tensor(np.zeros(3)), Tensor(np.zeros(3)), p)
        np.testing.assert_array_equal(c.data, 0.0)
        np.testing.assert_array_equal(h.data, 0.0)

    def test_scalar_case(self):
        p = direction(zero_params(1), "fwd")
        p["w_xc"].data[:] = 1.0
        h, c = lstm_step(Tensor([1.0]), Tensor([0.0]), Tensor([0.0]), p)
        assert c.data[0] == pytest.approx(0.5 * math.tanh(1.0), abs=1e-15)
        assert h.data[0] == pytest.approx(0.5 * math.tanh(0.5 * math.tanh(1.0)), abs=1e-15)
        assert c.data[0] == pytest.approx(0.380797, abs=1e-6)
        # 0.5 * tanh(0.380797) evaluates to 0.181700 (tanh(0.380797) = 0.363399)
        assert h.data[0] == pytest.approx(0.181700, abs=1e-6)

    def test_peepholes_are_diagonal(self):
        p = direction(zero_params(2), "fwd")
        p["w_cf"].data[:] = [5.0, 0.0]
        _, c = lstm_step(Tensor(np.zeros(2)), Tensor(np.zeros(2)), Tensor([1.0, 1.0]), p)
        np.testing.assert_allclose(c.data, [1 / (1 + math.exp(-5)), 0.5])


class TestBiLSTM:
    def test_single_session_both_directions_agree(self):
        p, rng = random_params(1, 3)
        fwd, bwd = direction(p, "fwd"), direction(p, "bwd")
        x = Tensor(rng.normal(size=(1, 3)))
        H = bilstm(x, [True], fwd, bwd).data
        z = Tensor(np.zeros(3))
        hf, _ = lstm_step(x.reshape(3), z, z, fwd)
        hb, _ = lstm_step(x.reshape(3), z, z, bwd)
        np.testing.assert_allclose(H[0], hf.data + hb.data, rtol=0, atol=1e-15)
        Hc = bilstm(x, [True], fwd, bwd, merge="concat").data
        np.testing.assert_allclose(Hc[0], np.concatenate([hf.data, hb.data]), rtol=0, atol=1e-15)

    def test_zero_params_zero_output(self):
        p = zero_params(3)
        H = bilstm(Tensor(np.ones((4, 3))), [True] * 4, direction(p, "fwd"), direction(p, "bwd"))
        np.testing.assert_array_equal(H.data, 0.0)

    def test_reversal_symmetry(self):
        p, rng = random_params(2, 3)
        fwd, bwd = direction(p, "fwd"), direction(p, "bwd")
        x = rng.normal(size=(3, 3))
        H = bilstm(Tensor(x), [True] * 3, fwd, bwd).data
        R = bilstm(Tensor(x[::-1].copy()), [True] * 3, bwd, fwd).data
        np.testing.assert_allclose(R[::-1], H, rtol=0, atol=1e-14)

    def test_padded_slots_skipped(self):
        p, rng = random_params(3, 3)
        fwd, bwd = direction(p, "fwd"), direction(p, "bwd")
        x = rng.normal(size=(4, 3))
        H = bilstm(Tensor(x), [True, True, False, False], fwd, bwd).data
        np.testing.assert_array_equal(H[2:], 0.0)
        H2 = bilstm(Tensor(x[:2]), [True, True], fwd, bwd).data
        np.testing.assert_array_equal(H[:2], H2)

    def test_no_real_sessions(self):
        p, _ = random_params(4, 2)
        with pytest.raises(ContractError):
            bilstm(Tensor(np.ones((2, 2))), [False, False], direction(p, "fwd"), direction(p, "bwd"))

    def test_bad_merge(self):
        p, _ = random_params(4, 2)
        with pytest.raises(ValueError):
            bilstm(Tensor(np.ones((1, 2))), [True], direction(p, "fwd"), direction(p, "bwd"), merge="max")

    @pytest.mark.parametrize("K", [1, 2, 4])
    def test_gradients(self, K):
        p, rng = random_params(10 + K, 3)
        names = list(p)
        x = Tensor(rng.normal(size=(K, 3)), requires_grad=True)

        def f(i, *ts):
            local = ModelParams()
            local.update(zip(names, ts))
            return tsum(bilstm(i, [True] * K, direction(local, "fwd"), direction(local, "bwd")))

        rep = finite_diff_check(f, [x] + [p[n] for n in names], tol=1e-4)
        assert rep.passed, rep.worst
