import numpy as np
import pytest

from adsq.encoder import (EncoderGrads, MomentumSGD, backward, forward,
                          init_params, load_params, save_params, sgd_step)
from adsq.errors import ConfigError, FormatError, TrainingError
from fdcheck import TOL, fd_grad, max_rel_error


def probe_loss(params, x, coef_r, coef_v):
    """Scalar probe whose gradient enters exactly through the two slots."""
    outs = forward(params, x)
    return float((coef_r * outs.r).sum() + (coef_v * outs.v).sum())


class TestInit:
    def test_deterministic(self):
        a = init_params([4, 8, 2], seed=123)
        b = init_params([4, 8, 2], seed=123)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    def test_shapes(self):
        p = init_params([4, 8, 2], seed=0)
        assert [w.shape for w in p.weights] == [(8, 4), (2, 8)]
        assert all(np.all(b == 0) for b in p.biases)

    def test_bound_is_glorot(self):
        p = init_params([100, 50, 10], seed=0)
        bound = np.sqrt(6.0 / 150)
        assert np.max(np.abs(p.weights[0])) <= bound

    def test_too_few_dims(self):
        with pytest.raises(ConfigError):
            init_params([4], seed=0)
        with pytest.raises(ConfigError):
            init_params([4, 2], seed=0)


class TestForward:
    def test_zero_params_give_zero_outputs(self):
        p = init_params([3, 4, 2], seed=0)
        for w in p.weights:
            w[:] = 0.0
        outs = forward(p, np.random.default_rng(0).normal(size=(5, 3)))
        assert np.all(outs.r == 0) and np.all(outs.u == 0)

    def test_single_item(self):
        p = init_params([3, 4, 2], seed=1)
        outs = forward(p, np.ones((1, 3)))
        assert outs.r.shape == (1, 4) and outs.u.shape == (1, 2)

    def test_tanh_range(self):
        p = init_params([3, 6, 4, 2], seed=2)
        outs = forward(p, np.random.default_rng(1).normal(size=(20, 3)))
        assert np.all(np.abs(outs.u) < 1)
        np.testing.assert_array_equal(outs.u, np.tanh(outs.v))

    def test_bitwise_repeatable(self):
        p = init_params([3, 5, 2], seed=3)
        x = np.random.default_rng(2).normal(size=(7, 3))
        a, b = forward(p, x), forward(p, x)
        assert np.array_equal(a.u, b.u) and np.array_equal(a.r, b.r)

    def test_shape_mismatch(self):
        p = init_params([3, 4, 2], seed=0)
        with pytest.raises(ValueError):
            forward(p, np.zeros((2, 5)))


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        p = init_params([3, 4, 4, 2], seed=5)
        x = np.random.default_rng(3).normal(size=(6, 3))
        g = backward(p, x, np.zeros((6, 4)), np.zeros((6, 2)))
        assert all(np.all(a == 0) for a in g.weights + g.biases)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_finite_differences(self, seed):
        """Module gate: 20 seeded configs, rel error <= 1e-5 at step 1e-6."""
        rng = np.random.default_rng(seed)
        hidden = [int(rng.integers(2, 6)) for _ in range(int(rng.integers(0, 3)))]
        dims = [3, *hidden, 4, 2]
        p = init_params(dims, seed=seed)
        for b in p.biases:
            # generic point: fresh-init zero biases can park a rectifier
            # input exactly on its kink, where central differences lie
            b += rng.normal(scale=0.1, size=b.shape)
        x = rng.normal(size=(5, 3))
        coef_r = rng.normal(size=(5, 4))
        coef_v = rng.normal(size=(5, 2))
        analytic = backward(p, x, coef_r, coef_v)
        for li in range(p.num_layers):
            for arr, ga in ((p.weights[li], analytic.weights[li]),
                            (p.biases[li], analytic.biases[li])):
                numeric = fd_grad(lambda: probe_loss(p, x, coef_r, coef_v), arr)
                assert max_rel_error(ga, numeric) <= TOL

    def test_linear_net_closed_form(self):
        """No hidden layers, upstream only at the semantic slot: the
        semantic weight gradient is upstream^T x."""
        p = init_params([3, 4, 2], seed=7)
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 3))
        up_r = rng.normal(size=(6, 4))
        g = backward(p, x, up_r, np.zeros((6, 2)))
        np.testing.assert_allclose(g.weights[0], up_r.T @ x, rtol=1e-12)
        np.testing.assert_allclose(g.biases[0], up_r.sum(axis=0), rtol=1e-12)
        assert np.all(g.weights[1] == 0)

    def test_upstream_shape_mismatch(self):
        p = init_params([3, 4, 2], seed=0)
        x = np.zeros((2, 3))
        with pytest.raises(ValueError):
            backward(p, x, np.zeros((2, 3)), np.zeros((2, 2)))


class TestSgd:
    def _grads_like(self, p, fill):
        return EncoderGrads([np.full_like(w, fill) for w in p.weights],
                            [np.full_like(b, fill) for b in p.biases])

    def test_vanilla_step(self):
        p = init_params([3, 4, 2], seed=0)
        before = p.copy()
        sgd_step(p, self._grads_like(p, 0.5), lr=0.1, momentum=0.0, weight_decay=0.0)
        np.testing.assert_allclose(p.weights[0], before.weights[0] - 0.05, rtol=1e-12)

    def test_zero_grad_zero_velocity_no_change(self):
        p = init_params([3, 4, 2], seed=1)
        before = p.copy()
        sgd_step(p, self._grads_like(p, 0.0), lr=0.5, momentum=0.9, weight_decay=0.0)
        assert p.allclose(before)

    def test_two_momentum_steps_displace_2_9g(self):
        # v1 = g, v2 = 0.9 g + g; total displacement 2.9 g at lr = 1
        p = init_params([3, 4, 2], seed=2)
        before = p.copy()
        g = 0.25
        opt = MomentumSGD(p.weights + p.biases, momentum=0.9, weight_decay=0.0)
        for _ in range(2):
            sgd_step(p, self._grads_like(p, g), lr=1.0, momentum=0.9,
                     weight_decay=0.0, optimizer=opt)
        np.testing.assert_allclose(before.weights[0] - p.weights[0], 2.9 * g, rtol=1e-12)

    def test_nonfinite_gradient_aborts(self):
        p = init_params([3, 4, 2], seed=3)
        bad = self._grads_like(p, 1.0)
        bad.weights[0][0, 0] = np.nan
        with pytest.raises(TrainingError):
            sgd_step(p, bad, lr=0.1, momentum=0.9, weight_decay=0.0)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        p = init_params([3, 5, 4, 2], seed=11)
        path = tmp_path / "net.net"
        save_params(path, p)
        q = load_params(path)
        assert all(np.array_equal(a, b) for a, b in zip(p.weights, q.weights))
        assert all(np.array_equal(a, b) for a, b in zip(p.biases, q.biases))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.net"
        path.write_bytes(b"WRONGMAG" + b"\x00" * 16)
        with pytest.raises(FormatError):
            load_params(path)

    def test_truncation(self, tmp_path):
        p = init_params([3, 4, 2], seed=0)
        path = tmp_path / "t.net"
        save_params(path, p)
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(FormatError):
            load_params(path)
