import numpy as np
import pytest

from auggap import nn
from auggap.core import LossSpec
from auggap.errors import InvalidInputError


class TestForward:
    def test_single_linear_layer(self):
        net = nn.Network([2, 1], [np.array([[1.0], [2.0]])], [np.array([0.5])])
        assert nn.forward(net, [[1.0, 1.0]])[0, 0] == pytest.approx(3.5)

    def test_identity_weights(self):
        net = nn.Network([3, 3], [np.eye(3)], [np.zeros(3)])
        x = np.random.default_rng(0).standard_normal((4, 3))
        assert np.allclose(nn.forward(net, x), x)

    def test_zero_net_uniform_softmax(self):
        net = nn.Network(
            [4, 10], [np.zeros((4, 10))], [np.zeros(10)], output_head="softmax"
        )
        out = nn.forward(net, np.random.default_rng(1).standard_normal((5, 4)))
        assert np.allclose(out, 0.1)

    def test_softmax_rows_normalize(self):
        net = nn.init_network([6, 16, 5], seed=3, output_head="softmax")
        out = nn.forward(net, np.random.default_rng(2).standard_normal((7, 6)))
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_dimension_mismatch(self):
        net = nn.init_network([3, 2], seed=0)
        with pytest.raises(InvalidInputError):
            nn.forward(net, np.zeros((2, 4)))


class TestBackward:
    def test_gradient_zero_at_least_squares_minimum(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((32, 3))
        w_star = rng.standard_normal((3, 2))
        net = nn.Network([3, 2], [w_star.copy()], [np.zeros(2)])
        gw, gb = nn.backward(net, x, x @ w_star, LossSpec(kind="clipped-squared", clip_M=1e6))
        assert np.abs(gw[0]).max() < 1e-10
        assert np.abs(gb[0]).max() < 1e-10

    def test_linear_least_squares_gradient_form(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((16, 4))
        y = rng.standard_normal((16, 2))
        net = nn.init_network([4, 2], seed=5)
        gw, _ = nn.backward(net, x, y, LossSpec(kind="clipped-squared", clip_M=1e6))
        expected = (2.0 / 16) * x.T @ (x @ net.weights[0] + net.biases[0] - y)
        assert np.allclose(gw[0], expected, atol=1e-12)

    @pytest.mark.parametrize("kind,head", [("clipped-squared", "linear"), ("clipped-cross-entropy", "softmax")])
    def test_finite_difference_agreement(self, kind, head):
        rng = np.random.default_rng(42)
        out_dim = 3
        net = nn.init_network([5, 8, 8, out_dim], seed=7, output_head=head)
        x = rng.standard_normal((12, 5))
        if kind == "clipped-squared":
            targets = rng.standard_normal((12, out_dim))
            spec = LossSpec(kind=kind, clip_M=1e6)
        else:
            targets = rng.integers(0, out_dim, 12)
            spec = LossSpec(kind=kind, clip_M=30.0)
        gw, gb = nn.backward(net, x, targets, spec)
        h = 1e-5
        for _ in range(100):
            layer = int(rng.integers(0, len(net.weights)))
            w = net.weights[layer]
            i, j = int(rng.integers(0, w.shape[0])), int(rng.integers(0, w.shape[1]))
            orig = w[i, j]
            w[i, j] = orig + h
            up = nn.batch_loss(net, x, targets, spec)
            w[i, j] = orig - h
            down = nn.batch_loss(net, x, targets, spec)
            w[i, j] = orig
            fd = (up - down) / (2 * h)
            rel = abs(fd - gw[layer][i, j]) / max(1e-8, abs(fd) + abs(gw[layer][i, j]))
            assert rel < 1e-4

    def test_clipped_examples_contribute_zero_gradient(self):
        net = nn.Network([1, 1], [np.array([[1.0]])], [np.array([0.0])])
        spec = LossSpec(kind="clipped-squared", clip_M=4.0)
        gw, _ = nn.backward(net, [[10.0]], [[0.0]], spec)  # raw loss 100 >> clip
        assert gw[0][0, 0] == 0.0


class TestAdam:
    def test_zero_gradient_no_motion(self):
        net = nn.Network([1, 1], [np.array([[0.7]])], [np.array([0.1])])
        state = nn.AdamState.for_network(net)
        nn.adam_step(net, state, [np.zeros((1, 1))], [np.zeros(1)], nn.TrainConfig())
        assert net.weights[0][0, 0] == 0.7

    def test_first_step_magnitude(self):
        net = nn.Network([1, 1], [np.array([[0.0]])], [np.array([0.0])])
        state = nn.AdamState.for_network(net)
        nn.adam_step(net, state, [np.array([[1.0]])], [np.zeros(1)], nn.TrainConfig())
        assert net.weights[0][0, 0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-9)

    def test_sign_flip_antisymmetry(self):
        cfg = nn.TrainConfig()
        net_a = nn.Network([1, 1], [np.array([[0.0]])], [np.array([0.0])])
        net_b = nn.Network([1, 1], [np.array([[0.0]])], [np.array([0.0])])
        nn.adam_step(net_a, nn.AdamState.for_network(net_a), [np.array([[2.5]])], [np.zeros(1)], cfg)
        nn.adam_step(net_b, nn.AdamState.for_network(net_b), [np.array([[-2.5]])], [np.zeros(1)], cfg)
        assert net_a.weights[0][0, 0] == pytest.approx(-net_b.weights[0][0, 0], abs=1e-15)

    def test_invalid_betas(self):
        with pytest.raises(InvalidInputError):
            nn.TrainConfig(beta1=1.0)


class TestTrain:
    def test_convex_problem_converges(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((256, 6))
        w_true = rng.standard_normal((6, 2))
        y = x @ w_true
        net = nn.init_network([6, 2], seed=9)
        cfg = nn.TrainConfig(learning_rate=0.02, epochs=80, batch_size=64, seed=4)
        spec = LossSpec(kind="clipped-squared", clip_M=1e6)
        trained, trace = nn.train(net, x, y, cfg, spec)
        assert trace[-1] < 0.01 * trace[0]

    def test_bit_reproducible(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((64, 4))
        y = rng.integers(0, 3, 64)
        net = nn.init_network([4, 8, 3], seed=1, output_head="softmax")
        cfg = nn.TrainConfig(epochs=3, batch_size=16, seed=2)
        spec = LossSpec(kind="clipped-cross-entropy", clip_M=30.0)
        a, trace_a = nn.train(net, x, y, cfg, spec)
        b, trace_b = nn.train(net, x, y, cfg, spec)
        assert trace_a == trace_b
        assert all(np.array_equal(u, v) for u, v in zip(a.weights, b.weights))
        assert all(np.array_equal(u, v) for u, v in zip(a.biases, b.biases))

    def test_zero_learning_rate(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((32, 3))
        y = rng.standard_normal((32, 2))
        net = nn.init_network([3, 2], seed=8)
        cfg = nn.TrainConfig(learning_rate=0.0, epochs=3, batch_size=8, seed=0)
        trained, trace = nn.train(net, x, y, cfg, LossSpec(kind="clipped-squared", clip_M=1e6))
        assert all(np.array_equal(u, v) for u, v in zip(trained.weights, net.weights))
        assert trace[0] == pytest.approx(trace[-1], rel=1e-12)

    def test_input_network_not_mutated(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((16, 3))
        y = rng.standard_normal((16, 2))
        net = nn.init_network([3, 2], seed=8)
        before = [w.copy() for w in net.weights]
        nn.train(net, x, y, nn.TrainConfig(epochs=1, seed=0), LossSpec(kind="clipped-squared", clip_M=1e6))
        assert all(np.array_equal(u, v) for u, v in zip(net.weights, before))


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        net = nn.init_network([5, 7, 2], seed=11, output_head="softmax")
        path = tmp_path / "net.bin"
        nn.save_checkpoint(net, path)
        loaded = nn.load_checkpoint(path, output_head="softmax")
        assert loaded.layer_sizes == net.layer_sizes
        assert all(np.array_equal(u, v) for u, v in zip(loaded.weights, net.weights))
        assert all(np.array_equal(u, v) for u, v in zip(loaded.biases, net.biases))

    def test_layout_header_little_endian(self, tmp_path):
        net = nn.init_network([2, 3], seed=0)
        path = tmp_path / "net.bin"
        nn.save_checkpoint(net, path)
        raw = path.read_bytes()
        assert int.from_bytes(raw[0:4], "little") == 2  # layer count
        assert int.from_bytes(raw[4:8], "little") == 2
        assert int.from_bytes(raw[8:12], "little") == 3
        # header + (2*3 weights + 3 biases) float64
        assert len(raw) == 12 + 8 * (6 + 3)
