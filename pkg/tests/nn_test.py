# Path: /tests/nn_test.py
# Tests for the numpy network engine: shapes, gradients against central finite
# differences, the conv/deconv adjoint pair, the optimizer and checkpoints.
import os
import tempfile
import unittest

import numpy as np

from src.nn import (
    Adam, BackwardBeforeForwardError, LayerSpec, Network, NonFiniteError, ShapeMismatchError, load_checkpoint,
    save_checkpoint,
)

STEP = 1e-4
TOLERANCE = 1e-4


def relative_error(analytic, numeric):
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return np.linalg.norm(analytic - numeric) / scale


def kink_pattern(*networks) -> bytes:
    """Which side of zero every LeakyReLU input fell on in the last forward pass."""
    return b"".join(np.packbits(layer._cache).tobytes() for net in networks for layer in net.layers
                    if layer.spec.kind == "lrelu")


def central_differences(loss, array, indices):
    """Central differences of ``loss`` along the given flat indices of ``array``.

    ``loss`` returns ``(value, pattern)``; entries whose perturbation changes the
    pattern straddle a kink and come back as NaN.
    """
    flat = array.reshape(-1)
    _, base = loss()
    numeric = np.full(len(indices), np.nan)
    for n, i in enumerate(indices):
        saved = flat[i]
        flat[i] = saved + STEP
        plus, plus_pattern = loss()
        flat[i] = saved - STEP
        minus, minus_pattern = loss()
        flat[i] = saved
        if plus_pattern == base and minus_pattern == base:
            numeric[n] = (plus - minus) / (2 * STEP)
    return numeric


def assert_gradients_match(test, analytic, numeric, msg=None):
    kept = ~np.isnan(numeric)
    test.assertGreater(kept.sum(), len(numeric) // 2, msg=msg)
    test.assertLess(relative_error(analytic[kept], numeric[kept]), TOLERANCE, msg=msg)


def check_network_gradients(test, specs, input_shape, batch=3, seed=0, entries=25):
    """Compare backward() with central differences of sum(output * projection)."""
    rng = np.random.default_rng(seed)
    net = Network(specs, input_shape, seed=seed, dtype=np.float64)
    x = rng.normal(size=(batch,) + tuple(input_shape))
    projection = rng.normal(size=(batch,) + tuple(net.output_shape))

    def loss():
        value = float(np.sum(net.forward(x) * projection))
        return value, kink_pattern(net)

    net.zero_grad()
    net.forward(x)
    dx = net.backward(projection)
    grads = {key: value.copy() for key, value in net.gradients().items()}

    indices = np.arange(x.size)
    assert_gradients_match(test, dx.reshape(-1), central_differences(loss, x, indices), msg="input")
    for key, param in net.parameters().items():
        picks = rng.choice(param.size, size=min(entries, param.size), replace=False)
        assert_gradients_match(test, grads[key].reshape(-1)[picks], central_differences(loss, param, picks), msg=key)


class TestShapes(unittest.TestCase):

    def test_conv_output_size(self):
        net = Network([LayerSpec("conv", kernel=(3, 3), channels=(1, 4), stride=2, padding=1)], (1, 16, 16))
        self.assertEqual(net.output_shape, (4, 8, 8))
        self.assertEqual(net.forward(np.zeros((2, 1, 16, 16))).shape, (2, 4, 8, 8))

    def test_sigmoid_range(self):
        net = Network([LayerSpec("sigmoid")], (1, 2, 3))
        out = net.forward(np.linspace(-30, 30, 12).reshape(2, 1, 2, 3))
        self.assertTrue(np.all((out > 0) & (out < 1)))

    def test_gap_of_ones(self):
        net = Network([LayerSpec("gap")], (256, 2, 2))
        np.testing.assert_array_equal(net.forward(np.ones((1, 256, 2, 2))), np.ones((1, 256)))

    def test_wrong_input_shape(self):
        net = Network([LayerSpec("lrelu")], (1, 4, 4))
        with self.assertRaises(ShapeMismatchError) as context:
            net.forward(np.zeros((1, 1, 4, 5)))
        self.assertEqual(context.exception.index, 0)

    def test_incompatible_stack_fails_at_build(self):
        with self.assertRaises(ShapeMismatchError) as context:
            Network([LayerSpec("gap"), LayerSpec("linear", channels=(3, 1))], (2, 4, 4))
        self.assertEqual(context.exception.index, 1)

    def test_backward_before_forward(self):
        net = Network([LayerSpec("tanh")], (1, 2, 2))
        with self.assertRaises(BackwardBeforeForwardError):
            net.backward(np.ones((1, 1, 2, 2)))

    def test_non_finite_activation(self):
        net = Network([LayerSpec("conv", kernel=(1, 1), channels=(1, 1))], (1, 2, 2))
        with self.assertRaises(NonFiniteError):
            net.forward(np.full((1, 1, 2, 2), np.inf))


class TestGradients(unittest.TestCase):

    def test_linear_bias_gradient_is_ones(self):
        net = Network([LayerSpec("linear", channels=(3, 2))], (3,), dtype=np.float64)
        net.forward(np.ones((1, 3)))
        net.backward(np.ones((1, 2)))
        np.testing.assert_array_equal(net.gradients()["0.bias"], np.ones(2))

    def test_lrelu_negative_slope(self):
        net = Network([LayerSpec("lrelu")], (1, 1, 1), dtype=np.float64)
        net.forward(np.full((1, 1, 1, 1), -1.0))
        self.assertAlmostEqual(float(net.backward(np.ones((1, 1, 1, 1)))[0, 0, 0, 0]), 0.2)

    def test_gradients_accumulate_until_zeroed(self):
        net = Network([LayerSpec("linear", channels=(2, 1))], (2,), dtype=np.float64)
        for _ in range(2):
            net.forward(np.ones((1, 2)))
            net.backward(np.ones((1, 1)))
        np.testing.assert_array_equal(net.gradients()["0.bias"], [2.0])
        net.zero_grad()
        np.testing.assert_array_equal(net.gradients()["0.bias"], [0.0])

    def test_conv_stride_and_padding(self):
        check_network_gradients(self, [LayerSpec("conv", kernel=(3, 3), channels=(2, 3), stride=2, padding=1)],
                                (2, 7, 6))

    def test_conv_spectral_geometry(self):
        check_network_gradients(self, [LayerSpec("conv", kernel=(5, 1), channels=(1, 2), stride=(1, 2),
                                                 padding=(0, 2))], (1, 1, 11))

    def test_deconv_with_crop(self):
        check_network_gradients(self, [LayerSpec("deconv", kernel=(3, 3), channels=(3, 2), stride=2, padding=1,
                                                 output_size=(7, 5))], (3, 4, 3))

    def test_batchnorm_train_mode(self):
        check_network_gradients(self, [LayerSpec("conv", kernel=(1, 1), channels=(2, 2)), LayerSpec("batchnorm")],
                                (2, 3, 3), batch=4)

    def test_batchnorm_on_vectors(self):
        check_network_gradients(self, [LayerSpec("linear", channels=(3, 4)), LayerSpec("batchnorm")], (3,), batch=5)

    def test_pointwise_layers(self):
        for kind in ("lrelu", "tanh", "sigmoid"):
            with self.subTest(kind=kind):
                check_network_gradients(self, [LayerSpec("conv", kernel=(2, 2), channels=(1, 2)), LayerSpec(kind)],
                                        (1, 4, 4))

    def test_pool_and_linear(self):
        check_network_gradients(self, [LayerSpec("gap"), LayerSpec("linear", channels=(3, 1)),
                                       LayerSpec("sigmoid")], (3, 4, 4))


class TestAdjoint(unittest.TestCase):

    def test_deconv_is_adjoint_of_conv(self):
        rng = np.random.default_rng(7)
        for stride, padding, size in ((1, 1, (6, 6)), (2, 1, (7, 8)), (2, 2, (16, 16)), ((1, 2), (0, 2), (1, 13))):
            with self.subTest(stride=stride, padding=padding, size=size):
                kernel = (5, 5) if size[0] > 1 else (5, 1)
                conv = Network([LayerSpec("conv", kernel=kernel, channels=(2, 3), stride=stride, padding=padding)],
                               (2,) + size, dtype=np.float64)
                deconv = Network([LayerSpec("deconv", kernel=kernel, channels=(3, 2), stride=stride,
                                            padding=padding, output_size=size)], conv.output_shape, dtype=np.float64)
                weight = rng.normal(size=conv.layers[0].params["weight"].shape)
                conv.layers[0].params["weight"][...] = weight
                deconv.layers[0].params["weight"][...] = weight
                x = rng.normal(size=(2, 2) + size)
                y = rng.normal(size=(2,) + conv.output_shape)
                left = np.sum(conv.forward(x) * y)
                right = np.sum(x * deconv.forward(y))
                self.assertAlmostEqual(left, right, delta=1e-9 * max(abs(left), 1.0))


class TestBatchNorm(unittest.TestCase):

    def test_train_mode_normalizes_each_channel(self):
        rng = np.random.default_rng(5)
        net = Network([LayerSpec("batchnorm")], (3, 4, 4), dtype=np.float64)
        out = net.forward(rng.normal(10.0, 50.0, size=(8, 3, 4, 4)))
        np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0.0, atol=1e-10)
        np.testing.assert_allclose(out.var(axis=(0, 2, 3)), 1.0, rtol=1e-4)

    def test_infer_mode_uses_running_statistics(self):
        net = Network([LayerSpec("batchnorm")], (1, 2, 2), dtype=np.float64)
        batch = np.arange(8, dtype=float).reshape(2, 1, 2, 2)
        net.forward(batch)
        running_mean = net.buffers()["0.running_mean"]
        np.testing.assert_allclose(running_mean, [0.1 * 3.5])
        net.infer()
        first = net.forward(batch[:1])
        second = net.forward(batch[:1])
        np.testing.assert_array_equal(first, second)
        np.testing.assert_allclose(net.buffers()["0.running_mean"], running_mean)


class TestAdam(unittest.TestCase):

    def test_zero_gradient_leaves_parameters(self):
        params = {"w": np.array([1.5, -2.0])}
        Adam(params).step({"w": np.zeros(2)})
        np.testing.assert_allclose(params["w"], [1.5, -2.0], atol=1e-12)

    def test_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0])}
        Adam(params, learning_rate=0.1).step({"w": np.array([1.0])})
        self.assertAlmostEqual(float(params["w"][0]), 0.9, places=6)

    def test_identical_runs_are_bit_identical(self):
        def trajectory():
            rng = np.random.default_rng(11)
            params = {"w": rng.normal(size=5)}
            optimizer = Adam(params)
            for _ in range(20):
                optimizer.step({"w": rng.normal(size=5)})
            return params["w"].copy()
        np.testing.assert_array_equal(trajectory(), trajectory())

    def test_gradient_keys_must_match(self):
        with self.assertRaises(ValueError):
            Adam({"w": np.zeros(1)}).step({"v": np.zeros(1)})


class TestCheckpoint(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_preserves_outputs(self):
        specs = [LayerSpec("conv", kernel=(3, 3), channels=(2, 4), stride=2, padding=1), LayerSpec("batchnorm"),
                 LayerSpec("lrelu"), LayerSpec("gap"), LayerSpec("linear", channels=(4, 1)), LayerSpec("sigmoid")]
        net = Network(specs, (2, 8, 8), seed=3, dtype=np.float32, name="critic")
        rng = np.random.default_rng(0)
        batch = rng.normal(size=(4, 2, 8, 8)).astype(np.float32)
        net.forward(batch)
        net.infer()
        expected = net.forward(batch)

        path = os.path.join(self.tmp.name, "net.aean")
        save_checkpoint(path, 2, {"critic": net}, {"note": "test"})
        dim, networks, meta = load_checkpoint(path)
        self.assertEqual(dim, 2)
        self.assertEqual(meta, {"note": "test"})
        restored = networks["critic"].infer()
        np.testing.assert_array_equal(restored.forward(batch), expected)


if __name__ == '__main__':
    unittest.main()
