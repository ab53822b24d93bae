# Path: /tests/aean_test.py
# Tests for the AEAN architecture, its losses and gradients, training and synthesis.
import math
import os
import tempfile
import unittest

import numpy as np

from src.aean import (
    AeanModel, TrainConfig, UntrainedModelError, adversarial_loss, build_aean, load_model, reconstruction_loss,
    resolve_config, save_model, synthesize_hsi, train_aean,
)
from src.aean.losses import fake_term
from src.aean.synthesis import tile_cube, untile_cube
from src.aean.trainer import autoencoder_objective, discriminator_objective, reconstruction_error
from src.hsi import HsiCube
from src.purify import TrainingSet

STEP = 1e-4
TOLERANCE = 1e-4
SLOW = bool(os.environ.get("HSI_AEAN_SLOW"))


def _kinks(*networks):
    return b"".join(np.packbits(layer._cache).tobytes() for net in networks for layer in net.layers
                    if layer.spec.kind == "lrelu")


def _relative_error(analytic, numeric):
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)


def _spectral_set(samples):
    samples = np.asarray(samples, dtype=np.float64)
    return TrainingSet(dim=1, samples=samples.reshape(len(samples), 1, 1, -1), block_size=1, step=1,
                       bands=samples.shape[-1])


class TestArchitecture(unittest.TestCase):

    def test_spatial_model_shapes(self):
        model = build_aean(2, bands=100, block_size=16)
        self.assertEqual(model.autoencoder.input_shape, (1, 16, 16))
        self.assertEqual(model.autoencoder.output_shape, (1, 16, 16))
        self.assertEqual(model.autoencoder.layers[8].output_shape, (256, 2, 2))
        self.assertEqual(model.discriminator.output_shape, (1,))
        self.assertEqual(model.autoencoder.layers[-1].spec.kind, "tanh")
        self.assertEqual(model.discriminator.layers[-1].spec.kind, "sigmoid")

    def test_spectral_model_uses_row_kernels(self):
        model = build_aean(1, bands=189)
        kernels = [layer.spec.kernel for layer in model.autoencoder.layers if layer.spec.kind == "conv"]
        self.assertEqual(kernels, [(9, 1), (5, 1), (3, 1)])
        self.assertEqual(model.autoencoder.output_shape, (1, 1, 189))
        self.assertIsNone(model.block_size)

    def test_joint_model_channels(self):
        model = build_aean(3, bands=4, block_size=16)
        first = model.autoencoder.layers[0]
        last = [layer for layer in model.autoencoder.layers if layer.spec.kind == "deconv"][-1]
        self.assertEqual(first.params["weight"].shape, (64, 4, 9, 9))
        self.assertEqual(last.spec.kernel, (9, 9))
        self.assertEqual(last.spec.channels, (64, 4))

    def test_odd_block_size_crops_back(self):
        model = build_aean(2, bands=1, block_size=10)
        self.assertEqual(model.autoencoder.output_shape, (1, 10, 10))

    def test_rejects_small_blocks(self):
        with self.assertRaises(ValueError):
            build_aean(2, bands=3, block_size=4)


class TestLosses(unittest.TestCase):

    def test_adversarial_loss_at_chance(self):
        self.assertAlmostEqual(adversarial_loss([0.5, 0.5], [0.5, 0.5]), -2 * math.log(2), places=10)

    def test_adversarial_loss_perfect_discriminator(self):
        self.assertAlmostEqual(adversarial_loss([1.0 - 1e-12], [1e-12]), 0.0, places=5)

    def test_adversarial_loss_is_finite_at_zero(self):
        self.assertTrue(np.isfinite(adversarial_loss([0.0], [0.5])))

    def test_reconstruction_loss(self):
        self.assertEqual(reconstruction_loss([1.0, -1.0], [1.0, -1.0]), 0.0)
        self.assertEqual(reconstruction_loss([1.0, -1.0], [0.0, 0.0]), 1.0)
        rng = np.random.default_rng(0)
        s, r = rng.normal(size=10), rng.normal(size=10)
        self.assertAlmostEqual(reconstruction_loss(s, s + 2 * (r - s)), 2 * reconstruction_loss(s, r))

    def test_reconstruction_shape_mismatch(self):
        with self.assertRaises(ValueError):
            reconstruction_loss(np.zeros(3), np.zeros(4))


class TestObjectiveGradients(unittest.TestCase):
    """Both halves of the min-max objective against central differences in float64."""

    def _models(self):
        yield build_aean(1, bands=8, seed=1, dtype=np.float64), (1, 1, 8)
        yield build_aean(2, bands=1, block_size=8, seed=2, dtype=np.float64), (1, 8, 8)

    def _check(self, loss, params, grads, entries, rng):
        for key, param in params.items():
            flat = param.reshape(-1)
            picks = rng.choice(flat.size, size=min(entries, flat.size), replace=False)
            _, base = loss()
            analytic, numeric = [], []
            for i in picks:
                saved = flat[i]
                flat[i] = saved + STEP
                plus, plus_pattern = loss()
                flat[i] = saved - STEP
                minus, minus_pattern = loss()
                flat[i] = saved
                if plus_pattern == base and minus_pattern == base:
                    analytic.append(grads[key].reshape(-1)[i])
                    numeric.append((plus - minus) / (2 * STEP))
            self.assertGreater(len(numeric), len(picks) // 2, msg=key)
            self.assertLess(_relative_error(np.array(analytic), np.array(numeric)), TOLERANCE, msg=key)

    def test_autoencoder_objective(self):
        rng = np.random.default_rng(0)
        for model, shape in self._models():
            with self.subTest(dim=model.dim):
                samples = rng.uniform(-1, 1, size=(2,) + shape)
                autoencoder, discriminator = model.autoencoder, model.discriminator

                def loss():
                    reconstructions = autoencoder.forward(samples)
                    fake = discriminator.forward(reconstructions)
                    value = fake_term(fake) + model.lam * reconstruction_loss(samples, reconstructions)
                    signs = np.packbits(reconstructions > samples).tobytes()
                    return value, _kinks(autoencoder, discriminator) + signs

                autoencoder.zero_grad()
                discriminator.zero_grad()
                autoencoder_objective(model, samples, autoencoder.forward(samples))
                grads = {key: value.copy() for key, value in autoencoder.gradients().items()}
                self._check(loss, autoencoder.parameters(), grads, 5, rng)

    def test_discriminator_objective(self):
        rng = np.random.default_rng(1)
        for model, shape in self._models():
            with self.subTest(dim=model.dim):
                samples = rng.uniform(-1, 1, size=(2,) + shape)
                reconstructions = model.autoencoder.forward(samples).copy()
                discriminator = model.discriminator

                def loss():
                    real = discriminator.forward(samples)
                    real_kinks = _kinks(discriminator)
                    fake = discriminator.forward(reconstructions)
                    return -adversarial_loss(real, fake), real_kinks + _kinks(discriminator)

                discriminator.zero_grad()
                discriminator_objective(model, samples, reconstructions)
                grads = {key: value.copy() for key, value in discriminator.gradients().items()}
                self._check(loss, discriminator.parameters(), grads, 5, rng)


class TestTraining(unittest.TestCase):

    def test_config_defaults_per_dimension(self):
        self.assertEqual(resolve_config(1).epochs, 300)
        self.assertEqual(resolve_config(2).batch_size, 16)
        self.assertEqual(resolve_config(3, epochs=2).epochs, 2)
        self.assertEqual(TrainConfig().lam, 10.0)

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            TrainConfig(epochs=0)

    def test_same_seed_gives_identical_traces(self):
        rng = np.random.default_rng(0)
        training_set = _spectral_set(rng.uniform(-1, 1, size=(20, 8)))
        traces = []
        for _ in range(2):
            model = build_aean(1, bands=8, seed=5)
            result = train_aean(model, training_set, TrainConfig(epochs=2, batch_size=8, seed=5, log_interval=1))
            traces.append([(entry.adversarial, entry.reconstruction) for entry in result.trace])
            self.assertTrue(model.trained)
            self.assertEqual(model.autoencoder.mode, "infer")
        self.assertEqual(traces[0], traces[1])
        self.assertEqual(len(traces[0]), 6)

    def test_overfits_a_single_sample(self):
        rng = np.random.default_rng(3)
        sample = rng.uniform(-0.9, 0.9, size=8)
        training_set = _spectral_set(np.tile(sample, (10, 1)))
        model = build_aean(1, bands=8, seed=0)
        config = TrainConfig(epochs=200, batch_size=64, seed=0, lr_autoencoder=1e-3, log_interval=1)
        result = train_aean(model, training_set, config)
        self.assertEqual(result.steps, 200)
        self.assertLess(result.trace[-1].reconstruction, 0.1 * result.trace[0].reconstruction)

    def test_trained_model_reconstructs_better_than_a_fresh_one(self):
        rng = np.random.default_rng(7)
        sample = rng.uniform(-0.9, 0.9, size=32)
        training_set = _spectral_set(np.tile(sample, (10, 1)))
        model = build_aean(1, bands=32, seed=0)
        before = reconstruction_error(model, training_set.samples)
        config = TrainConfig(epochs=200, batch_size=64, seed=0, lr_autoencoder=1e-3, log_interval=50)
        result = train_aean(model, training_set, config)
        after = reconstruction_error(model, training_set.samples)
        self.assertEqual(model.autoencoder.mode, "infer")
        self.assertLess(after, before)
        self.assertAlmostEqual(result.infer_error, after, places=6)

    @unittest.skipUnless(SLOW, "set HSI_AEAN_SLOW=1 for long-running checks")
    def test_overfits_a_single_block_at_default_rates(self):
        rng = np.random.default_rng(4)
        for dim, bands in ((2, 1), (3, 4)):
            with self.subTest(dim=dim):
                block = rng.uniform(-0.9, 0.9, size=(bands, 16, 16))
                training_set = TrainingSet(dim=dim, samples=np.tile(block, (10, 1, 1, 1)), block_size=16, step=8,
                                           bands=4)
                model = build_aean(dim, bands=4, block_size=16, seed=0)
                result = train_aean(model, training_set, TrainConfig(epochs=200, batch_size=16, log_interval=1))
                self.assertLess(result.trace[-1].reconstruction, 0.1 * result.trace[0].reconstruction)


class TestSynthesis(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _trained(self, dim, bands, block_size=None):
        model = build_aean(dim, bands=bands, block_size=block_size, seed=0)
        model.trained = True
        return model.infer()

    def test_tiling_arithmetic(self):
        bsq = np.arange(3 * 100 * 100, dtype=float).reshape(3, 100, 100)
        tiles = tile_cube(bsq, 16)
        self.assertEqual(tiles.shape, (7, 7, 3, 16, 16))
        np.testing.assert_array_equal(untile_cube(tiles, 100, 100), bsq)
        # reflect padding mirrors row 98 into row 100
        np.testing.assert_array_equal(tiles[6, 0, 0, 4], bsq[0, 98, :16])

    def test_output_shape_and_range(self):
        rng = np.random.default_rng(0)
        cube = HsiCube(rng.uniform(-1, 1, size=(10, 12, 3)))
        for dim, block_size in ((1, None), (2, 8), (3, 8)):
            with self.subTest(dim=dim):
                rebuilt = synthesize_hsi(self._trained(dim, 3, block_size), cube)
                self.assertEqual(rebuilt.shape, cube.shape)
                self.assertTrue(np.all(np.abs(rebuilt.data) <= 1.0))

    def test_untrained_model_is_rejected(self):
        model = build_aean(1, bands=3)
        with self.assertRaises(UntrainedModelError):
            synthesize_hsi(model, HsiCube(np.zeros((2, 2, 3))))

    def test_band_count_must_match(self):
        with self.assertRaises(ValueError):
            synthesize_hsi(self._trained(1, 4), HsiCube(np.zeros((2, 2, 3))))

    def test_saved_model_reconstructs_identically(self):
        rng = np.random.default_rng(1)
        cube = HsiCube(rng.uniform(-1, 1, size=(8, 8, 2)))
        model = self._trained(3, 2, 8)
        path = os.path.join(self.tmp.name, "model-3d.aean")
        save_model(model, path)
        restored = load_model(path)
        self.assertIsInstance(restored, AeanModel)
        self.assertEqual((restored.dim, restored.block_size, restored.bands), (3, 8, 2))
        np.testing.assert_array_equal(synthesize_hsi(restored, cube).data, synthesize_hsi(model, cube).data)


if __name__ == '__main__':
    unittest.main()
