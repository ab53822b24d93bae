# Path: /tests/hsi_test.py
# Tests for the cube and raster types, normalization and file formats.
import os
import tempfile
import unittest

import numpy as np
from PIL import Image

from src.hsi import CubeFormatError, HsiCube, Raster, load_cube, load_raster, normalize_cube, save_cube, save_raster


class TestCube(unittest.TestCase):

    def test_pixels_are_in_lexicographic_order(self):
        data = np.arange(2 * 3 * 2, dtype=float).reshape(2, 3, 2)
        cube = HsiCube(data)
        self.assertEqual(cube.n_pixels, 6)
        np.testing.assert_array_equal(cube.pixels[1], data[0, 1])
        np.testing.assert_array_equal(cube.pixels[3], data[1, 0])
        np.testing.assert_array_equal(cube.band_sequential()[1], data[:, :, 1])

    def test_non_finite_values_are_rejected(self):
        data = np.zeros((2, 2, 2))
        data[1, 0, 1] = np.nan
        with self.assertRaises(ValueError):
            HsiCube(data)

    def test_cube_data_is_read_only(self):
        cube = HsiCube(np.zeros((2, 2, 1)))
        with self.assertRaises(ValueError):
            cube.data[0, 0, 0] = 1.0

    def test_raster_binary_flag(self):
        self.assertTrue(Raster(np.array([[0.0, 1.0]])).is_binary)
        self.assertFalse(Raster(np.array([[0.0, 0.5]])).is_binary)


class TestNormalize(unittest.TestCase):

    def test_affine_endpoints(self):
        cube = HsiCube(np.array([0.0, 50.0, 100.0]).reshape(1, 3, 1))
        np.testing.assert_allclose(normalize_cube(cube).data.ravel(), [-1.0, 0.0, 1.0])

    def test_cube_spanning_unit_range_is_unchanged(self):
        data = np.array([-1.0, 0.25, 1.0, -0.5]).reshape(2, 2, 1)
        np.testing.assert_array_equal(normalize_cube(HsiCube(data)).data, data)

    def test_constant_cube_maps_to_zeros(self):
        cube = HsiCube(np.full((3, 3, 2), 7.0))
        np.testing.assert_array_equal(normalize_cube(cube).data, np.zeros((3, 3, 2)))

    def test_values_lie_in_unit_range(self):
        rng = np.random.default_rng(3)
        normalized = normalize_cube(HsiCube(rng.normal(500, 200, size=(6, 5, 4))))
        self.assertGreaterEqual(normalized.data.min(), -1.0)
        self.assertLessEqual(normalized.data.max(), 1.0)

    def test_normalizing_twice_changes_nothing(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            once = normalize_cube(HsiCube(rng.normal(500, 200, size=(6, 5, 4))))
            self.assertEqual((once.data.min(), once.data.max()), (-1.0, 1.0))
            np.testing.assert_array_equal(normalize_cube(once).data, once.data)

    def test_band_extrema_stay_in_place(self):
        rng = np.random.default_rng(5)
        cube = HsiCube(rng.uniform(0, 4000, size=(7, 6, 5)))
        normalized = normalize_cube(cube)
        np.testing.assert_array_equal(normalized.pixels.argmax(axis=0), cube.pixels.argmax(axis=0))
        np.testing.assert_array_equal(normalized.pixels.argmin(axis=0), cube.pixels.argmin(axis=0))


class TestFormats(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def _write_envi(self, name, lines, samples, bands, values, data_type=4):
        header = os.path.join(self.dir, name + ".hdr")
        with open(header, "w") as f:
            f.write("ENVI\n")
            f.write(f"samples = {samples}\nlines = {lines}\nbands = {bands}\n")
            f.write(f"header offset = 0\nfile type = ENVI Standard\ndata type = {data_type}\n")
            f.write("interleave = bsq\nbyte order = 0\n")
        dtype = {2: "<i2", 4: "<f4"}[data_type]
        np.asarray(values, dtype=dtype).tofile(os.path.join(self.dir, name + ".img"))
        return header

    def test_csv_cube_one_pixel_per_row(self):
        path = os.path.join(self.dir, "cube.csv")
        with open(path, "w") as f:
            f.write("0\n1\n2\n3\n")
        cube = load_cube(path, fmt="csv")
        self.assertEqual(cube.shape, (2, 2, 1))
        np.testing.assert_array_equal(cube.pixels.ravel(), [0, 1, 2, 3])

    def test_empty_csv_is_a_format_error(self):
        path = os.path.join(self.dir, "empty.csv")
        open(path, "w").close()
        with self.assertRaises(CubeFormatError):
            load_cube(path, fmt="csv")
        with self.assertRaises(CubeFormatError):
            load_raster(path, fmt="csv")

    def test_envi_cube_is_read_band_sequential(self):
        values = np.arange(3 * 4 * 2, dtype=np.float32)
        header = self._write_envi("scene", lines=3, samples=4, bands=2, values=values)
        cube = load_cube(header)
        self.assertEqual(cube.shape, (3, 4, 2))
        np.testing.assert_array_equal(cube.band_sequential().ravel(), values)

    def test_envi_int16_cube(self):
        values = (np.arange(12, dtype=np.int16) - 6) * 1000
        header = self._write_envi("counts", lines=2, samples=3, bands=2, values=values, data_type=2)
        cube = load_cube(header)
        self.assertEqual(cube.shape, (2, 3, 2))
        np.testing.assert_array_equal(cube.band_sequential().ravel(), values.astype(np.float64))

    def test_envi_payload_size_mismatch(self):
        header = self._write_envi("short", lines=10, samples=10, bands=5, values=np.zeros(499))
        with self.assertRaises(CubeFormatError):
            load_cube(header)

    def test_envi_non_finite_value_reports_index(self):
        values = np.zeros(8, dtype=np.float32)
        values[5] = np.inf
        header = self._write_envi("bad", lines=2, samples=2, bands=2, values=values)
        with self.assertRaisesRegex(CubeFormatError, "index 5"):
            load_cube(header)

    def test_save_cube_then_load(self):
        rng = np.random.default_rng(0)
        cube = HsiCube(rng.uniform(-1, 1, size=(4, 5, 3)).astype(np.float32))
        path = os.path.join(self.dir, "out.hdr")
        save_cube(cube, path)
        np.testing.assert_array_equal(load_cube(path).data, cube.data)

    def test_raw_raster_round_trip(self):
        raster = Raster(np.arange(9, dtype=np.float32).reshape(3, 3) / 7)
        path = os.path.join(self.dir, "scores.f32")
        save_raster(raster, path)
        np.testing.assert_array_equal(load_raster(path).data, raster.data)

    def test_pgm_encodes_binary_as_0_and_255(self):
        mask = Raster(np.array([[0.0, 1.0], [1.0, 0.0]]))
        path = os.path.join(self.dir, "mask.pgm")
        save_raster(mask, path, fmt="pgm")
        with Image.open(path) as image:
            np.testing.assert_array_equal(np.asarray(image), [[0, 255], [255, 0]])
        np.testing.assert_array_equal(load_raster(path, fmt="pgm").data, mask.data)

    def test_pgm_rejects_real_valued_raster(self):
        with self.assertRaises(CubeFormatError):
            save_raster(Raster(np.array([[0.5, 1.0]])), os.path.join(self.dir, "x.pgm"), fmt="pgm")


if __name__ == '__main__':
    unittest.main()
