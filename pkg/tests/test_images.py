"""PPM I/O, sampling and marker tests."""

import numpy as np
import pytest

from procamsim.errors import ImageFormatError
from procamsim.images import (
    bilinear_sample,
    draw_marker,
    new_image,
    read_image,
    read_ppm,
    write_image,
    write_ppm,
)


class TestPpm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(7, 11, 3), dtype=np.uint8)
        path = tmp_path / "img.ppm"
        write_ppm(path, img)
        back = read_ppm(path)
        assert back.dtype == np.uint8
        assert np.array_equal(back, img)

    def test_header_layout(self, tmp_path):
        path = tmp_path / "img.ppm"
        write_ppm(path, new_image(3, 2, fill=(1, 2, 3)))
        data = path.read_bytes()
        assert data.startswith(b"P6\n3 2\n255\n")
        assert len(data) == len(b"P6\n3 2\n255\n") + 3 * 2 * 3

    def test_reads_comments_in_header(self, tmp_path):
        pixels = bytes(range(2 * 1 * 3))
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6 # comment\n# another\n2 1\n255\n" + pixels)
        img = read_ppm(path)
        assert img.shape == (1, 2, 3)
        assert img.ravel().tolist() == list(range(6))

    def test_float_input_is_clipped_and_rounded(self, tmp_path):
        img = np.array([[[-5.0, 127.4, 300.0]]])
        path = tmp_path / "f.ppm"
        write_ppm(path, img)
        assert read_ppm(path).ravel().tolist() == [0, 127, 255]

    def test_rejects_ascii_ppm(self, tmp_path):
        path = tmp_path / "p3.ppm"
        path.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(ImageFormatError):
            read_ppm(path)

    def test_rejects_truncated_pixels(self, tmp_path):
        path = tmp_path / "t.ppm"
        path.write_bytes(b"P6\n2 2\n255\n" + b"\x00" * 5)
        with pytest.raises(ImageFormatError):
            read_ppm(path)

    def test_rejects_wide_maxval(self, tmp_path):
        path = tmp_path / "m.ppm"
        path.write_bytes(b"P6\n1 1\n65535\n" + b"\x00" * 6)
        with pytest.raises(ImageFormatError):
            read_ppm(path)


class TestWriteImage:
    def test_dispatches_ppm(self, tmp_path):
        img = new_image(4, 3, fill=(9, 8, 7))
        path = tmp_path / "a.ppm"
        write_image(path, img)
        assert np.array_equal(read_image(path), img)

    def test_png_round_trip_when_pillow_present(self, tmp_path):
        pytest.importorskip("PIL")
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(5, 6, 3), dtype=np.uint8)
        path = tmp_path / "a.png"
        write_image(path, img)
        assert np.array_equal(read_image(path), img)

    def test_unknown_suffix_rejected(self, tmp_path):
        with pytest.raises(ImageFormatError):
            write_image(tmp_path / "a.tiff", new_image(2, 2))
        with pytest.raises(ImageFormatError):
            read_image(tmp_path / "a.bmp")


class TestBilinearSample:
    def gradient(self):
        img = np.zeros((4, 5, 3))
        img[..., 0] = np.arange(5)[None, :] * 10
        img[..., 1] = np.arange(4)[:, None] * 10
        img[..., 2] = 7.0
        return img

    def test_exact_at_texel_centers(self):
        img = self.gradient()
        xy = np.array([[x + 0.5, y + 0.5] for y in range(4) for x in range(5)])
        out = bilinear_sample(img, xy).reshape(4, 5, 3)
        assert np.abs(out - img).max() < 1e-12

    def test_midpoint_averages_neighbors(self):
        img = self.gradient()
        out = bilinear_sample(img, np.array([1.0, 0.5]))
        assert out.ravel()[0] == pytest.approx((0 + 10) / 2)
        out = bilinear_sample(img, np.array([0.5, 1.0]))
        assert out.ravel()[1] == pytest.approx((0 + 10) / 2)

    def test_border_blends_to_black(self):
        img = np.full((3, 3, 3), 200.0)
        on_edge = bilinear_sample(img, np.array([0.0, 1.5]))
        assert np.allclose(on_edge, 100.0)
        at_corner = bilinear_sample(img, np.array([0.0, 0.0]))
        assert np.allclose(at_corner, 50.0)

    def test_far_outside_is_black(self):
        img = np.full((3, 3, 3), 200.0)
        for xy in ([-10.0, 1.5], [1.5, 50.0], [3000.0, 1.5], [-0.5, -0.5], [3.5, 1.5]):
            assert np.allclose(bilinear_sample(img, np.array(xy)), 0.0)

    def test_preserves_leading_shape(self):
        img = self.gradient()
        xy = np.full((2, 3, 2), 1.5)
        assert bilinear_sample(img, xy).shape == (2, 3, 3)

    def test_single_channel_image(self):
        img = np.arange(12, dtype=float).reshape(3, 4)
        out = bilinear_sample(img, np.array([1.5, 1.5]))
        assert out.shape == (1,)
        assert out[0] == pytest.approx(5.0)


class TestDrawMarker:
    def test_draws_cross(self):
        img = new_image(9, 9)
        draw_marker(img, (4.5, 4.5), (255, 0, 0), half_size=2)
        assert np.array_equal(img[4, 4], [255, 0, 0])
        assert np.array_equal(img[4, 2], [255, 0, 0])
        assert np.array_equal(img[6, 4], [255, 0, 0])
        assert np.array_equal(img[3, 3], [0, 0, 0])
        assert (img != 0).any(axis=2).sum() == 9

    def test_clips_at_borders(self):
        img = new_image(5, 5)
        draw_marker(img, (0.2, 0.2), (0, 255, 0), half_size=3)
        draw_marker(img, (-20.0, 2.0), (0, 255, 0), half_size=3)
        draw_marker(img, (2.0, 40.0), (0, 255, 0), half_size=3)
        assert img[0, 0, 1] == 255
