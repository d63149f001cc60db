import numpy as np
import pytest
from PIL import Image

from sphrs.image import ImageBuffer
from sphrs.io import ImageFormatError, load_channels, load_image, quantize, save_channels, save_image


def test_pgm_example(tmp_path):
    p = tmp_path / "a.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
    im = load_image(p)
    assert im.v_max == 255
    np.testing.assert_array_equal(im.data, [[0, 64], [128, 255]])
    save_image(im, tmp_path / "b.pgm")
    assert (tmp_path / "b.pgm").read_bytes() == p.read_bytes()


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_sixteen_bit_round_trip(tmp_path, suffix, rng):
    data = rng.integers(0, 65536, (5, 7)).astype(float)
    save_image(ImageBuffer(data, 65535.0), tmp_path / f"x{suffix}")
    back = load_image(tmp_path / f"x{suffix}")
    assert back.v_max == 65535
    np.testing.assert_array_equal(back.data, data)


def test_color_to_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[1, 1] = (100, 200, 50)
    Image.fromarray(rgb).save(tmp_path / "c.png")
    im = load_image(tmp_path / "c.png")
    np.testing.assert_allclose(im.data[0, 0], 0.299 * 255)
    np.testing.assert_allclose(im.data[1, 1], 0.299 * 100 + 0.587 * 200 + 0.114 * 50)
    chans = load_channels(tmp_path / "c.png")
    assert len(chans) == 3
    save_channels(chans, tmp_path / "d.png")
    np.testing.assert_array_equal(np.asarray(Image.open(tmp_path / "d.png")), rgb)


def test_quantize():
    np.testing.assert_array_equal(quantize([0.49, 0.5, 1.5, 254.6, 300], 255), [0, 1, 2, 255, 255])


def test_truncated_file(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(5))
    with pytest.raises(ImageFormatError):
        load_image(p)


def test_unsupported(tmp_path):
    Image.new("L", (4, 4)).save(tmp_path / "x.bmp")
    with pytest.raises(ImageFormatError):
        load_image(tmp_path / "x.bmp")
    with pytest.raises(ImageFormatError):
        save_image(ImageBuffer(np.zeros((2, 2))), tmp_path / "y.jpg")
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "missing.png")


def test_image_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros(4))
    with pytest.raises(ValueError):
        ImageBuffer(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        ImageBuffer(np.array([[256.0]]))
    assert ImageBuffer.full(6, 3, 7.0).data.shape == (3, 6)


def test_box_downscale():
    img = ImageBuffer(np.arange(16.0).reshape(4, 4))
    np.testing.assert_array_equal(img.downscale(2).data, [[2.5, 4.5], [10.5, 12.5]])
    assert img.downscale(1).data.shape == (4, 4)
    with pytest.raises(ValueError):
        img.downscale(3)
