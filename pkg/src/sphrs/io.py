"""Reading and writing grayscale PNG / binary PGM files.

Color input is reduced to luma with BT.601 weights unless the caller asks for
the individual channels. ``v_max`` follows the container bit depth (255 or
65535).
"""
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .image import ImageBuffer

LUMA_601 = np.array([0.299, 0.587, 0.114])
SUFFIXES = {".png": "PNG", ".pgm": "PPM"}


class ImageFormatError(ValueError):
    """The file cannot be decoded as a supported image."""


def _read(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "PPM"):
                raise ImageFormatError(f"{path}: unsupported format {im.format}")
            im.load()
            mode = im.mode
            if mode == "P":
                im = im.convert("RGBA" if "transparency" in im.info else "RGB")
                mode = im.mode
            arr = np.asarray(im)
    except (ImageFormatError, FileNotFoundError):
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc
    if mode in ("I;16", "I;16B", "I;16L", "I"):
        v_max = 65535.0
    elif mode in ("L", "LA", "RGB", "RGBA", "1"):
        v_max = 255.0 if mode != "1" else 1.0
    else:
        raise ImageFormatError(f"{path}: unsupported pixel mode {mode}")
    arr = arr.astype(float)
    if arr.ndim == 3 and mode in ("LA", "RGBA"):
        arr = arr[..., :-1]
    return arr, v_max


def load_channels(path):
    """Return one :class:`ImageBuffer` per color channel (one for grayscale)."""
    arr, v_max = _read(path)
    if arr.ndim == 2:
        return [ImageBuffer(arr, v_max)]
    return [ImageBuffer(arr[..., c], v_max) for c in range(arr.shape[2])]


def load_image(path):
    arr, v_max = _read(path)
    if arr.ndim == 3:
        arr = np.clip(arr[..., :3] @ LUMA_601 if arr.shape[2] >= 3 else arr[..., 0], 0, v_max)
    return ImageBuffer(arr, v_max)


def quantize(data, v_max):
    """Round half up and fit to the container range."""
    return np.clip(np.floor(np.asarray(data) + 0.5), 0, v_max)


def save_image(img, path):
    save_channels([img], path)


def save_channels(channels, path):
    path = Path(path)
    fmt = SUFFIXES.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(f"{path}: output must be .png or .pgm")
    v_max = channels[0].v_max
    dtype = np.uint8 if v_max <= 255 else np.uint16
    planes = [quantize(c.data, v_max).astype(dtype) for c in channels]
    if len(planes) == 1:
        im = Image.fromarray(planes[0])
    elif dtype == np.uint8 and len(planes) == 3:
        im = Image.fromarray(np.stack(planes, axis=-1))
    else:
        raise ImageFormatError("multi-channel output is only supported for 8-bit RGB")
    if fmt == "PPM" and len(planes) != 1:
        raise ImageFormatError("PGM output must be single-channel")
    im.save(path, format=fmt)
