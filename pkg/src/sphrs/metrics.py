"""Full-reference quality metrics: PSNR, WS-PSNR and SSIM.

WS-PSNR weights each pixel's squared error by the spherical area it covers.
For ERP that is the cosine of the row latitude; for a cube face it is the
solid-angle density of the gnomonic face parameterization,
``(1 + a**2 + b**2) ** -1.5``.

Identical inputs give ``IDENTICAL_DB`` (999 dB) rather than infinity so that
tables stay numeric.
"""
from functools import lru_cache

import numpy as np
from scipy import ndimage

from .projections import ProjectionFormat, cmp_locate, pixel_centers

IDENTICAL_DB = 999.0


def _pair(a, b):
    if a.data.shape != b.data.shape:
        raise ValueError(f"image sizes differ: {a.data.shape} vs {b.data.shape}")
    if a.v_max != b.v_max:
        raise ValueError("images have different value ranges")
    return a.data, b.data, a.v_max


def _db(v_max, mse):
    if mse == 0:
        return IDENTICAL_DB
    return float(10 * np.log10(v_max**2 / mse))


def psnr(a, b):
    x, y, v_max = _pair(a, b)
    return _db(v_max, np.mean((x - y) ** 2))


@lru_cache(maxsize=16)
def _weights(kind, width, height):
    fmt = ProjectionFormat(kind, width, height)
    if kind == "erp":
        rows = np.cos((np.arange(height) + 0.5 - height / 2) * np.pi / height)
        w = np.repeat(rows[:, None], width, axis=1)
    elif kind == "cmp":
        _, a, b = cmp_locate(pixel_centers(fmt), fmt)
        w = ((1 + a**2 + b**2) ** -1.5).reshape(height, width)
    else:
        raise ValueError(f"no spherical weights for {kind!r}")
    w.setflags(write=False)
    return w


def weight_map(fmt):
    return _weights(fmt.kind, fmt.width, fmt.height)


def ws_psnr(a, b, fmt=None, weights=None):
    """Spherically weighted PSNR. Pass either the projection format or an
    explicit weight array."""
    x, y, v_max = _pair(a, b)
    if weights is None:
        if fmt is None:
            raise ValueError("ws_psnr needs a projection format or weights")
        if (fmt.height, fmt.width) != x.shape:
            raise ValueError(f"image size {x.shape[::-1]} does not match {fmt}")
        weights = weight_map(fmt)
    weights = np.asarray(weights, dtype=float)
    wmse = np.sum(weights * (x - y) ** 2) / np.sum(weights)
    return _db(v_max, wmse)


def _gaussian_window(size=11, sigma=1.5):
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def ssim(a, b, win_size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Mean SSIM over all window positions fully inside the image."""
    x, y, v_max = _pair(a, b)
    if min(x.shape) < win_size:
        raise ValueError(f"image smaller than the {win_size}x{win_size} SSIM window")
    g = _gaussian_window(win_size, sigma)

    def blur(img):
        img = ndimage.correlate1d(img, g, axis=0, mode="reflect")
        return ndimage.correlate1d(img, g, axis=1, mode="reflect")

    mx, my = blur(x), blur(y)
    sxx = blur(x * x) - mx * mx
    syy = blur(y * y) - my * my
    sxy = blur(x * y) - mx * my
    c1 = (k1 * v_max) ** 2
    c2 = (k2 * v_max) ** 2
    s = ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx**2 + my**2 + c1) * (sxx + syy + c2))
    pad = (win_size - 1) // 2
    return float(s[pad:-pad, pad:-pad].mean())
