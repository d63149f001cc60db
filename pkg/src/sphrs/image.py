from dataclasses import dataclass

import numpy as np


@dataclass
class ImageBuffer:
    """Single-channel raster, row-major ``(height, width)``, values in ``[0, v_max]``."""

    data: np.ndarray
    v_max: float = 255.0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite values")
        if self.data.size and (self.data.min() < 0 or self.data.max() > self.v_max):
            raise ValueError(f"image values outside [0, {self.v_max}]")

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @classmethod
    def full(cls, width, height, value, v_max=255.0):
        return cls(np.full((height, width), float(value)), v_max)

    def downscale(self, factor):
        """Box-filter reduction by an integer ``factor`` (mean of each
        ``factor x factor`` cell). Dimensions must be divisible by it."""
        factor = int(factor)
        if factor < 1:
            raise ValueError("downscale factor must be >= 1")
        h, w = self.data.shape
        if h % factor or w % factor:
            raise ValueError(f"{w}x{h} is not divisible by {factor}")
        cells = self.data.reshape(h // factor, factor, w // factor, factor)
        return ImageBuffer(cells.mean(axis=(1, 3)), self.v_max)
