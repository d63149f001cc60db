"""Band-limited test images built from real spherical harmonics.

A field is a fixed random combination of harmonics, so the same field can be
sampled in any format and at any resolution.
"""
import os

import numpy as np
from scipy.special import sph_harm_y

from .geometry import to_spherical
from .image import ImageBuffer
from .projections import pixel_centers, to_sphere


def default_seed():
    return int(os.environ.get("SPHRS_SEED", "0"))


class HarmonicField:
    def __init__(self, seed=None, max_degree=48, n_terms=48, low=32.0, high=223.0):
        rng = np.random.default_rng(default_seed() if seed is None else seed)
        self.degrees = rng.integers(1, max_degree + 1, n_terms)
        self.orders = np.array([rng.integers(-l, l + 1) for l in self.degrees])
        # flatter spectra carry more fine detail; amplitude ~ 1/sqrt(l)
        self.coeffs = rng.normal(size=n_terms) / np.sqrt(self.degrees)
        # normalize once on a fixed reference sampling so every resolution of
        # the field shares the same value mapping
        ref = self._raw(_fibonacci_sphere(20000))
        lo, hi = ref.min(), ref.max()
        self.scale = (high - low) / (hi - lo)
        self.offset = low - lo * self.scale

    def _raw(self, s):
        theta, phi = to_spherical(s)
        # Y(theta, phi) = Y(theta, 0) * exp(i m phi); ERP rows share one theta
        theta_u, inv = np.unique(theta, return_inverse=True)
        out = np.zeros(len(s))
        for l, m, c in zip(self.degrees, self.orders, self.coeffs):
            legendre = sph_harm_y(l, abs(m), theta_u, 0.0).real[inv]
            trig = np.cos(m * phi) if m >= 0 else np.sin(-m * phi)
            out += c * legendre * trig
        return out

    def __call__(self, s):
        return self._raw(np.asarray(s, dtype=float).reshape(-1, 3)) * self.scale + self.offset

    def render(self, fmt, v_max=255.0):
        vals = self(to_sphere(pixel_centers(fmt), fmt))
        return ImageBuffer(np.clip(vals, 0, v_max).reshape(fmt.height, fmt.width), v_max)


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    phi = np.pi * (1 + 5**0.5) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def harmonic_suite(fmt, n_images=10, seed=None, **kwargs):
    base = default_seed() if seed is None else seed
    return [HarmonicField(base + k, **kwargs).render(fmt) for k in range(n_images)]
