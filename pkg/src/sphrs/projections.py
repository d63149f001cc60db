"""Projection functions between image planes and the unit sphere.

Two spherical image formats are supported, equirectangular (``erp``) and a
3x2-packed cubemap (``cmp``), plus the gnomonic (perspective) projection onto
the plane tangent to the sphere at +x.

Pixel coordinates are continuous ``(u, v)`` pairs with ``(0, 0)`` at the top
left corner of the top left pixel; pixel centers sit on half-integers. Arrays of
coordinates have shape ``(..., 2)`` and arrays of sphere points ``(..., 3)``.

Cubemap layout (face size ``N``; canvas ``3N x 2N``)::

    +----+----+----+
    | PX | NX | PY |
    +----+----+----+
    | NY | PZ | NZ |
    +----+----+----+

Inside a face, ``a`` runs left to right and ``b`` top to bottom, both in
``[-1, 1]``; the sphere direction of ``(face, a, b)`` is
``forward + a * right + b * down`` normalized, with the vectors listed in
:data:`FACE_BASIS`.
"""
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .geometry import from_spherical, to_spherical

EPS_FRONT = 1e-6


class CoordinateDomainError(ValueError):
    """A pixel coordinate lies outside the image canvas."""


class BehindCameraError(ValueError):
    """A point handed to the perspective projection is not in front of the camera."""


class FaceId(IntEnum):
    PX = 0
    NX = 1
    PY = 2
    NY = 3
    PZ = 4
    NZ = 5


# (forward, right, down) per face
FACE_BASIS = np.array(
    [
        [[1, 0, 0], [0, -1, 0], [0, 0, -1]],
        [[-1, 0, 0], [0, 1, 0], [0, 0, -1]],
        [[0, 1, 0], [1, 0, 0], [0, 0, -1]],
        [[0, -1, 0], [-1, 0, 0], [0, 0, -1]],
        [[0, 0, 1], [0, -1, 0], [1, 0, 0]],
        [[0, 0, -1], [0, -1, 0], [-1, 0, 0]],
    ],
    dtype=float,
)

# (column, row) of each face in the packed canvas
FACE_LAYOUT = np.array([[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1]])
_FACE_AT = {(int(c), int(r)): f for f, (c, r) in enumerate(FACE_LAYOUT)}


@dataclass(frozen=True)
class ProjectionFormat:
    kind: str
    width: int
    height: int

    def __post_init__(self):
        if self.kind not in _PROJECTIONS:
            raise ValueError(f"unknown projection kind {self.kind!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.kind == "erp" and self.width != 2 * self.height:
            raise ValueError(f"ERP requires width == 2*height, got {self.width}x{self.height}")
        if self.kind == "cmp" and (self.width % 3 or self.width // 3 * 2 != self.height):
            raise ValueError(f"CMP requires a 3x2 face canvas, got {self.width}x{self.height}")

    @classmethod
    def erp(cls, width):
        return cls("erp", int(width), int(width) // 2)

    @classmethod
    def cmp(cls, face_size):
        return cls("cmp", 3 * int(face_size), 2 * int(face_size))

    @property
    def face_size(self):
        if self.kind != "cmp":
            raise AttributeError("face_size is only defined for cubemaps")
        return self.width // 3

    @property
    def shape(self):
        return (self.height, self.width)

    def __str__(self):
        return f"{self.kind}:{self.width}x{self.height}"


def _check_canvas(p, fmt):
    p = np.asarray(p, dtype=float)
    u, v = p[..., 0], p[..., 1]
    bad = ~((u >= 0) & (u <= fmt.width) & (v >= 0) & (v <= fmt.height))
    if np.any(bad):
        raise CoordinateDomainError(f"coordinate outside {fmt}: {p[bad][0]}")
    return u, v


def erp_to_sphere(p, fmt):
    u, v = _check_canvas(p, fmt)
    lon = (u / fmt.width - 0.5) * 2 * np.pi
    lat = (0.5 - v / fmt.height) * np.pi
    return from_spherical(np.pi / 2 - lat, lon)


def sphere_to_erp(s, fmt):
    theta, phi = to_spherical(s)
    u = np.mod((phi / (2 * np.pi) + 0.5) * fmt.width, fmt.width)
    u = np.where(u >= fmt.width, 0.0, u)
    v = theta / np.pi * fmt.height
    return np.stack([u, v], axis=-1)


def face_of(s):
    """Cube face hit by direction(s) ``s``; ties go to x, then y, then z."""
    s = np.asarray(s, dtype=float)
    axis = np.argmax(np.abs(s), axis=-1)
    comp = np.take_along_axis(s, axis[..., None], axis=-1)[..., 0]
    return 2 * axis + (comp < 0)


def face_coords(s, face=None):
    """In-face coordinates ``(a, b)`` of ``s`` on ``face`` (default: its own face)."""
    s = np.asarray(s, dtype=float)
    if face is None:
        face = face_of(s)
    basis = FACE_BASIS[face]
    depth = np.sum(s * basis[..., 0, :], axis=-1)
    a = np.sum(s * basis[..., 1, :], axis=-1) / depth
    b = np.sum(s * basis[..., 2, :], axis=-1) / depth
    return a, b


def face_to_sphere(face, a, b):
    basis = FACE_BASIS[np.asarray(face)]
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    vec = basis[..., 0, :] + a * basis[..., 1, :] + b * basis[..., 2, :]
    return vec / np.linalg.norm(vec, axis=-1, keepdims=True)


def cmp_locate(p, fmt):
    """Split canvas coordinate(s) into ``(face, a, b)``."""
    u, v = _check_canvas(p, fmt)
    n = fmt.face_size
    col = np.clip(np.floor(u / n), 0, 2).astype(int)
    row = np.clip(np.floor(v / n), 0, 1).astype(int)
    face = np.vectorize(lambda c, r: _FACE_AT[(c, r)], otypes=[int])(col, row)
    a = 2 * (u - col * n) / n - 1
    b = 2 * (v - row * n) / n - 1
    return face, a, b


def cmp_to_sphere(p, fmt):
    face, a, b = cmp_locate(p, fmt)
    return face_to_sphere(face, a, b)


def sphere_to_cmp(s, fmt):
    face = face_of(s)
    a, b = face_coords(s, face)
    n = fmt.face_size
    col, row = FACE_LAYOUT[face][..., 0], FACE_LAYOUT[face][..., 1]
    u = (col + (a + 1) / 2) * n
    v = (row + (b + 1) / 2) * n
    return np.stack([u, v], axis=-1)


def perspective_project(s, eps_front=EPS_FRONT):
    """Gnomonic projection onto the tangent plane at +x with focal length 1.

    Returns plane coordinates ``(y/x, -z/x)``; these are dimensionless, not
    pixels.
    """
    s = np.asarray(s, dtype=float)
    x = s[..., 0]
    if np.any(x <= eps_front):
        raise BehindCameraError("point behind the perspective camera")
    return np.stack([s[..., 1] / x, -s[..., 2] / x], axis=-1)


_PROJECTIONS = {
    "erp": (erp_to_sphere, sphere_to_erp),
    "cmp": (cmp_to_sphere, sphere_to_cmp),
}


def register_projection(kind, inverse, forward):
    """Make a new format kind available to :class:`ProjectionFormat`.

    ``inverse(p, fmt)`` maps pixel coordinates to the sphere and
    ``forward(s, fmt)`` maps sphere points to pixel coordinates.
    """
    _PROJECTIONS[kind] = (inverse, forward)


def to_sphere(p, fmt):
    return _PROJECTIONS[fmt.kind][0](p, fmt)


def from_sphere(s, fmt):
    return _PROJECTIONS[fmt.kind][1](s, fmt)


def project_source_to_target(p, src, tar):
    return from_sphere(to_sphere(p, src), tar)


def project_target_to_source(p, src, tar):
    return from_sphere(to_sphere(p, tar), src)


def pixel_centers(fmt):
    """Row-major ``(height*width, 2)`` array of pixel-center coordinates."""
    vv, uu = np.mgrid[0 : fmt.height, 0 : fmt.width]
    return np.stack([uu.ravel() + 0.5, vv.ravel() + 0.5], axis=-1)


def default_face_size(erp_width, erp_height):
    """Face size giving a cubemap with roughly as many samples as the ERP image.

    ``6 * face**2 ~ width * height``, rounded to a multiple of 16.
    """
    face = int(round(np.sqrt(erp_width * erp_height / 6) / 16)) * 16
    return max(face, 16)
