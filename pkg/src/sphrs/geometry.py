"""Unit-sphere helpers: spherical coordinates, viewport alignment rotations and
great-circle distances.

Angles follow one convention everywhere in the package: ``theta`` is the polar
angle measured from +z, ``phi`` the azimuth measured from +x towards +y. The
virtual perspective camera looks along +x.

All functions accept a single vector of shape ``(3,)`` or a stack ``(..., 3)``.
"""
import numpy as np

OPTICAL_AXIS = np.array([1.0, 0.0, 0.0])


def normalize(s):
    s = np.asarray(s, dtype=float)
    return s / np.linalg.norm(s, axis=-1, keepdims=True)


def to_spherical(s):
    """Return ``(theta, phi)`` of unit vector(s) ``s``.

    At the poles (|z| = 1) the azimuth is set to 0.
    """
    s = np.asarray(s, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    theta = np.arctan2(np.hypot(x, y), z)
    pole = (x == 0.0) & (y == 0.0)
    phi = np.where(pole, 0.0, np.arctan2(y, x))
    # atan2 yields -pi on the negative x axis when y == -0.0; range is (-pi, pi]
    phi = np.where(phi == -np.pi, np.pi, phi)
    return theta, phi


def from_spherical(theta, phi):
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def rot_y(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def alignment_rotation(center):
    """Rotation that turns the viewing direction ``center`` onto the optical axis.

    With ``(theta, phi) = to_spherical(center)`` this is
    ``rot_y(pi/2 - theta) @ rot_z(-phi)``: the azimuth is removed first, then the
    point is tilted down onto the equator at +x.
    """
    theta, phi = to_spherical(center)
    return rot_y(np.pi / 2 - float(theta)) @ rot_z(-float(phi))


def rotate(R, s):
    """Apply ``R`` to vector(s) ``s`` and renormalize.

    The product is written out per component so every element is computed the
    same way regardless of how many vectors are passed in; the candidate
    filter relies on this to reproduce the full-projection path bit for bit.
    """
    s = np.asarray(s, dtype=float)
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    out = np.stack(
        [
            R[0, 0] * x + R[0, 1] * y + R[0, 2] * z,
            R[1, 0] * x + R[1, 1] * y + R[1, 2] * z,
            R[2, 0] * x + R[2, 1] * y + R[2, 2] * z,
        ],
        axis=-1,
    )
    norm = np.sqrt(out[..., 0] ** 2 + out[..., 1] ** 2 + out[..., 2] ** 2)
    return out / norm[..., None]


def great_circle_distance(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.sum(a * b, axis=-1)
    return np.arctan2(cross, dot)
