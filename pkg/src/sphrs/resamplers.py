"""Mesh-to-mesh resamplers.

Every resampler takes scattered source samples (a :class:`MeshSamples`) and an
arbitrary set of query positions and returns one value per query:

``nearest``
    value of the closest source sample (lowest index wins ties).
``linear``
    barycentric interpolation on the Delaunay triangulation.
``cubic``
    Clough-Tocher C1 piecewise cubic on the same triangulation, with vertex
    gradients from inverse-square-distance weighted least squares over each
    vertex's 1-ring.
``fsmr``
    frequency-selective model: a sparse 2-D DCT expansion over a window, grown
    one basis function at a time against a spatially weighted residual. The
    basis functions are continuous, so both sources and queries may sit
    anywhere inside the window.

Queries outside the convex hull of the sources fall back to ``nearest`` for the
triangulation-based kinds; the number of such queries is reported through
:class:`Diagnostics`.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.spatial import Delaunay, QhullError, cKDTree

KINDS = ("nearest", "linear", "cubic", "fsmr")
DUPLICATE_TOL = 1e-12


class DegenerateGeometryError(ValueError):
    """Fewer than three non-collinear source positions."""


@dataclass(frozen=True)
class FsmrParams:
    """``n_iter`` greedy iterations, coefficient damping ``gamma``, spatial
    weight decay ``rho`` per pixel of distance from the window center, and
    low-frequency preference ``sigma`` per unit of radial frequency index
    (1 disables it)."""

    n_iter: int = 1000
    gamma: float = 0.5
    rho: float = 0.8
    sigma: float = 0.7

    def __post_init__(self):
        if self.n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if not 0 < self.sigma <= 1:
            raise ValueError("sigma must be in (0, 1]")


@dataclass(frozen=True)
class ResamplerKind:
    name: str
    fsmr: FsmrParams = field(default_factory=FsmrParams)

    def __post_init__(self):
        if self.name not in KINDS:
            raise ValueError(f"unknown resampler {self.name!r}; expected one of {KINDS}")

    def __str__(self):
        return self.name


@dataclass
class Diagnostics:
    nearest_fallback: int = 0
    merged_duplicates: int = 0


class MeshSamples:
    """Scattered sample positions with values.

    Positions closer than ``DUPLICATE_TOL`` in both coordinates are merged into
    one sample carrying the mean value; the merged sample keeps the position and
    ordering slot of its lowest-index member.
    """

    def __init__(self, positions, values, v_max=255.0):
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(positions) != len(values):
            raise ValueError("positions and values differ in length")
        if len(positions) == 0:
            raise ValueError("a mesh needs at least one sample")
        if not np.all(np.isfinite(positions)):
            raise ValueError("mesh positions must be finite")
        self.v_max = float(v_max)
        self.n_merged = 0
        self.positions, self.values = self._merge_duplicates(positions, values)

    def _merge_duplicates(self, positions, values):
        n = len(positions)
        if n == 1:
            return positions, values
        order = np.lexsort((positions[:, 1], positions[:, 0]))
        sp = positions[order]
        close = np.all(np.abs(np.diff(sp, axis=0)) <= DUPLICATE_TOL, axis=1)
        if not close.any():
            return positions, values
        group = np.concatenate([[0], np.cumsum(~close)])
        n_groups = group[-1] + 1
        # representative = lowest original index in each group
        rep = np.full(n_groups, n, dtype=np.int64)
        np.minimum.at(rep, group, order)
        sums = np.bincount(group, weights=values[order], minlength=n_groups)
        counts = np.bincount(group, minlength=n_groups)
        keep = np.sort(rep)
        mean_of_rep = np.empty(n)
        mean_of_rep[rep] = sums / counts
        self.n_merged = n - n_groups
        return positions[keep], mean_of_rep[keep]

    def __len__(self):
        return len(self.values)


class NearestIndex:
    """Exact 2-D nearest-neighbour lookup; ties go to the lowest source index."""

    def __init__(self, positions):
        self.positions = np.asarray(positions, dtype=float)
        self.tree = cKDTree(self.positions)

    def query(self, queries, k=16):
        queries = np.asarray(queries, dtype=float).reshape(-1, 2)
        k = min(k, len(self.positions))
        _, idx = self.tree.query(queries, k=k)
        idx = np.asarray(idx).reshape(len(queries), k)
        # re-rank with the same squared-distance expression a brute-force scan uses
        d2 = (queries[:, None, 0] - self.positions[idx, 0]) ** 2 + (
            queries[:, None, 1] - self.positions[idx, 1]
        ) ** 2
        best = d2.min(axis=1, keepdims=True)
        return np.where(d2 == best, idx, np.iinfo(np.int64).max).min(axis=1)


def build_nearest_index(src):
    return NearestIndex(src.positions)


def triangulate(src):
    """Delaunay triangulation of the mesh positions."""
    pts = src.positions if isinstance(src, MeshSamples) else np.asarray(src, dtype=float)
    if len(pts) < 3:
        raise DegenerateGeometryError("need at least 3 points to triangulate")
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateGeometryError("source positions are collinear")
    try:
        return Delaunay(pts)
    except QhullError as exc:
        raise DegenerateGeometryError(str(exc)) from exc


def _barycentric(tri, simplex, q):
    T = tri.transform[simplex]
    b12 = np.einsum("nij,nj->ni", T[:, :2], q - T[:, 2])
    return np.column_stack([b12, 1.0 - b12.sum(axis=1)])


def interpolate_linear(tri, values, q):
    """Barycentric interpolation. Returns ``(out, outside)``; ``out`` is NaN
    wherever ``outside`` is set."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    values = np.asarray(values, dtype=float)
    simplex = tri.find_simplex(q)
    outside = simplex < 0
    out = np.full(len(q), np.nan)
    inside = ~outside
    if inside.any():
        s = simplex[inside]
        b = _barycentric(tri, s, q[inside])
        out[inside] = np.sum(b * values[tri.simplices[s]], axis=1)
    return out, outside


def estimate_gradients(tri, values):
    """Per-vertex gradients from a weighted least-squares plane over the 1-ring.

    Weights are ``1/d**2``. Vertices with a degenerate ring get a zero gradient.
    """
    values = np.asarray(values, dtype=float)
    pts = tri.points
    n = len(pts)
    indptr, nbrs = tri.vertex_neighbor_vertices
    owner = np.repeat(np.arange(n), np.diff(indptr))
    d = pts[nbrs] - pts[owner]
    df = values[nbrs] - values[owner]
    w = 1.0 / np.sum(d * d, axis=1)
    axx = np.bincount(owner, w * d[:, 0] * d[:, 0], minlength=n)
    axy = np.bincount(owner, w * d[:, 0] * d[:, 1], minlength=n)
    ayy = np.bincount(owner, w * d[:, 1] * d[:, 1], minlength=n)
    bx = np.bincount(owner, w * d[:, 0] * df, minlength=n)
    by = np.bincount(owner, w * d[:, 1] * df, minlength=n)
    det = axx * ayy - axy * axy
    ok = det > 1e-12 * (axx + ayy) ** 2
    safe = np.where(ok, det, 1.0)
    gx = np.where(ok, (ayy * bx - axy * by) / safe, 0.0)
    gy = np.where(ok, (axx * by - axy * bx) / safe, 0.0)
    return np.column_stack([gx, gy])


def _cross_directions(tri, which):
    """Affine-invariant cross-edge derivative directions per triangle edge.

    For the edge opposite local vertex ``k`` the direction is the line joining
    this triangle's centroid with the neighbour's centroid, expressed through a
    scalar ``g[k]`` in local barycentric terms. Hull edges use the median
    direction (``g = -1/2``).
    """
    g = np.full((len(which), 3), -0.5)
    for k in range(3):
        nb = tri.neighbors[which, k]
        has = nb >= 0
        if not has.any():
            continue
        centroid = tri.points[tri.simplices[nb[has]]].mean(axis=1)
        c = _barycentric(tri, which[has], centroid)
        # c[:, i] is the weight of local vertex i
        i1, i2 = (k + 1) % 3, (k + 2) % 3
        g[has, k] = (2 * c[:, i2] + c[:, i1] - 1) / (2 - 3 * c[:, i2] - 3 * c[:, i1])
    return g


def _clough_tocher_ordinates(tri, values, grads, which):
    """Bezier ordinates of the split-triangle cubic for triangles ``which``.

    Returned as a dict of arrays keyed by the usual four-index names, where the
    indices refer to vertex 1, 2, 3 and the centroid.
    """
    simp = tri.simplices[which]
    p = tri.points[simp]
    f = values[simp]
    df = grads[simp]
    e12 = p[:, 1] - p[:, 0]
    e23 = p[:, 2] - p[:, 1]
    e31 = p[:, 0] - p[:, 2]

    def dot(g, e):
        return g[:, 0] * e[:, 0] + g[:, 1] * e[:, 1]

    df12 = dot(df[:, 0], e12)
    df21 = -dot(df[:, 1], e12)
    df23 = dot(df[:, 1], e23)
    df32 = -dot(df[:, 2], e23)
    df31 = dot(df[:, 2], e31)
    df13 = -dot(df[:, 0], e31)

    c = {}
    c["3000"], c["0300"], c["0030"] = f[:, 0], f[:, 1], f[:, 2]
    c["2100"] = c["3000"] + df12 / 3
    c["2010"] = c["3000"] + df13 / 3
    c["1200"] = c["0300"] + df21 / 3
    c["0210"] = c["0300"] + df23 / 3
    c["1020"] = c["0030"] + df31 / 3
    c["0120"] = c["0030"] + df32 / 3
    c["2001"] = (c["2100"] + c["2010"] + c["3000"]) / 3
    c["0201"] = (c["1200"] + c["0300"] + c["0210"]) / 3
    c["0021"] = (c["1020"] + c["0120"] + c["0030"]) / 3

    g = _cross_directions(tri, which)
    c["0111"] = (
        g[:, 0] * (-c["0300"] + 3 * c["0210"] - 3 * c["0120"] + c["0030"])
        + (-c["0300"] + 2 * c["0210"] - c["0120"] + c["0021"] + c["0201"])
    ) / 2
    c["1011"] = (
        g[:, 1] * (-c["0030"] + 3 * c["1020"] - 3 * c["2010"] + c["3000"])
        + (-c["0030"] + 2 * c["1020"] - c["2010"] + c["2001"] + c["0021"])
    ) / 2
    c["1101"] = (
        g[:, 2] * (-c["3000"] + 3 * c["2100"] - 3 * c["1200"] + c["0300"])
        + (-c["3000"] + 2 * c["2100"] - c["1200"] + c["2001"] + c["0201"])
    ) / 2
    c["1002"] = (c["1101"] + c["1011"] + c["2001"]) / 3
    c["0102"] = (c["1101"] + c["0111"] + c["0201"]) / 3
    c["0012"] = (c["1011"] + c["0111"] + c["0021"]) / 3
    c["0003"] = (c["1002"] + c["0102"] + c["0012"]) / 3
    return c


def interpolate_cubic(tri, values, q, grads=None):
    """Clough-Tocher interpolation. Same return convention as
    :func:`interpolate_linear`."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    values = np.asarray(values, dtype=float)
    if grads is None:
        grads = estimate_gradients(tri, values)
    simplex = tri.find_simplex(q)
    outside = simplex < 0
    out = np.full(len(q), np.nan)
    inside = np.nonzero(~outside)[0]
    if len(inside) == 0:
        return out, outside
    s = simplex[inside]
    used = np.unique(s)
    slot = np.searchsorted(used, s)
    c = {key: val[slot] for key, val in _clough_tocher_ordinates(tri, values, grads, used).items()}

    b = _barycentric(tri, s, q[inside])
    m = b.min(axis=1)
    b1, b2, b3 = (b - m[:, None]).T
    b4 = 3 * m
    # each point is evaluated in the micro-triangle opposite its smallest weight
    w1 = (
        b2**3 * c["0300"] + 3 * b2**2 * b3 * c["0210"] + 3 * b2 * b3**2 * c["0120"] + b3**3 * c["0030"]
        + 3 * b2**2 * b4 * c["0201"] + 6 * b2 * b3 * b4 * c["0111"] + 3 * b3**2 * b4 * c["0021"]
        + 3 * b2 * b4**2 * c["0102"] + 3 * b3 * b4**2 * c["0012"] + b4**3 * c["0003"]
    )
    w2 = (
        b3**3 * c["0030"] + 3 * b3**2 * b1 * c["1020"] + 3 * b3 * b1**2 * c["2010"] + b1**3 * c["3000"]
        + 3 * b3**2 * b4 * c["0021"] + 6 * b1 * b3 * b4 * c["1011"] + 3 * b1**2 * b4 * c["2001"]
        + 3 * b3 * b4**2 * c["0012"] + 3 * b1 * b4**2 * c["1002"] + b4**3 * c["0003"]
    )
    w3 = (
        b1**3 * c["3000"] + 3 * b1**2 * b2 * c["2100"] + 3 * b1 * b2**2 * c["1200"] + b2**3 * c["0300"]
        + 3 * b1**2 * b4 * c["2001"] + 6 * b1 * b2 * b4 * c["1101"] + 3 * b2**2 * b4 * c["0201"]
        + 3 * b1 * b4**2 * c["1002"] + 3 * b2 * b4**2 * c["0102"] + b4**3 * c["0003"]
    )
    first = b[:, 0] == m
    second = ~first & (b[:, 1] == m)
    out[inside] = np.where(first, w1, np.where(second, w2, w3))
    return out, outside


def _dct_shape(window):
    x0, y0, x1, y1 = window
    return max(1, int(round(x1 - x0))), max(1, int(round(y1 - y0)))


def _dct_basis(x, y, window):
    x0, y0, x1, y1 = window
    nu, nv = _dct_shape(window)
    cu = np.cos(np.pi * np.outer(x - x0, np.arange(nu)) / (x1 - x0))
    cv = np.cos(np.pi * np.outer(y - y0, np.arange(nv)) / (y1 - y0))
    return (cu[:, :, None] * cv[:, None, :]).reshape(len(x), nu * nv)


@njit(cache=True)
def _greedy_fit(gram, proj, prior, n_iter, gamma):
    """Greedy basis selection with residual projections kept up to date
    through the weighted Gram matrix."""
    k = len(proj)
    coef = np.zeros(k)
    norm = np.diag(gram).copy()
    tiny = 1e-12 * norm.max()
    for _ in range(n_iter):
        best = -1
        best_gain = 0.0
        for j in range(k):
            if norm[j] > tiny:
                gain = prior[j] * proj[j] * proj[j] / norm[j]
                if gain > best_gain:
                    best_gain = gain
                    best = j
        if best < 0:
            break
        step = gamma * proj[best] / norm[best]
        coef[best] += step
        for j in range(k):
            proj[j] -= step * gram[best, j]
    return coef


def interpolate_fsmr(positions, values, queries, params=FsmrParams(), window=None):
    """Fit a sparse DCT model to scattered samples and evaluate it at ``queries``.

    ``window`` is ``(x0, y0, x1, y1)`` in pixel units; the basis has one
    frequency per pixel of window extent along each axis. It defaults to the
    bounding box of sources and queries.
    """
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    values = np.asarray(values, dtype=float).reshape(-1)
    queries = np.asarray(queries, dtype=float).reshape(-1, 2)
    if window is None:
        both = np.vstack([positions, queries])
        lo, hi = both.min(axis=0), both.max(axis=0)
        hi = np.maximum(hi, lo + 1.0)
        window = (lo[0], lo[1], hi[0], hi[1])
    x0, y0, x1, y1 = window
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2

    phi = _dct_basis(positions[:, 0], positions[:, 1], window)
    w = params.rho ** np.hypot(positions[:, 0] - cx, positions[:, 1] - cy)
    weighted = phi * w[:, None]
    gram = weighted.T @ phi
    proj = values @ weighted
    nu, nv = _dct_shape(window)
    ku, kv = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    prior = params.sigma ** np.hypot(ku, kv).ravel()
    coef = _greedy_fit(gram, proj, prior, params.n_iter, params.gamma)
    return _dct_basis(queries[:, 0], queries[:, 1], window) @ coef


def resample(kind, src, queries, window=None, diagnostics=None):
    """Resample ``src`` at ``queries`` with resampler ``kind``.

    ``kind`` is a :class:`ResamplerKind` or its name. Output is clamped to
    ``[0, src.v_max]``.
    """
    if isinstance(kind, str):
        kind = ResamplerKind(kind)
    queries = np.asarray(queries, dtype=float).reshape(-1, 2)
    if diagnostics is not None:
        diagnostics.merged_duplicates += src.n_merged
    if len(queries) == 0:
        return np.empty(0)

    if kind.name == "fsmr":
        out = interpolate_fsmr(src.positions, src.values, queries, kind.fsmr, window)
    elif kind.name == "nearest":
        out = src.values[build_nearest_index(src).query(queries)]
    else:
        try:
            tri = triangulate(src)
        except DegenerateGeometryError:
            tri = None
        if tri is None:
            out = np.full(len(queries), np.nan)
            outside = np.ones(len(queries), dtype=bool)
        elif kind.name == "linear":
            out, outside = interpolate_linear(tri, src.values, queries)
        else:
            out, outside = interpolate_cubic(tri, src.values, queries)
        if outside.any():
            out[outside] = src.values[build_nearest_index(src).query(queries[outside])]
            if diagnostics is not None:
                diagnostics.nearest_fallback += int(outside.sum())
    return np.clip(out, 0.0, src.v_max)
