"""Projection-format conversion with and without viewport-adaptive resampling.

Classical conversion (``var off``) builds one mesh for the whole image: every
source pixel center is carried to the target image plane and the resampler is
queried at the target pixel centers. Viewport-adaptive conversion (``var on``)
splits the target into blocks; each block is resampled on the plane tangent to
the sphere at the block center, after rotating that center onto the optical
axis of a virtual perspective camera.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .geometry import alignment_rotation, rotate
from .image import ImageBuffer
from .projections import (
    EPS_FRONT,
    FACE_LAYOUT,
    ProjectionFormat,
    from_sphere,
    perspective_project,
    pixel_centers,
    to_sphere,
)
from .resamplers import Diagnostics, MeshSamples, ResamplerKind, resample

__all__ = [
    "BlockSpec",
    "ImageBuffer",
    "VarConfig",
    "classical_resample",
    "iter_blocks",
    "roundtrip",
    "select_candidates",
    "var_resample",
]

DEFAULT_BLOCK = {"nearest": 32, "linear": 32, "cubic": 32, "fsmr": 8}
DEFAULT_MARGIN = 4


@dataclass(frozen=True)
class BlockSpec:
    x0: int
    y0: int
    bw: int
    bh: int

    @property
    def center(self):
        return np.array([self.x0 + self.bw / 2, self.y0 + self.bh / 2])

    def pixel_centers(self):
        vv, uu = np.mgrid[self.y0 : self.y0 + self.bh, self.x0 : self.x0 + self.bw]
        return np.stack([uu.ravel() + 0.5, vv.ravel() + 0.5], axis=-1)


@dataclass(frozen=True)
class VarConfig:
    resampler: ResamplerKind = field(default_factory=lambda: ResamplerKind("cubic"))
    block_size: int = None
    margin: float = DEFAULT_MARGIN
    threads: int = None

    def __post_init__(self):
        if isinstance(self.resampler, str):
            object.__setattr__(self, "resampler", ResamplerKind(self.resampler))
        if self.block_size is None:
            object.__setattr__(self, "block_size", DEFAULT_BLOCK[self.resampler.name])
        if self.block_size < 4:
            raise ValueError("block_size must be >= 4")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")


def _regions(fmt):
    """Rectangles that blocks must not straddle: whole canvas or cube faces."""
    if fmt.kind == "cmp":
        n = fmt.face_size
        return [(int(c) * n, int(r) * n, n, n) for r in (0, 1) for c in (0, 1, 2)]
    return [(0, 0, fmt.width, fmt.height)]


def iter_blocks(fmt, block_size):
    """Tile the target canvas into blocks, truncating at region edges."""
    blocks = []
    for rx, ry, rw, rh in _regions(fmt):
        for y in range(ry, ry + rh, block_size):
            for x in range(rx, rx + rw, block_size):
                blocks.append(
                    BlockSpec(x, y, min(block_size, rx + rw - x), min(block_size, ry + rh - y))
                )
    return blocks


def _check_input(img, src):
    if (img.width, img.height) != (src.width, src.height):
        raise ValueError(
            f"image is {img.width}x{img.height} but source format is {src.width}x{src.height}"
        )


def _n_threads(threads):
    return threads or os.cpu_count() or 1


def _map_blocks(fn, blocks, threads):
    n = _n_threads(threads)
    if n == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, blocks))


class SourceCloud:
    """Source pixel centers lifted to the sphere once, shared by all blocks."""

    def __init__(self, img, src):
        _check_input(img, src)
        self.fmt = src
        self.sphere = to_sphere(pixel_centers(src), src)
        self.values = img.data.ravel()
        self.v_max = img.v_max
        self._tree = None

    @property
    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.sphere)
        return self._tree


@dataclass
class _Viewport:
    R: np.ndarray
    plane_targets: np.ndarray
    pitch: float
    bbox: tuple  # (u0, v0, u1, v1) on the plane, margin included


def _viewport(block, tar, margin):
    center_sphere = to_sphere(block.center, tar)
    R = alignment_rotation(center_sphere)
    rotated = rotate(R, to_sphere(block.pixel_centers(), tar))
    if rotated[:, 0].min() <= EPS_FRONT:
        raise ValueError(f"block {block} spans more than a hemisphere of {tar}; use a smaller block size")
    targets = perspective_project(rotated)
    # plane size of one target pixel at the block center
    # quarter-pixel probes stay inside a one-pixel block and off the face edge
    c = block.center
    probes = np.array([c - [0.25, 0], c + [0.25, 0], c - [0, 0.25], c + [0, 0.25]])
    pp = perspective_project(rotate(R, to_sphere(probes, tar)))
    pitch = np.linalg.norm(pp[1] - pp[0]) + np.linalg.norm(pp[3] - pp[2])
    lo = targets.min(axis=0) - margin * pitch
    hi = targets.max(axis=0) + margin * pitch
    return _Viewport(R, targets, pitch, (lo[0], lo[1], hi[0], hi[1]))


def _in_bbox(plane, bbox):
    u0, v0, u1, v1 = bbox
    return (plane[:, 0] >= u0) & (plane[:, 0] <= u1) & (plane[:, 1] >= v0) & (plane[:, 1] <= v1)


def _project_front(rotated, bbox):
    front = rotated[:, 0] > EPS_FRONT
    plane = perspective_project(rotated[front])
    keep = _in_bbox(plane, bbox)
    return np.nonzero(front)[0][keep], plane[keep]


def select_candidates(cloud, R, bbox, full=False):
    """Source samples in front of the camera whose plane position lies in ``bbox``.

    Returns ``(indices, plane_positions)`` with indices ascending. With
    ``full=True`` every source sample is rotated and projected; otherwise a
    spherical cap around the viewing direction is looked up first. Both paths
    give identical results.
    """
    if full:
        return _project_front(rotate(R, cloud.sphere), bbox)
    u0, v0, u1, v1 = bbox
    r_max = max(np.hypot(u, v) for u in (u0, u1) for v in (v0, v1))
    # every plane point in bbox is within atan(r_max) of the viewing direction
    chord = 2 * np.sin(np.arctan(r_max) / 2) * (1 + 1e-6) + 1e-9
    view = R[0]  # R @ view == optical axis
    near = np.sort(np.asarray(cloud.tree.query_ball_point(view, chord), dtype=np.int64))
    if len(near) == 0:
        return near, np.empty((0, 2))
    idx, plane = _project_front(rotate(R, cloud.sphere[near]), bbox)
    return near[idx], plane


def _var_block(block, cloud, tar, cfg, full=False, diagnostics=None):
    vp = _viewport(block, tar, cfg.margin)
    idx, plane = select_candidates(cloud, vp.R, vp.bbox, full=full)
    grow = 1.0
    while len(idx) == 0:
        # a tight window over a coarse source can miss every sample
        u0, v0, u1, v1 = vp.bbox
        d = grow * vp.pitch
        vp.bbox = (u0 - d, v0 - d, u1 + d, v1 + d)
        idx, plane = select_candidates(cloud, vp.R, vp.bbox, full=full)
        grow *= 2
    origin = np.array(vp.bbox[:2])
    local_src = (plane - origin) / vp.pitch
    local_tar = (vp.plane_targets - origin) / vp.pitch
    window = (0.0, 0.0, (vp.bbox[2] - vp.bbox[0]) / vp.pitch, (vp.bbox[3] - vp.bbox[1]) / vp.pitch)
    mesh = MeshSamples(local_src, cloud.values[idx], cloud.v_max)
    return resample(cfg.resampler, mesh, local_tar, window=window, diagnostics=diagnostics)


def var_resample(img, src, tar, cfg, full_projection=False, diagnostics=None):
    """Viewport-adaptive conversion of ``img`` from format ``src`` to ``tar``."""
    if isinstance(cfg, (str, ResamplerKind)):
        cfg = VarConfig(cfg)
    cloud = SourceCloud(img, src)
    if not full_projection:
        cloud.tree  # build once before worker threads start
    blocks = iter_blocks(tar, cfg.block_size)
    out = np.full((tar.height, tar.width), np.nan)

    def work(block):
        diag = Diagnostics()
        return _var_block(block, cloud, tar, cfg, full_projection, diag), diag

    for block, (vals, diag) in zip(blocks, _map_blocks(work, blocks, cfg.threads)):
        out[block.y0 : block.y0 + block.bh, block.x0 : block.x0 + block.bw] = vals.reshape(
            block.bh, block.bw
        )
        if diagnostics is not None:
            diagnostics.nearest_fallback += diag.nearest_fallback
            diagnostics.merged_duplicates += diag.merged_duplicates
    return ImageBuffer(out, img.v_max)


def _global_mesh(img, src, tar):
    """Source samples carried to target pixel coordinates.

    For ERP targets, samples near the left and right edges are replicated
    across the longitude seam so the mesh wraps around.
    """
    pos = from_sphere(to_sphere(pixel_centers(src), src), tar)
    vals = img.data.ravel()
    if tar.kind == "erp":
        band = max(4.0, tar.width / 32)
        left = pos[:, 0] < band
        right = pos[:, 0] > tar.width - band
        pos = np.vstack([pos, pos[left] + [tar.width, 0], pos[right] - [tar.width, 0]])
        vals = np.concatenate([vals, vals[left], vals[right]])
    return pos, vals


def _classical_fsmr(pos, vals, v_max, tar, kind, block_size, margin, threads, diagnostics):
    tree = cKDTree(pos)
    blocks = iter_blocks(tar, block_size)

    def work(block):
        x0, y0 = block.x0 + 0.5 - margin, block.y0 + 0.5 - margin
        x1, y1 = block.x0 + block.bw - 0.5 + margin, block.y0 + block.bh - 0.5 + margin
        grow = 0.0
        while True:
            box = (x0 - grow, y0 - grow, x1 + grow, y1 + grow)
            c = [(box[0] + box[2]) / 2, (box[1] + box[3]) / 2]
            r = max(box[2] - box[0], box[3] - box[1]) / 2
            near = np.sort(np.asarray(tree.query_ball_point(c, r, p=np.inf), dtype=np.int64))
            if len(near):
                break
            grow = 2 * grow + 1.0
        mesh = MeshSamples(pos[near], vals[near], v_max)
        diag = Diagnostics()
        out = resample(kind, mesh, block.pixel_centers(), window=box, diagnostics=diag)
        return out, diag

    out = np.full((tar.height, tar.width), np.nan)
    for block, (v, diag) in zip(blocks, _map_blocks(work, blocks, threads)):
        out[block.y0 : block.y0 + block.bh, block.x0 : block.x0 + block.bw] = v.reshape(block.bh, block.bw)
        if diagnostics is not None:
            diagnostics.merged_duplicates += diag.merged_duplicates
    return out


def _source_domain(img, src, tar, kind):
    """Grid-to-mesh baseline: interpolate the source grid at target positions
    carried into the source image plane."""
    order = {"nearest": 0, "linear": 1, "cubic": 3}[kind.name]
    pos = from_sphere(to_sphere(pixel_centers(tar), tar), src)
    pad = 4
    data = img.data
    if src.kind == "erp":
        data = np.pad(data, ((0, 0), (pad, pad)), mode="wrap")
        data = np.pad(data, ((pad, pad), (0, 0)), mode="edge")
    else:
        data = np.pad(data, pad, mode="edge")
    coords = np.stack([pos[:, 1] - 0.5 + pad, pos[:, 0] - 0.5 + pad])
    if order == 0:
        # round half up so exact pixel-center hits stay put
        coords = np.floor(coords + 0.5)
    out = ndimage.map_coordinates(data, coords, order=order, mode="nearest", prefilter=order > 1)
    return np.clip(out, 0, img.v_max).reshape(tar.height, tar.width)


def classical_resample(img, src, tar, kind, domain="target", block_size=None,
                       margin=DEFAULT_MARGIN, threads=None, diagnostics=None):
    """Conversion without viewport adaptation.

    ``domain="target"`` (default) resamples in the target image plane:
    nearest, linear and cubic over one global mesh, FSMR over independent
    target blocks. ``domain="source"`` interpolates the regular source grid at
    the target positions instead (not available for FSMR).
    """
    if isinstance(kind, str):
        kind = ResamplerKind(kind)
    _check_input(img, src)
    if domain == "source":
        if kind.name == "fsmr":
            raise ValueError("source-domain baseline supports nearest, linear and cubic only")
        return ImageBuffer(_source_domain(img, src, tar, kind), img.v_max)
    if domain != "target":
        raise ValueError(f"unknown domain {domain!r}")

    pos, vals = _global_mesh(img, src, tar)
    if kind.name == "fsmr":
        out = _classical_fsmr(pos, vals, img.v_max, tar, kind, block_size or DEFAULT_BLOCK["fsmr"],
                              margin, threads, diagnostics)
    else:
        mesh = MeshSamples(pos, vals, img.v_max)
        out = resample(kind, mesh, pixel_centers(tar), diagnostics=diagnostics)
        out = out.reshape(tar.height, tar.width)
    return ImageBuffer(out, img.v_max)


def roundtrip(img, src, tar, cfg, mode="var", threads=None):
    """Convert ``src -> tar -> src``; returns ``(intermediate, reconstructed)``."""
    if isinstance(cfg, (str, ResamplerKind)):
        cfg = VarConfig(cfg)
    if threads is not None:
        cfg = VarConfig(cfg.resampler, cfg.block_size, cfg.margin, threads)
    if mode == "var":
        mid = var_resample(img, src, tar, cfg)
        back = var_resample(mid, tar, src, cfg)
    elif mode == "classical":
        opts = dict(block_size=cfg.block_size, margin=cfg.margin, threads=cfg.threads)
        mid = classical_resample(img, src, tar, cfg.resampler, **opts)
        back = classical_resample(mid, tar, src, cfg.resampler, **opts)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return mid, back
