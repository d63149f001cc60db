import numpy as np
import pytest

from sphrs.image import ImageBuffer
from sphrs.metrics import ws_psnr
from sphrs.pipeline import (
    BlockSpec,
    SourceCloud,
    VarConfig,
    _viewport,
    classical_resample,
    iter_blocks,
    roundtrip,
    select_candidates,
    var_resample,
)
from sphrs.projections import ProjectionFormat, pixel_centers, to_sphere
from sphrs.resamplers import Diagnostics, FsmrParams, ResamplerKind
from sphrs.selftest import filter_equivalence, index_image, random_filter_config, spherical_nearest_rate
from sphrs.synthetic import HarmonicField

ERP = ProjectionFormat.erp(64)
CMP = ProjectionFormat.cmp(16)
KINDS = ["nearest", "linear", "cubic", "fsmr"]


def smooth(fmt, degree=8, seed=3):
    return HarmonicField(seed, max_degree=degree).render(fmt)


def test_config_defaults():
    assert VarConfig("cubic").block_size == 32
    assert VarConfig("fsmr").block_size == 8
    with pytest.raises(ValueError):
        VarConfig("cubic", block_size=2)
    with pytest.raises(ValueError):
        VarConfig("cubic", margin=-1)


@pytest.mark.parametrize("fmt, size", [(ERP, 32), (ERP, 24), (CMP, 8), (CMP, 12), (ProjectionFormat.cmp(10), 32)])
def test_blocks_tile_canvas(fmt, size):
    cover = np.zeros((fmt.height, fmt.width), int)
    n = fmt.face_size if fmt.kind == "cmp" else None
    for b in iter_blocks(fmt, size):
        cover[b.y0 : b.y0 + b.bh, b.x0 : b.x0 + b.bw] += 1
        if n:
            assert b.x0 // n == (b.x0 + b.bw - 1) // n
            assert b.y0 // n == (b.y0 + b.bh - 1) // n
    assert (cover == 1).all()


def test_viewport_centers_block():
    block = BlockSpec(8, 8, 8, 8)
    vp = _viewport(block, ERP, margin=4)
    # the block center projects to the optical axis
    c = vp.plane_targets.mean(axis=0)
    assert np.abs(c).max() < vp.pitch
    u0, v0, u1, v1 = vp.bbox
    assert u0 < vp.plane_targets[:, 0].min() - 3.9 * vp.pitch
    assert v1 > vp.plane_targets[:, 1].max() + 3.9 * vp.pitch


def test_hemisphere_block_rejected():
    with pytest.raises(ValueError, match="hemisphere"):
        var_resample(smooth(ERP), ERP, ProjectionFormat.erp(32), VarConfig("linear", block_size=17))


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("mode", ["var", "classical"])
def test_constant_image_round_trip(kind, mode):
    img = ImageBuffer.full(64, 32, 123.0)
    cfg = VarConfig(ResamplerKind(kind, FsmrParams(n_iter=200)), block_size=8)
    mid, back = roundtrip(img, ERP, CMP, cfg, mode)
    np.testing.assert_allclose(mid.data, 123.0, atol=1e-6)
    np.testing.assert_allclose(back.data, 123.0, atol=1e-6)


def test_candidate_filter_matches_full_projection():
    rng = np.random.default_rng(11)
    for _ in range(20):
        case = random_filter_config(rng)
        assert filter_equivalence(case), case


def test_candidates_cover_bbox():
    img = smooth(ERP)
    cloud = SourceCloud(img, ERP)
    vp = _viewport(BlockSpec(0, 0, 8, 8), CMP, margin=4)
    idx, plane = select_candidates(cloud, vp.R, vp.bbox)
    assert len(idx) > 64 and np.all(np.diff(idx) > 0)
    u0, v0, u1, v1 = vp.bbox
    assert plane[:, 0].min() >= u0 and plane[:, 1].max() <= v1


def test_nearest_matches_spherical_oracle():
    src, tar = ProjectionFormat.erp(64), ProjectionFormat.cmp(16)
    out = var_resample(index_image(src), src, tar, VarConfig("nearest", block_size=4))
    assert spherical_nearest_rate(out, src, tar) >= 0.99


def test_threads_are_deterministic():
    img = smooth(ERP)
    a = var_resample(img, ERP, CMP, VarConfig("cubic", block_size=8, threads=1))
    b = var_resample(img, ERP, CMP, VarConfig("cubic", block_size=8, threads=8))
    assert np.array_equal(a.data, b.data)


def test_erp_seam_is_continuous():
    cmp_img = var_resample(smooth(ERP, 6), ERP, CMP, VarConfig("cubic", block_size=8))
    out = var_resample(cmp_img, CMP, ERP, VarConfig("cubic", block_size=8)).data
    seam = np.abs(out[:, 0] - out[:, -1])
    interior = np.abs(np.diff(out, axis=1))
    assert seam.max() <= 1.5 * interior.max()


def test_classical_seam_is_continuous():
    cmp_img = classical_resample(smooth(ERP, 6), ERP, CMP, "cubic")
    out = classical_resample(cmp_img, CMP, ERP, "cubic").data
    assert np.abs(out[:, 0] - out[:, -1]).max() <= 1.5 * np.abs(np.diff(out, axis=1)).max()


def test_quality_improves_with_resolution():
    field = HarmonicField(5, max_degree=12)
    scores = []
    for w in (64, 128, 256):
        src = ProjectionFormat.erp(w)
        tar = ProjectionFormat.cmp(w // 4)
        img = field.render(src)
        scores.append(ws_psnr(img, roundtrip(img, src, tar, VarConfig("cubic", block_size=8))[1], src))
    assert scores[0] < scores[1] < scores[2]


def test_source_domain_nearest_is_exact():
    src, tar = ProjectionFormat.erp(64), ProjectionFormat.cmp(16)
    out = classical_resample(index_image(src), src, tar, "nearest", domain="source")
    assert spherical_nearest_rate(out, src, tar) == 1.0
    with pytest.raises(ValueError):
        classical_resample(index_image(src), src, tar, "fsmr", domain="source")


def test_size_mismatch_rejected():
    with pytest.raises(ValueError):
        var_resample(ImageBuffer.full(32, 16, 1.0), ERP, CMP, VarConfig("linear"))


def test_diagnostics_are_collected():
    diag = Diagnostics()
    var_resample(smooth(ERP), ERP, CMP, VarConfig("linear", block_size=8, margin=0), diagnostics=diag)
    assert diag.nearest_fallback > 0
