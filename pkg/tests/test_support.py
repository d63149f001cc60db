import numpy as np
import pytest

from sphrs.plotting import render_report
from sphrs.projections import ProjectionFormat
from sphrs.selftest import SUITES, run_suites
from sphrs.synthetic import HarmonicField, harmonic_suite


def test_field_is_resolution_independent():
    f = HarmonicField(4, max_degree=16)
    lo = f.render(ProjectionFormat.erp(64)).data
    hi = f.render(ProjectionFormat.erp(128)).data
    assert 20 < lo.min() and hi.max() < 235
    # the same field, not a rescaled one: means agree closely
    assert lo.mean() == pytest.approx(hi.mean(), abs=1.0)


def test_suite_seeding(monkeypatch):
    fmt = ProjectionFormat.erp(32)
    monkeypatch.setenv("SPHRS_SEED", "7")
    a = harmonic_suite(fmt, 2)
    b = harmonic_suite(fmt, 2, seed=7)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    assert not np.array_equal(a[0].data, a[1].data)


def test_render_report(tmp_path):
    from sphrs.cli import RunRecord

    recs = [RunRecord("img", "64x32", "48x32", k, v, 8, 30.0 + i, 31.0 + i, 0.9, 0.1 * i)
            for i, (k, v) in enumerate([("linear", "on"), ("linear", "off"), ("cubic", "on")])]
    paths = render_report(recs, tmp_path / "out")
    assert [p.name for p in paths] == ["quality.png", "timing.png"]
    assert all(p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n" for p in paths)


@pytest.mark.parametrize("name", sorted(SUITES))
def test_selftest_suites(name, capsys):
    assert run_suites([name]) == 0
