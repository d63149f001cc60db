"""Brute-force oracle checks runnable from the command line.

Each suite returns a list of ``(case, ok, details)`` tuples; ``details`` is a
JSON-serializable dict describing the case.
"""
import json
import sys
import time

import numpy as np

from .geometry import alignment_rotation, great_circle_distance, rotate
from .image import ImageBuffer
from .pipeline import VarConfig, classical_resample, var_resample
from .projections import ProjectionFormat, from_sphere, pixel_centers, to_sphere
from .resamplers import MeshSamples, resample
from .synthetic import default_seed


def index_image(fmt):
    """Image whose value at each pixel is its row-major index; resampling it
    with ``nearest`` reveals which source sample was picked."""
    n = fmt.width * fmt.height
    return ImageBuffer(np.arange(n, dtype=float).reshape(fmt.height, fmt.width), float(n))


def spherical_nearest_rate(out, src, tar):
    """Fraction of target pixels whose chosen source sample (read from an index
    image) is a great-circle nearest source sample, ties included."""
    s = to_sphere(pixel_centers(src), src)
    t = to_sphere(pixel_centers(tar), tar)
    chosen = out.data.ravel().astype(np.int64)
    hits = 0
    for lo in range(0, len(t), 512):
        d = great_circle_distance(t[lo : lo + 512, None, :], s[None, :, :])
        dmin = d.min(axis=1)
        picked = d[np.arange(len(d)), chosen[lo : lo + 512]]
        hits += int(np.sum(picked <= dmin * (1 + 1e-9)))
    return hits / len(t)


def suite_nearest_oracle(threads=None):
    src, tar = ProjectionFormat.erp(64), ProjectionFormat.cmp(16)
    idx = index_image(src)
    out = var_resample(idx, src, tar, VarConfig("nearest", block_size=4, threads=threads))
    var_rate = spherical_nearest_rate(out, src, tar)
    classical = spherical_nearest_rate(classical_resample(idx, src, tar, "nearest"), src, tar)
    return [("var-nearest >= 0.99", var_rate >= 0.99,
             {"src": str(src), "tar": str(tar), "var_rate": var_rate, "classical_rate": classical})]


def random_filter_config(rng):
    kind = rng.choice(["nearest", "linear", "cubic", "fsmr"])
    if rng.random() < 0.5:
        src = ProjectionFormat.erp(int(rng.choice([32, 48, 64])))
        tar = ProjectionFormat.cmp(int(rng.choice([8, 12, 16])))
    else:
        src = ProjectionFormat.cmp(int(rng.choice([8, 12, 16])))
        tar = ProjectionFormat.erp(int(rng.choice([32, 48, 64])))
    # keep ERP blocks within 90 degrees of longitude
    max_block = 16 if tar.kind == "cmp" else max(4, tar.width // 4)
    return {
        "kind": str(kind),
        "src": [src.kind, src.width, src.height],
        "tar": [tar.kind, tar.width, tar.height],
        "block": int(rng.integers(4, max_block + 1)),
        "margin": float(rng.choice([0.0, 1.0, 2.5, 4.0])),
        "seed": int(rng.integers(0, 2**31)),
    }


def filter_equivalence(case):
    src = ProjectionFormat(*case["src"])
    tar = ProjectionFormat(*case["tar"])
    rng = np.random.default_rng(case["seed"])
    img = ImageBuffer(rng.uniform(0, 255, (src.height, src.width)))
    cfg = VarConfig(case["kind"], case["block"], case["margin"], threads=1)
    fast = var_resample(img, src, tar, cfg)
    full = var_resample(img, src, tar, cfg, full_projection=True)
    return bool(np.array_equal(fast.data, full.data))


def suite_candidate_filter(n_cases=6, seed=None):
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    results = []
    for k in range(n_cases):
        case = random_filter_config(rng)
        results.append((f"filter-equivalence #{k}", filter_equivalence(case), case))
    return results


def cubic_convergence(spacings=(0.2, 0.1, 0.05), seed=0):
    """Max interior error of the cubic resampler for ``sin(u) cos(v)`` sampled on
    jittered grids of the given spacings over ``[0, 2]^2``."""
    rng = np.random.default_rng(seed)
    errors = []
    q = rng.uniform(0.5, 1.5, (400, 2))
    truth = np.sin(q[:, 0]) * np.cos(q[:, 1])
    for h in spacings:
        g = np.arange(0, 2 + h / 2, h)
        uu, vv = np.meshgrid(g, g)
        pts = np.column_stack([uu.ravel(), vv.ravel()])
        pts = pts + rng.uniform(-0.25 * h, 0.25 * h, pts.shape)
        vals = np.sin(pts[:, 0]) * np.cos(pts[:, 1])
        # offset keeps values inside the clamp range
        mesh = MeshSamples(pts, vals + 2.0, v_max=4.0)
        out = resample("cubic", mesh, q) - 2.0
        errors.append(float(np.max(np.abs(out - truth))))
    return errors


def suite_convergence():
    spacings = (0.2, 0.1, 0.05)
    errors = cubic_convergence(spacings)
    scaled = [e / h**2 for e, h in zip(errors, spacings)]
    # error <= C h^2, with C taken from the coarsest spacing (slack 2x)
    ok = all(b < a for a, b in zip(errors, errors[1:])) and max(scaled) <= 2 * scaled[0]
    return [("cubic convergence", ok, {"spacings": spacings, "errors": errors, "error_over_h2": scaled})]


def suite_geometry(n=10000, seed=None):
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    s = rng.normal(size=(n, 3))
    s /= np.linalg.norm(s, axis=1, keepdims=True)
    worst = max(
        float(np.linalg.norm(rotate(alignment_rotation(v), v) - [1.0, 0.0, 0.0])) for v in s
    )
    results = [("alignment rotation", worst < 1e-10, {"max_error": worst})]
    for fmt in (ProjectionFormat.erp(512), ProjectionFormat.cmp(96)):
        p = rng.uniform(0.01, 0.99, (n, 2)) * [fmt.width, fmt.height]
        back = from_sphere(to_sphere(p, fmt), fmt)
        err = float(np.max(np.abs(back - p)))
        results.append((f"{fmt.kind} round trip", err < 1e-9, {"format": str(fmt), "max_error": err}))
    return results


SUITES = {
    "geometry": suite_geometry,
    "nearest-oracle": suite_nearest_oracle,
    "candidate-filter": suite_candidate_filter,
    "convergence": suite_convergence,
}


def run_suites(names=None, out=sys.stdout):
    names = names or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    failed = 0
    for name in names:
        t0 = time.perf_counter()
        for case, ok, details in SUITES[name]():
            status = "PASS" if ok else "FAIL"
            print(f"{status}  {name}: {case}", file=out)
            if not ok:
                failed += 1
                print(json.dumps(details, default=float), file=out)
        print(f"      {name} finished in {time.perf_counter() - t0:.1f} s", file=out)
    print(f"{'all suites passed' if not failed else f'{failed} case(s) failed'}", file=out)
    return 1 if failed else 0
