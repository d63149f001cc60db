"""Command-line front end: ``sphrs convert | roundtrip | metrics | selftest``."""
import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .image import ImageBuffer
from .io import ImageFormatError, load_channels, load_image, save_channels, save_image
from .pipeline import VarConfig, classical_resample, roundtrip, var_resample
from .projections import ProjectionFormat, default_face_size
from .resamplers import KINDS, ResamplerKind

CSV_FIELDS = ["image", "src_res", "tar_res", "resampler", "var", "block",
              "psnr_db", "wspsnr_db", "ssim", "seconds"]


@dataclass
class RunRecord:
    image: str
    src_res: str
    tar_res: str
    resampler: str
    var: str
    block: int
    psnr_db: float
    wspsnr_db: float
    ssim: float
    seconds: float

    def row(self):
        d = asdict(self)
        for key in ("psnr_db", "wspsnr_db"):
            d[key] = f"{d[key]:.4f}"
        d["ssim"] = f"{d['ssim']:.6f}"
        d["seconds"] = f"{d['seconds']:.3f}"
        return d


class CliError(Exception):
    pass


def _fmt_for(kind, img_or_size, face_size=None, erp_width=None):
    """Projection format of the given kind sized for an image of the other kind."""
    w, h = img_or_size
    if kind == "erp":
        if erp_width:
            return ProjectionFormat.erp(erp_width)
        # roughly as many samples as a 3x2 cubemap: 2*H**2 = 6*N**2
        n = h // 2
        return ProjectionFormat.erp(2 * int(round(n * np.sqrt(3))))
    return ProjectionFormat.cmp(face_size or default_face_size(w, h))


def _source_format(kind, img):
    try:
        return ProjectionFormat(kind, img.width, img.height)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _target_format(args, src):
    if args.to == args.src_kind:
        return src
    return _fmt_for(args.to, (src.width, src.height), args.face_size, getattr(args, "erp_width", None))


def _config(args, resampler):
    return VarConfig(ResamplerKind(resampler), args.block_size, args.margin, args.threads)


def _convert_channel(img, src, tar, cfg, var_on):
    if var_on:
        return var_resample(img, src, tar, cfg)
    return classical_resample(img, src, tar, cfg.resampler, block_size=cfg.block_size,
                              margin=cfg.margin, threads=cfg.threads)


def _load(args):
    channels = load_channels(args.input) if args.color else [load_image(args.input)]
    if args.downscale > 1:
        channels = [c.downscale(args.downscale) for c in channels]
    return channels


def cmd_convert(args):
    channels = _load(args)
    src = _source_format(args.src_kind, channels[0])
    tar = _target_format(args, src)
    cfg = _config(args, args.resampler)
    t0 = time.perf_counter()
    out = [_convert_channel(c, src, tar, cfg, args.var == "on") for c in channels]
    elapsed = time.perf_counter() - t0
    save_channels(out, args.output)
    print(f"{src} -> {tar} [{args.resampler}, var {args.var}] in {elapsed:.3f} s")
    return 0


def _parse_sweep(items):
    sweep = {}
    for item in items or []:
        key, _, values = item.partition("=")
        if key != "resampler" or not values:
            raise CliError(f"unsupported sweep {item!r}; use resampler=a,b,...")
        sweep[key] = values.split(",")
    return sweep


def _inputs(args):
    if args.synthetic:
        from .synthetic import HarmonicField

        fmt = ProjectionFormat.erp(args.width)
        base = args.seed if args.seed is not None else int(os.environ.get("SPHRS_SEED", "0"))
        return [(f"harmonic-{base + k}", [HarmonicField(base + k, max_degree=args.width // 4).render(fmt)])
                for k in range(args.synthetic)]
    if not args.input:
        raise CliError("roundtrip needs --in or --synthetic N")
    return [(Path(args.input).stem, _load(args))]


def run_roundtrips(args):
    resamplers = _parse_sweep(args.sweep).get("resampler", [args.resampler])
    for r in resamplers:
        if r not in KINDS:
            raise CliError(f"unknown resampler {r!r}")
    var_flags = args.var.split(",")
    for v in var_flags:
        if v not in ("on", "off"):
            raise CliError(f"--var takes on/off, got {v!r}")
    records = []
    for name, channels in _inputs(args):
        src = _source_format(args.src_kind, channels[0])
        tar = _target_format(args, src)
        for r in resamplers:
            for v in var_flags:
                cfg = _config(args, r)
                t0 = time.perf_counter()
                pairs = [roundtrip(c, src, tar, cfg, "var" if v == "on" else "classical") for c in channels]
                elapsed = time.perf_counter() - t0
                back = [p[1] for p in pairs]
                ref = channels
                rec = RunRecord(
                    image=name,
                    src_res=f"{src.width}x{src.height}",
                    tar_res=f"{tar.width}x{tar.height}",
                    resampler=r,
                    var=v,
                    block=cfg.block_size,
                    psnr_db=float(np.mean([metrics.psnr(a, b) for a, b in zip(ref, back)])),
                    wspsnr_db=float(np.mean([metrics.ws_psnr(a, b, src) for a, b in zip(ref, back)])),
                    ssim=float(np.mean([metrics.ssim(a, b) for a, b in zip(ref, back)])),
                    seconds=max(elapsed, 1e-9),
                )
                records.append(rec)
                if args.save_dir:
                    d = Path(args.save_dir)
                    d.mkdir(parents=True, exist_ok=True)
                    stem = f"{name}_{r}_var-{v}"
                    save_channels([p[0] for p in pairs], d / f"{stem}_{args.to}.png")
                    save_channels(back, d / f"{stem}_back.png")
    return records


def cmd_roundtrip(args):
    records = run_roundtrips(args)
    if args.csv:
        path = Path(args.csv)
        new = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="") as fh:
            writer = csv.DictWriter(fh, CSV_FIELDS)
            if new:
                writer.writeheader()
            for rec in records:
                writer.writerow(rec.row())
    if args.json:
        print(json.dumps([asdict(r) for r in records], indent=2))
    else:
        writer = csv.DictWriter(sys.stdout, CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec.row())
    if args.figures:
        from .plotting import render_report

        for path in render_report(records, args.figures):
            print(f"figure: {path}", file=sys.stderr)
    return 0


def cmd_metrics(args):
    ref = load_image(args.ref)
    test = load_image(args.input)
    fmt = _source_format(args.src_kind, ref)
    result = {
        "psnr_db": metrics.psnr(ref, test),
        "wspsnr_db": metrics.ws_psnr(ref, test, fmt),
        "ssim": metrics.ssim(ref, test),
    }
    if args.json:
        print(json.dumps(result))
    else:
        for key, val in result.items():
            print(f"{key}\t{val:.6f}")
    return 0


def cmd_selftest(args):
    from .selftest import run_suites

    return run_suites(args.suite)


def build_parser():
    p = argparse.ArgumentParser(prog="sphrs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_from=True):
        sp.add_argument("--in", dest="input", help="input image (PNG or PGM)")
        sp.add_argument("--from", dest="src_kind", choices=["erp", "cmp"], required=need_from,
                        default=None if need_from else "erp")
        sp.add_argument("--to", choices=["erp", "cmp"], default="cmp")
        sp.add_argument("--resampler", choices=KINDS, default="cubic")
        sp.add_argument("--block-size", type=int, default=None)
        sp.add_argument("--margin", type=float, default=4)
        sp.add_argument("--face-size", type=int, default=None)
        sp.add_argument("--erp-width", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--color", action="store_true", help="process color channels separately")
        sp.add_argument("--downscale", type=int, default=1, metavar="F",
                        help="box-filter the input by an integer factor first")

    c = sub.add_parser("convert", help="convert between projection formats")
    common(c)
    c.add_argument("--out", dest="output", required=True)
    c.add_argument("--var", choices=["on", "off"], default="on")
    c.set_defaults(func=cmd_convert)

    r = sub.add_parser("roundtrip", help="src -> tar -> src with quality metrics")
    common(r, need_from=False)
    r.add_argument("--var", default="on", help="on, off or on,off")
    r.add_argument("--sweep", action="append", help="resampler=nearest,linear,...")
    r.add_argument("--csv", help="append result rows to this CSV file")
    r.add_argument("--json", action="store_true", help="print JSON instead of CSV")
    r.add_argument("--save-dir", help="write intermediate and reconstructed images here")
    r.add_argument("--figures", help="render summary figures into this directory")
    r.add_argument("--synthetic", type=int, default=0, help="use N synthetic harmonic images")
    r.add_argument("--width", type=int, default=256, help="ERP width of synthetic images")
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=cmd_roundtrip)

    m = sub.add_parser("metrics", help="PSNR, WS-PSNR and SSIM of two images")
    m.add_argument("--ref", required=True)
    m.add_argument("--in", dest="input", required=True)
    m.add_argument("--from", dest="src_kind", choices=["erp", "cmp"], default="erp")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_metrics)

    s = sub.add_parser("selftest", help="run the brute-force oracle suites")
    s.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ImageFormatError, FileNotFoundError, ValueError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"sphrs: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
