"""Summary figures for round-trip benchmark runs."""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PANELS = [("psnr_db", "PSNR [dB]"), ("wspsnr_db", "WS-PSNR [dB]"), ("ssim", "SSIM")]
COLORS = {"off": "#a4bccb", "on": "#eb868d"}


def _average(records, key):
    table = {}
    for rec in records:
        table.setdefault((rec.resampler, rec.var), []).append(getattr(rec, key))
    return {k: float(np.mean(v)) for k, v in table.items()}


def quality_figure(records):
    resamplers = list(dict.fromkeys(r.resampler for r in records))
    flags = [f for f in ("off", "on") if any(r.var == f for r in records)]
    fig, axes = plt.subplots(1, len(PANELS), figsize=(4 * len(PANELS), 3.2))
    x = np.arange(len(resamplers))
    width = 0.8 / max(len(flags), 1)
    for ax, (key, label) in zip(axes, PANELS):
        avg = _average(records, key)
        for i, flag in enumerate(flags):
            vals = [avg.get((r, flag), np.nan) for r in resamplers]
            ax.bar(x + (i - (len(flags) - 1) / 2) * width, vals, width,
                   label=f"VAR {flag}", color=COLORS[flag], edgecolor="k", linewidth=0.5)
        ax.set_xticks(x)
        ax.set_xticklabels(resamplers)
        ax.set_ylabel(label)
        finite = [v for v in avg.values() if np.isfinite(v)]
        if finite and key != "ssim":
            ax.set_ylim(min(finite) - 3, max(finite) + 2)
        ax.grid(axis="y", alpha=0.3)
    axes[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def timing_figure(records):
    avg = _average(records, "seconds")
    labels = [f"{r}\nVAR {v}" for r, v in avg]
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(avg)), 3))
    ax.bar(range(len(avg)), list(avg.values()), color=[COLORS[v] for _, v in avg],
           edgecolor="k", linewidth=0.5)
    ax.set_xticks(range(len(avg)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("time [s]")
    fig.tight_layout()
    return fig


def render_report(records, out_dir):
    """Write quality and timing figures for ``records``; returns the file paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, make in (("quality.png", quality_figure), ("timing.png", timing_figure)):
        fig = make(records)
        path = out_dir / name
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
