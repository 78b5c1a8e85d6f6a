"""Figure rendering for the CLI report path.

Only this module touches matplotlib; the computational core stays
graphics-free.  Figures are written next to the CSV with the same stem so
a report directory is self-contained.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .report import RunReport, column

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 9,
    "axes.labelsize": 10,
}

TRACE_STYLES = [
    ("sigma_es", dict(color="tab:orange", lw=2.4, label=r"$\sigma^{Es}$")),
    ("sigma_el", dict(color="tab:green", lw=1.2, label=r"$\sigma^{El}$")),
    ("sigma_co", dict(color="purple", lw=1.2, label=r"$\sigma^{Co}$")),
    ("sigma_fp", dict(color="tab:blue", lw=1.4, ls="--", label=r"$\sigma^{fp}$")),
    ("di_ab", dict(color="black", lw=1.0, ls="-.", label=r"$\dot I_{A:B}$")),
]


def _shade_intervals(ax, intervals):
    for lo, hi, flag in intervals:
        if flag:
            ax.axvspan(lo, hi, color="0.82", zorder=0)


def _mark_infinities(ax, x, y, color):
    """Divergent samples get explicit markers instead of silently vanishing."""
    up = np.isposinf(y)
    down = np.isneginf(y)
    if up.any():
        ax.plot(x[up], np.zeros(up.sum()), marker="^", ls="none", color=color,
                markersize=6, clip_on=False)
    if down.any():
        ax.plot(x[down], np.zeros(down.sum()), marker="v", ls="none", color=color,
                markersize=6, clip_on=False)


def render_trace_figures(report: RunReport, outdir, stem: str) -> list[str]:
    outdir = Path(outdir)
    gt = column(report, "gt")
    written = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name, style in TRACE_STYLES:
            vals = column(report, name)
            ax.plot(gt, vals, **style)
            _mark_infinities(ax, gt, vals, style["color"])
        ax.set_xlabel(r"$gt$")
        ax.set_ylabel("entropy production rate")
        ax.legend(ncol=3)
        ax.set_title(f"{report.scenario.name}: entropy production rates")
        path = outdir / f"{stem}_entropy_rates.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path.name)

        fig, ax = plt.subplots()
        ax.plot(gt, column(report, "di_ab"), color="tab:orange", lw=1.2,
                label=r"$\dot I_{A:B}$")
        ax.plot(gt, column(report, "edot_int"), color="tab:blue", lw=1.2,
                label=r"$\dot E_\mathrm{int}$")
        ax.plot(gt, column(report, "pdot_a"), color="tab:red", lw=0.9, alpha=0.7,
                label=r"$\dot p_A$")
        ax.set_xlabel(r"$gt$")
        ax.set_ylabel("rate")
        ax.legend()
        ax.set_title(f"{report.scenario.name}: correlation and energy flows")
        path = outdir / f"{stem}_flows.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path.name)

        fig, ax = plt.subplots()
        for name, label in (("gamma1", r"$\gamma_1$"), ("gamma2", r"$\gamma_2$"),
                            ("gamma3", r"$\gamma_3$"), ("big_gamma", r"$\Gamma$")):
            ax.plot(gt, column(report, name), lw=1.0, label=label)
        ax.set_xlabel(r"$gt$")
        ax.set_ylabel("rate coefficient")
        ax.legend(ncol=4)
        ax.set_title(f"{report.scenario.name}: generator rates")
        path = outdir / f"{stem}_rates.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path.name)
    return written


def render_divisibility_figures(report: RunReport, outdir, stem: str) -> list[str]:
    outdir = Path(outdir)
    gt = column(report, "gt")
    smin = column(report, "sigma_min")
    smap = column(report, "sigma_map")
    intervals = report.intervals.get("p_div", [])
    written = []
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        _shade_intervals(ax, intervals)
        ax.plot(gt, smin, color="tab:red", lw=1.2, label=r"$\sigma^{fp}_{\min}$")
        ax.axhline(0.0, color="0.4", lw=0.6)
        ax.set_xlabel(r"$gt$")
        ax.set_ylabel("minimum entropy production rate")
        ax.legend()
        ax.set_title(f"{report.scenario.name}: state-minimised rate "
                     "(shaded: P-divisible)")
        path = outdir / f"{stem}_sigma_min.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path.name)

        finite = smap[np.isfinite(smap)]
        fin_min = smin[np.isfinite(smin)]
        fig, ax = plt.subplots()
        _shade_intervals(ax, intervals)
        ax.plot(gt, smin, color="tab:red", lw=1.0, label=r"$\sigma^{fp}_{\min}$")
        ax.plot(gt, smap, color="tab:blue", lw=1.0, ls="--", label=r"$\sigma_\mathrm{map}$")
        _mark_infinities(ax, gt, smap, "tab:blue")
        ax.axhline(0.0, color="0.4", lw=0.6)
        if finite.size and fin_min.size and finite.min() < -10.0 * max(1e-12, np.abs(fin_min).max()):
            ax.set_yscale("symlog", linthresh=max(1e-8, float(np.abs(finite).min()) + 1e-12))
        ax.set_xlabel(r"$gt$")
        ax.set_ylabel("entropy production rate")
        ax.legend()
        ax.set_title(f"{report.scenario.name}: map-level rate vs P-divisibility")
        path = outdir / f"{stem}_sigma_map.png"
        fig.savefig(path, bbox_inches="tight")
        plt.close(fig)
        written.append(path.name)
    return written


def render_figures(report: RunReport, outdir, stem: str) -> list[str]:
    if report.kind == "trace":
        return render_trace_figures(report, outdir, stem)
    return render_divisibility_figures(report, outdir, stem)
