"""Matplotlib figures written next to the CSV outputs.

Figures are built on bare :class:`~matplotlib.figure.Figure` objects (no
pyplot state) so they can be rendered from worker code safely.
"""

import math

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

# no timestamp in SVG output; with the fixed hash salt the files are reproducible
_SVG_META = {"Date": None}


def _save(fig, path):
    import matplotlib

    FigureCanvasAgg(fig)
    with matplotlib.rc_context({"svg.hashsalt": "dsctrl", "svg.fonttype": "none"}):
        meta = _SVG_META if str(path).endswith(".svg") else None
        fig.savefig(path, metadata=meta, bbox_inches="tight")


def response_overlay(first, last, env, path, title=None):
    """First and last step responses with the settling band.

    Artists carry the SVG ids ``response-first``, ``response-last``,
    ``envelope-zmin`` and ``envelope-zmax``.
    """
    fig = Figure(figsize=(6, 4))
    ax = fig.add_subplot()
    ax.plot(first.times, first.values, color="0.55", lw=1.2, label="initial", gid="response-first")
    ax.plot(last.times, last.values, color="C0", lw=1.6, label="optimized", gid="response-last")
    ax.axhline(env.z_min, color="C3", ls="--", lw=0.8, gid="envelope-zmin")
    ax.axhline(env.z_max, color="C3", ls="--", lw=0.8, gid="envelope-zmax")
    lo = min(env.z_min, float(np.min(last.values)))
    hi = max(env.z_max, float(np.max(last.values)))
    pad = 0.15 * (hi - lo) + 0.05
    ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlim(0, last.times[-1])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("z(t)")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right", frameon=False)
    _save(fig, path)


def convergence(values, path, ylabel="best objective", xlabel="evaluation"):
    """Running-best objective against its index (log scale if all positive)."""
    fig = Figure(figsize=(6, 3.5))
    ax = fig.add_subplot()
    ys = [v for v in values if v is not None and math.isfinite(v)]
    xs = [i for i, v in enumerate(values) if v is not None and math.isfinite(v)]
    ax.step(xs, ys, where="post", color="C0")
    if ys and min(ys) > 0:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    _save(fig, path)


def benchmark_summary(records, path):
    """Two panels: initial vs final objective, and per-run wall time."""
    fig = Figure(figsize=(9, 3.8))
    ax1, ax2 = fig.subplots(1, 2)
    fi, ff, ok = [], [], []
    for r in records:
        if isinstance(r.f_initial, float) and isinstance(r.f_final, float):
            fi.append(r.f_initial)
            ff.append(r.f_final)
            ok.append(r.status == "ok")
    if fi:
        ok = np.array(ok)
        fi, ff = np.array(fi), np.array(ff)
        ax1.scatter(fi[ok], ff[ok], s=10, color="C0", label="ok")
        ax1.scatter(fi[~ok], ff[~ok], s=10, color="C3", marker="x", label="failed")
        lim = [min(fi.min(), ff.min()), max(fi.max(), ff.max())]
        ax1.plot(lim, lim, color="0.6", lw=0.8)
        ax1.legend(frameon=False)
    ax1.set_xlabel("f initial")
    ax1.set_ylabel("f final")
    times = [r.wall_time_ms for r in records]
    if times:
        ax2.hist(times, bins=min(30, max(5, len(times) // 5)), color="C2")
    ax2.set_xlabel("wall time per run [ms]")
    ax2.set_ylabel("runs")
    fig.tight_layout()
    _save(fig, path)
