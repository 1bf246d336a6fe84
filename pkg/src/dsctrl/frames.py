"""Export of per-improvement step responses (the data behind an animation)."""

import csv
from pathlib import Path

from . import plotting

INDEX_COLUMNS = ["frame", "file", "eval_index", "f", "t_r", "max_dev", "kp", "ki", "kd"]


def export_frames(frames, path, env=None, svg=True, convergence=True):
    """Write ``frame_NNNN.csv`` (columns ``t,z``) per frame plus ``index.csv``.

    ``frames`` is a sequence of ``(eval_index, x, ShapingOutcome)``.  With an
    envelope and ``svg=True`` an ``overlay.svg`` of the first and last
    responses against the band is rendered too.  Returns the written paths.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("no frames to export")
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rows = []
    for i, (eval_index, x, oc) in enumerate(frames):
        name = f"frame_{i:04d}.csv"
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "z"])
            for t, z in zip(oc.trace.times, oc.trace.values):
                w.writerow([repr(float(t)), repr(float(z))])
        written.append(out / name)
        rows.append([i, name, eval_index, repr(oc.f), repr(oc.t_r), repr(oc.max_dev),
                     *(repr(float(v)) for v in x)])
    with open(out / "index.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(INDEX_COLUMNS)
        w.writerows(rows)
    written.append(out / "index.csv")
    if env is not None and svg:
        plotting.response_overlay(frames[0][2].trace, frames[-1][2].trace, env, out / "overlay.svg")
        written.append(out / "overlay.svg")
    if convergence:
        plotting.convergence([oc.f for _, _, oc in frames], out / "convergence.png",
                             ylabel="f = t_r + lambda max_dev", xlabel="frame")
        written.append(out / "convergence.png")
    return written


def read_index(path):
    with open(Path(path) / "index.csv", newline="") as fh:
        return list(csv.DictReader(fh))
