"""Matplotlib figure rendering for the report path.

All figures use the Agg backend and strip PNG metadata so reruns of the
same configuration produce byte-identical image files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .julia import LABEL_BOUNDED, LABEL_ESCAPING, LABEL_NEAR_POLE, RasterGrid
from .orbits import OrbitRecord, RadiusLadder

_SAVEFIG = dict(dpi=100, metadata={"Software": None})

_RASTER_GRAY = {LABEL_ESCAPING: 1.0, LABEL_BOUNDED: 0.0,
                LABEL_NEAR_POLE: 0.5}


def save_raster_figure(raster: RasterGrid, path) -> None:
    flat = np.array([_RASTER_GRAY.get(c, 0.25) for c in raster.cells])
    img = flat.reshape(raster.height, raster.width)
    re_min, re_max, im_min, im_max = raster.window
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0,
              extent=(re_min, re_max, im_min, im_max), origin="upper")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def save_orbit_figure(orbit: OrbitRecord, path) -> None:
    mods = [max(v, 1e-300) for v in orbit.moduli()]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(range(len(mods)), mods, marker="o", linewidth=1)
    ax.set_xlabel("step")
    ax.set_ylabel("|z_n|")
    ax.axhline(orbit.escape_R, color="gray", linestyle="--", linewidth=0.8)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def save_cloud_figure(points, generations, path) -> None:
    xs = [z.real for z in points]
    ys = [z.imag for z in points]
    fig, ax = plt.subplots(figsize=(6, 6))
    ax.scatter(xs, ys, c=list(generations), s=6, cmap="viridis")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_aspect("equal")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def save_ladder_figure(ladder: RadiusLadder, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(range(1, len(ladder.radii) + 1), ladder.radii, marker="s")
    ax.set_xlabel("rung")
    ax.set_ylabel("radius")
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def save_residual_figure(fit_report: dict, path) -> None:
    names = sorted(fit_report)
    values = [max(fit_report[n], 1e-300) for n in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(names)), values)
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("max residual")
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)
