#!/usr/bin/env python3
"""
SVG figures
Curves coloured per signed address, optional grey iterated preimages of the
real axis and the critical points in view. Output is deterministic for a
fixed seed: the SVG id salt comes from the seed and no date is embedded.
"""

import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_VIEW = (-3.0, 3.0, -3.0, 3.0)
GRID = 400
PREIMAGE_DEPTH = 3


def view_box(curves, margin=0.25, limit=6.0):
    """Bounding box of the curve vertices with |z| <= limit"""
    points = [c.z[np.abs(c.z) <= limit] for c in curves]
    points = np.concatenate(points) if points else np.array([], dtype=complex)
    if len(points) == 0:
        return DEFAULT_VIEW
    xmin, xmax = points.real.min(), points.real.max()
    ymin, ymax = points.imag.min(), points.imag.max()
    size = max(xmax - xmin, ymax - ymin, 1.0)
    return (xmin - margin * size, xmax + margin * size, ymin - margin * size, ymax + margin * size)


def _preimage_layer(ax, model, box):
    x = np.linspace(box[0], box[1], GRID)
    y = np.linspace(box[2], box[3], GRID)
    X, Y = np.meshgrid(x, y)
    Z = X + 1j * Y
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(PREIMAGE_DEPTH):
            Z = model.evaluate_array(Z)
            ax.contour(X, Y, np.ma.masked_invalid(Z.imag), levels=[0.0], colors="0.75",
                       linewidths=0.5)


def render_svg(model, curves, path, seed=0, box=None, preimages=False, title=None):
    plt.rcParams["svg.hashsalt"] = str(seed)
    box = box or view_box(curves)
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        if preimages:
            _preimage_layer(ax, model, box)
        colours = plt.get_cmap("tab10")
        for i, curve in enumerate(curves):
            ax.plot(curve.z.real, curve.z.imag, color=colours(i % 10), linewidth=1.2,
                    label=f"{curve.signed.addr} {curve.signed.sign.value}")
        if curves:
            critical = model.critical_points_in(box)
            if critical:
                ax.plot([c.real for c in critical], [c.imag for c in critical], "o",
                        color="black", markersize=3)
            ax.legend(loc="upper left", fontsize="x-small")
        ax.set_xlim(box[0], box[1])
        ax.set_ylim(box[2], box[3])
        ax.set_aspect("equal")
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        if title:
            ax.set_title(title)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.debug("rendered %d curves to %s", len(curves), path)
    return path
