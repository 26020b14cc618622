"""Static figures for placements and gradient-flow runs.

Figures are built on ``matplotlib.figure.Figure`` directly, so nothing here
touches pyplot's global state or needs a display.
"""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

FIG_WIDTH = 6.0
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _figure(width=FIG_WIDTH, height=None):
    fig = Figure(figsize=(width, height or width * GOLDEN))
    FigureCanvasAgg(fig)
    return fig


def _despine(ax):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight")
    return path


def plot_placement(placement, path, title=None, coefficients=None):
    """Sensors, target and sensor-target lines; marker area scales with c_i^2."""
    d = placement.d
    fig = _figure(FIG_WIDTH, FIG_WIDTH)
    ax = fig.add_subplot(1, 1, 1, projection="3d" if d == 3 else None)
    p = placement.positions
    t = placement.target
    sizes = 40.0
    if coefficients is not None:
        c2 = np.asarray(coefficients, dtype=float) ** 2
        sizes = 20.0 + 120.0 * c2 / c2.max()
    for row in p:
        seg = np.stack([t, row])
        ax.plot(*seg.T, color="0.6", lw=0.8)
    ax.scatter(*p.T, s=sizes, color="C0", label="sensors")
    ax.scatter(*t[:, None], marker="*", s=150, color="C3", label="target")
    for i, row in enumerate(p):
        ax.text(*row, f" {i}", fontsize=8)
    if d == 2:
        ax.set_aspect("equal", adjustable="datalim")
        _despine(ax)
    else:
        span = np.ptp(np.vstack([p, t]), axis=0).max() / 2 or 1.0
        mid = (np.vstack([p, t]).max(axis=0) + np.vstack([p, t]).min(axis=0)) / 2
        ax.set_xlim(mid[0] - span, mid[0] + span)
        ax.set_ylim(mid[1] - span, mid[1] + span)
        ax.set_zlim(mid[2] - span, mid[2] + span)
        ax.set_zlabel("z")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best", fontsize=8, frameon=False)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_trajectory(trajectory, path, title=None):
    """Sensor paths from start (open circle) to end (filled circle)."""
    pos = trajectory.relative + trajectory.target[None, None, :]
    d = pos.shape[-1]
    fig = _figure(FIG_WIDTH, FIG_WIDTH)
    ax = fig.add_subplot(1, 1, 1, projection="3d" if d == 3 else None)
    for i in range(pos.shape[1]):
        path_i = pos[:, i, :]
        ax.plot(*path_i.T, lw=1.0, color=f"C{i % 10}")
        ax.scatter(*path_i[0][:, None], facecolors="none", edgecolors=f"C{i % 10}", s=30)
        ax.scatter(*path_i[-1][:, None], color=f"C{i % 10}", s=30)
    ax.scatter(*trajectory.target[:, None], marker="*", s=150, color="k")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if d == 2:
        ax.set_aspect("equal", adjustable="datalim")
        _despine(ax)
    else:
        ax.set_zlabel("z")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_error(trajectory, path, title=None):
    """Optimality error and Lyapunov value against time on a log axis."""
    fig = _figure()
    ax = fig.add_subplot(1, 1, 1)
    floor = np.finfo(float).tiny
    ax.semilogy(trajectory.times, np.maximum(trajectory.error, floor), label="optimality error")
    ax.semilogy(trajectory.times, np.maximum(trajectory.V, floor), "--", label="V")
    for t in trajectory.restart_times:
        ax.axvline(t, color="0.7", lw=0.8)
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    _despine(ax)
    if title:
        ax.set_title(title)
    return _save(fig, path)
