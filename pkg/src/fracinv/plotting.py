"""Static figures: vector fields with invariant-curve overlays, trajectories, audits.

SVG output is deterministic (fixed hash salt, no date metadata) so repeated
runs produce identical bytes.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .curves import InvariantReport  # noqa: E402
from .field import PolyField2D  # noqa: E402
from .io import atomic_write  # noqa: E402

__all__ = ["quiver_grid", "plot_field", "plot_trajectory", "plot_audit", "save_svg"]

_RC = {
    "svg.hashsalt": "fracinv",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "figure.figsize": (5.0, 4.2),
}


def save_svg(fig, path):
    buf = io.StringIO()
    with plt.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return atomic_write(path, buf.getvalue())


def quiver_grid(field: PolyField2D, xmin, xmax, ymin, ymax, steps: int):
    """Field samples on a ``steps x steps`` grid as flat arrays ``x, y, dx, dy``."""
    if steps < 2 or not (xmin < xmax and ymin < ymax):
        raise ValueError("empty grid: need xmin < xmax, ymin < ymax and steps >= 2")
    xs = np.linspace(xmin, xmax, steps)
    ys = np.linspace(ymin, ymax, steps)
    X, Y = np.meshgrid(xs, ys)
    U = np.asarray(field.P.evaluate_float(X, Y), dtype=float) * np.ones_like(X)
    V = np.asarray(field.Q.evaluate_float(X, Y), dtype=float) * np.ones_like(X)
    return X.ravel(), Y.ravel(), U.ravel(), V.ravel()


def _overlay(ax, report: InvariantReport, box):
    xmin, xmax, ymin, ymax = box
    k = 0
    for cand in report.candidates:
        if cand.is_family:
            continue
        gid = f"invariant-curve-{k}"
        if cand.is_line:
            (x0, y0), (p, q) = (tuple(map(float, v)) for v in cand.line_geometry())
            span = 2 * max(xmax - xmin, ymax - ymin) + abs(x0) + abs(y0)
            s = np.array([-span, span]) / np.hypot(p, q)
            ax.plot(x0 + s * p, y0 + s * q, color=f"C{k % 10}", lw=1.4, gid=gid,
                    label=cand.describe())
        else:
            g = cand.implicit()
            gx = np.linspace(xmin, xmax, 401)
            gy = np.linspace(ymin, ymax, 401)
            GX, GY = np.meshgrid(gx, gy)
            Z = np.asarray(g.evaluate_float(GX, GY), dtype=float) * np.ones_like(GX)
            if not (Z.min() <= 0 <= Z.max()):
                continue
            cs = ax.contour(GX, GY, Z, levels=[0.0], colors=[f"C{k % 10}"], linewidths=1.4)
            cs.set_gid(gid)
            ax.plot([], [], color=f"C{k % 10}", label=cand.describe())
        k += 1
    ax.set_xlim(xmin, xmax)
    ax.set_ylim(ymin, ymax)
    if k:
        ax.legend(loc="upper right", fontsize=7, framealpha=0.85)


def plot_field(field: PolyField2D, box, steps: int, path, report: InvariantReport | None = None,
               title: str = ""):
    """Normalized quiver plot with the single curves of ``report`` drawn on top.

    Overlaid curves carry SVG ids ``invariant-curve-0``, ``invariant-curve-1``, ...
    """
    x, y, u, v = quiver_grid(field, *box, steps)
    n = np.hypot(u, v)
    with np.errstate(invalid="ignore", divide="ignore"):
        un, vn = np.where(n > 0, u / n, 0.0), np.where(n > 0, v / n, 0.0)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.quiver(x, y, un, vn, color="0.45", angles="xy", pivot="mid", width=0.003)
        if report is not None:
            _overlay(ax, report, box)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(title)
        ax.set_aspect("equal", adjustable="box")
    return save_svg(fig, path)


def plot_trajectory(traj, path, title: str = "", reference=None):
    """Components against time and, for planar systems, the phase path."""
    planar = traj.states.shape[1] == 2
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 2 if planar else 1, figsize=(8.5, 3.6) if planar else (5, 3.6))
        axes = np.atleast_1d(axes)
        names = ["x", "y"]
        for j in range(traj.states.shape[1]):
            axes[0].plot(traj.t, traj.states[:, j], lw=1.2, label=names[j])
        if reference is not None:
            for j in range(reference.states.shape[1]):
                axes[0].plot(reference.t, reference.states[:, j], "k--", lw=0.8,
                             label="reference" if j == 0 else None)
        axes[0].set_xlabel("t")
        axes[0].legend(fontsize=7)
        if planar:
            axes[1].plot(traj.x, traj.y, lw=1.2)
            axes[1].plot(traj.x[:1], traj.y[:1], "o", ms=4)
            axes[1].set_xlabel("x")
            axes[1].set_ylabel("y")
        fig.suptitle(title)
    return save_svg(fig, path)


def plot_audit(result, path):
    """Phase paths of the audit trajectories and its metric series (log scale)."""
    with plt.rc_context(_RC):
        fig, (a0, a1) = plt.subplots(1, 2, figsize=(8.5, 3.6))
        for name, tr in result.trajectories.items():
            if tr.states.shape[1] == 2:
                a0.plot(tr.x, tr.y, lw=1.2, label=name)
        a0.set_xlabel("x")
        a0.set_ylabel("y")
        if a0.get_legend_handles_labels()[0]:
            a0.legend(fontsize=7)
        for name, (t, v) in result.series.items():
            v = np.abs(np.asarray(v, dtype=float))
            a1.semilogy(t, np.where(v > 0, v, np.nan), lw=1.2, label=name)
        if not result.series:
            for name, tr in result.trajectories.items():
                for j, c in enumerate("xy"[: tr.states.shape[1]]):
                    a1.semilogy(tr.t, np.abs(tr.states[:, j]), lw=1.2, label=f"|{c}| ({name})")
        a1.set_xlabel("t")
        if a1.get_legend_handles_labels()[0]:
            a1.legend(fontsize=7)
        fig.suptitle(f"{result.experiment}: {result.verdict}")
    return save_svg(fig, path)
