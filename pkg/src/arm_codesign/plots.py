"""Figure rendering for the report path.

All figures are drawn with matplotlib and saved as SVG next to the CSV
tables they visualize. Delta-map cells carry ``gid`` attributes
(``cell-<i>``) so the emitted SVG can be inspected structurally, and every
figure embeds the configuration hash both as a visible footer (gid
``config-hash``) and in the SVG metadata.

Color conventions: in delta maps red means co-design better, blue means
control-only better, grey near parity. Distribution plots use blue for
co-design and orange for control-only.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.colors import LinearSegmentedColormap, TwoSlopeNorm
from matplotlib.patches import Circle as CirclePatch
from matplotlib.patches import Rectangle as RectPatch

from .geometry import Circle, Obstacle, Rect

__all__ = [
    "CO_COLOR",
    "CTRL_COLOR",
    "DELTA_CMAP",
    "plot_delta_map",
    "plot_ecdf",
    "plot_histogram",
    "plot_sector_bars",
]

CO_COLOR = "#1f77b4"  # co-design: blue
CTRL_COLOR = "#ff7f0e"  # control-only: orange

# blue (control-only better) -> grey (parity) -> red (co-design better)
DELTA_CMAP = LinearSegmentedColormap.from_list(
    "delta", ["#2166ac", "#c8c8c8", "#b2182b"]
)


def _stamp_and_save(fig: plt.Figure, path: Path | str, cfg_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    txt = fig.text(
        0.99, 0.005, f"config {cfg_hash[:16]}", ha="right", va="bottom", fontsize=5, color="#666666"
    )
    txt.set_gid("config-hash")
    fig.savefig(
        path,
        format="svg",
        metadata={"Description": f"config-hash:{cfg_hash}", "Date": None},
    )
    plt.close(fig)
    return path


def _draw_obstacles(ax: plt.Axes, obstacles: Sequence[Obstacle]) -> None:
    for i, obs in enumerate(obstacles):
        if isinstance(obs, Circle):
            patch = CirclePatch(obs.center, obs.radius, facecolor="#8a8a8a", edgecolor="#555555", zorder=3)
        elif isinstance(obs, Rect):
            patch = RectPatch(
                obs.lo,
                obs.hi[0] - obs.lo[0],
                obs.hi[1] - obs.lo[1],
                facecolor="#8a8a8a",
                edgecolor="#555555",
                zorder=3,
            )
        else:
            raise TypeError(f"unknown obstacle type {type(obs)!r}")
        patch.set_gid(f"obstacle-{i}")
        ax.add_patch(patch)


def plot_delta_map(
    values: dict[tuple[float, float], float],
    spacing: float,
    obstacles: Sequence[Obstacle],
    cfg_hash: str,
    path: Path | str,
    *,
    title: str = "",
    convention: str = "positive = co-design better",
    reach: float | None = None,
) -> Path:
    """Colored target-grid squares; one gid-tagged cell per target."""
    fig, ax = plt.subplots(figsize=(5.0, 4.6))
    vmax = max((abs(v) for v in values.values()), default=0.0)
    if vmax == 0.0:
        vmax = 1e-9
    norm = TwoSlopeNorm(vcenter=0.0, vmin=-vmax, vmax=vmax)
    for i, (t, v) in enumerate(sorted(values.items())):
        cell = RectPatch(
            (t[0] - spacing / 2.0, t[1] - spacing / 2.0),
            spacing,
            spacing,
            facecolor=DELTA_CMAP(norm(v)),
            edgecolor="white",
            linewidth=0.3,
            zorder=2,
        )
        cell.set_gid(f"cell-{i}")
        ax.add_patch(cell)
    _draw_obstacles(ax, obstacles)
    if reach is not None:
        ax.add_patch(
            CirclePatch((0, 0), reach, fill=False, edgecolor="#bbbbbb", linestyle="--", zorder=1)
        )
    lim = reach if reach is not None else max(
        (max(abs(t[0]), abs(t[1])) for t in values), default=0.3
    )
    lim += spacing
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(title or "paired improvement map")
    fig.colorbar(
        plt.cm.ScalarMappable(norm=norm, cmap=DELTA_CMAP), ax=ax, label=convention
    )
    return _stamp_and_save(fig, path, cfg_hash)


def plot_sector_bars(
    means: Sequence[float | None],
    counts: Sequence[int],
    cfg_hash: str,
    path: Path | str,
    *,
    title: str = "",
    convention: str = "negative = co-design better",
) -> Path:
    """Mean final-error difference per 45-degree sector."""
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    xs = range(len(means))
    heights = [m if m is not None else 0.0 for m in means]
    colors = [CO_COLOR if (m is not None and m < 0) else CTRL_COLOR for m in means]
    bars = ax.bar(xs, heights, color=colors, edgecolor="#444444", linewidth=0.5)
    for s, (bar, m) in enumerate(zip(bars, means)):
        bar.set_gid(f"sector-{s}")
        if m is None:
            ax.text(s, 0, "n/a", ha="center", va="bottom", fontsize=7, color="#888888")
    ax.axhline(0.0, color="#444444", linewidth=0.8)
    ax.set_xticks(list(xs))
    ax.set_xlabel("sector (45° each, 0 = +x axis, counterclockwise)")
    ax.set_ylabel(f"mean Δ final error (m)\n{convention}")
    ax.set_title(title or "sector-wise mean improvement")
    return _stamp_and_save(fig, path, cfg_hash)


def plot_histogram(
    counts_by_condition: dict[str, Sequence[int]],
    edges: Sequence[float],
    cfg_hash: str,
    path: Path | str,
    *,
    title: str = "",
    xlabel: str = "final error (m)",
) -> Path:
    """Overlaid per-condition histograms; the last bin is the overflow mass."""
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    widths = [b - a for a, b in zip(edges, edges[1:])]
    widths.append(widths[-1])  # overflow bin drawn at the same width
    lefts = list(edges)
    colors = {"co_design": CO_COLOR, "control_only": CTRL_COLOR}
    for cond, counts in sorted(counts_by_condition.items()):
        if len(counts) != len(lefts):
            raise ValueError(
                f"{cond}: expected {len(lefts)} bins (incl. overflow), got {len(counts)}"
            )
        bars = ax.bar(
            lefts,
            counts,
            width=widths,
            align="edge",
            alpha=0.55,
            color=colors.get(cond, "#777777"),
            edgecolor="#333333",
            linewidth=0.4,
            label=cond,
        )
        for i, bar in enumerate(bars):
            bar.set_gid(f"hist-{cond}-{i}")
    ticks = list(edges) + [edges[-1] + widths[-1]]
    ax.set_xticks(ticks)
    labels = [f"{e:g}" for e in edges] + [f"≥{edges[-1]:g}"]
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("targets per bin")
    ax.set_title(title or "final error distribution")
    ax.legend()
    return _stamp_and_save(fig, path, cfg_hash)


def plot_ecdf(
    steps_by_condition: dict[str, Sequence[tuple[float, float]]],
    cfg_hash: str,
    path: Path | str,
    *,
    title: str = "",
    xlabel: str = "final error (m)",
) -> Path:
    """Right-continuous ECDF step plots, one line per condition."""
    fig, ax = plt.subplots(figsize=(5.4, 3.4))
    colors = {"co_design": CO_COLOR, "control_only": CTRL_COLOR}
    for cond, steps in sorted(steps_by_condition.items()):
        if not steps:
            continue
        xs = [steps[0][0]] + [v for v, _ in steps]
        ys = [0.0] + [f for _, f in steps]
        (line,) = ax.step(
            xs, ys, where="post", label=cond, color=colors.get(cond, "#777777")
        )
        line.set_gid(f"ecdf-{cond}")
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cumulative fraction")
    ax.set_title(title or "final error ECDF")
    ax.legend(loc="lower right")
    return _stamp_and_save(fig, path, cfg_hash)
