"""Aggregate statistics over paired evaluation records.

Everything here consumes immutable records (anything exposing ``target``,
``seed``, ``condition``, and metric attributes) and is deterministic, so
output rows always come out in the same order.

Two opposite sign conventions coexist on purpose, matching how the figures
they feed are conventionally drawn:

* delta maps use ``delta = ctrl - co`` for errors (and ``co - ctrl`` for
  success), so positive always means co-design is better;
* sector and ring statistics use ``delta = co - ctrl`` on final error, so
  negative means co-design is better.

Every result object carries its convention string so tables and figures
can label themselves.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Protocol, Sequence

import numpy as np

from .dynamics import Trajectory

__all__ = [
    "AnalysisConfig",
    "DELTA_CONVENTION",
    "DeltaMap",
    "RingStats",
    "SECTOR_CONVENTION",
    "SectorStats",
    "WinRate",
    "delta_map",
    "ecdf",
    "final_error",
    "histogram",
    "paired_target_stats",
    "ring_index",
    "ring_stats",
    "sector_index",
    "sector_stats",
    "success_rate",
    "trajectory_error",
    "win_rate",
]

DELTA_CONVENTION = "positive = co-design better"
SECTOR_CONVENTION = "negative = co-design better"

PAIRED_METRICS = ("final_error", "trajectory_error", "success")


class Record(Protocol):
    target: tuple[float, float]
    seed: int
    condition: str
    trajectory_error: float | None
    final_error: float | None
    success: bool | None
    collision_penalty: float | None
    error: str | None


@dataclass(frozen=True)
class AnalysisConfig:
    """Tolerance and binning used by the aggregate statistics."""

    tolerance: float = 0.05  # m, success threshold on final error
    histogram_edges: tuple[float, ...] = (0.0, 0.03, 0.05, 0.10, 0.15, 0.20, 0.25)
    n_sectors: int = 8
    ring_edges: tuple[float, ...] = (0.0, 0.10, 0.20, 0.30)

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.n_sectors < 1:
            raise ValueError("n_sectors must be >= 1")
        for edges in (self.histogram_edges, self.ring_edges):
            if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
                raise ValueError(f"edges must be strictly increasing, got {edges}")


# ---------------------------------------------------------------------------
# Per-trajectory metrics
# ---------------------------------------------------------------------------


def trajectory_error(traj: Trajectory, target: tuple[float, float]) -> float:
    """Mean squared end-effector-to-target distance over post-initial states."""
    ee = traj.ee_positions
    if ee.shape[0] < 2:
        raise ValueError("trajectory has no post-initial states")
    dx = ee[1:, 0] - target[0]
    dy = ee[1:, 1] - target[1]
    return float(np.mean(dx * dx + dy * dy))


def final_error(traj: Trajectory, target: tuple[float, float]) -> float:
    """Terminal Euclidean distance between end-effector and target."""
    px, py = traj.final_ee
    return math.hypot(px - target[0], py - target[1])


def success_rate(records: Sequence[Record], tolerance: float) -> float:
    """Fraction of records with final error strictly below the tolerance."""
    if not records:
        raise ValueError("success_rate needs at least one record")
    hits = sum(
        1 for r in records if r.final_error is not None and r.final_error < tolerance
    )
    return hits / len(records)


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------


class PairedTarget(NamedTuple):
    target: tuple[float, float]
    mean_co: float
    mean_ctrl: float
    n_pairs: int


def _metric_value(r: Record, metric: str) -> float | None:
    if metric == "success":
        return None if r.success is None else float(r.success)
    v = getattr(r, metric)
    return None if v is None else float(v)


def paired_target_stats(
    co: Iterable[Record], ctrl: Iterable[Record], metric: str
) -> tuple[list[PairedTarget], int]:
    """Per-target seed-means of a metric for both conditions.

    Only (target, seed) pairs present and valid in both conditions
    contribute. Returns the paired per-target stats, sorted by target, plus
    the number of records dropped for missing partners or failed runs.
    """
    if metric not in PAIRED_METRICS:
        raise ValueError(f"metric must be one of {PAIRED_METRICS}, got {metric!r}")

    def collect(records: Iterable[Record]) -> dict[tuple, float]:
        out: dict[tuple, float] = {}
        for r in records:
            v = _metric_value(r, metric)
            if r.error is None and v is not None:
                out[(r.target, r.seed)] = v
        return out

    co_vals = collect(co)
    ctrl_vals = collect(ctrl)
    shared = sorted(set(co_vals) & set(ctrl_vals))
    skipped = len(set(co_vals) ^ set(ctrl_vals))

    by_target: dict[tuple[float, float], list[tuple[float, float]]] = {}
    for key in shared:
        by_target.setdefault(key[0], []).append((co_vals[key], ctrl_vals[key]))
    paired = [
        PairedTarget(
            target=t,
            mean_co=sum(v[0] for v in vals) / len(vals),
            mean_ctrl=sum(v[1] for v in vals) / len(vals),
            n_pairs=len(vals),
        )
        for t, vals in sorted(by_target.items())
    ]
    return paired, skipped


# ---------------------------------------------------------------------------
# Delta maps, sectors, rings
# ---------------------------------------------------------------------------


@dataclass
class DeltaMap:
    """Per-target paired improvement, positive = co-design better."""

    metric: str
    values: dict[tuple[float, float], float]
    seed_counts: dict[tuple[float, float], int]
    skipped_unpaired: int
    convention: str = DELTA_CONVENTION


def delta_map(
    co: Iterable[Record], ctrl: Iterable[Record], metric: str = "final_error"
) -> DeltaMap:
    """Paired per-target difference between conditions.

    Error metrics: ``mean_ctrl - mean_co``; success: ``succ_co -
    succ_ctrl``. In both cases positive favors co-design. Unpaired records
    are dropped and counted in ``skipped_unpaired``.
    """
    paired, skipped = paired_target_stats(co, ctrl, metric)
    values: dict[tuple[float, float], float] = {}
    counts: dict[tuple[float, float], int] = {}
    for p in paired:
        if metric == "success":
            values[p.target] = p.mean_co - p.mean_ctrl
        else:
            values[p.target] = p.mean_ctrl - p.mean_co
        counts[p.target] = p.n_pairs
    return DeltaMap(
        metric=metric, values=values, seed_counts=counts, skipped_unpaired=skipped
    )


def sector_index(target: tuple[float, float], n_sectors: int = 8) -> int:
    """45-degree sector of a target, counting counterclockwise from +x."""
    angle = math.atan2(target[1], target[0])
    if angle < 0.0:
        angle += 2.0 * math.pi
    idx = int(angle / (2.0 * math.pi / n_sectors))
    return min(idx, n_sectors - 1)


def ring_index(target: tuple[float, float], ring_edges: Sequence[float]) -> int:
    """Radial bin of a target; half-open [r_i, r_{i+1}) intervals.

    A radius exactly on an interior edge lands in the outer of the two
    rings; radii at or beyond the last edge are clamped into the outermost
    ring so boundary-of-workspace targets are kept.
    """
    r = math.hypot(target[0], target[1])
    if r < ring_edges[0]:
        raise ValueError(f"radius {r} below first ring edge {ring_edges[0]}")
    idx = bisect_right(list(ring_edges), r) - 1
    return min(idx, len(ring_edges) - 2)


@dataclass
class SectorStats:
    """Mean final-error difference (co - ctrl) per angular sector.

    ``means[s]`` is None when no paired target fell in sector s.
    """

    means: list[float | None]
    counts: list[int]
    per_target: dict[tuple[float, float], float]
    sector_of: dict[tuple[float, float], int]
    convention: str = SECTOR_CONVENTION


def sector_stats(
    co: Iterable[Record], ctrl: Iterable[Record], n_sectors: int = 8
) -> SectorStats:
    """Sector-aggregated mean of per-target (mean_co - mean_ctrl) final error.

    Negative values mean co-design attains lower terminal error. Note this is
    the opposite sign convention from :func:`delta_map`.
    """
    paired, _ = paired_target_stats(co, ctrl, "final_error")
    sums = [0.0] * n_sectors
    counts = [0] * n_sectors
    per_target: dict[tuple[float, float], float] = {}
    sector_of: dict[tuple[float, float], int] = {}
    for p in paired:
        term = p.mean_co - p.mean_ctrl
        s = sector_index(p.target, n_sectors)
        per_target[p.target] = term
        sector_of[p.target] = s
        sums[s] += term
        counts[s] += 1
    means: list[float | None] = [
        (sums[s] / counts[s]) if counts[s] else None for s in range(n_sectors)
    ]
    return SectorStats(
        means=means, counts=counts, per_target=per_target, sector_of=sector_of
    )


@dataclass
class RingStats:
    """Mean final-error difference (co - ctrl) per radial ring."""

    edges: tuple[float, ...]
    means: list[float | None]
    counts: list[int]
    per_target: dict[tuple[float, float], float]
    ring_of: dict[tuple[float, float], int]
    convention: str = SECTOR_CONVENTION


def ring_stats(
    co: Iterable[Record], ctrl: Iterable[Record], ring_edges: Sequence[float]
) -> RingStats:
    """Ring-aggregated mean of per-target (mean_co - mean_ctrl) final error."""
    if len(ring_edges) < 2 or any(a >= b for a, b in zip(ring_edges, ring_edges[1:])):
        raise ValueError("ring_edges must be strictly increasing")
    n_rings = len(ring_edges) - 1
    paired, _ = paired_target_stats(co, ctrl, "final_error")
    sums = [0.0] * n_rings
    counts = [0] * n_rings
    per_target: dict[tuple[float, float], float] = {}
    ring_of: dict[tuple[float, float], int] = {}
    for p in paired:
        term = p.mean_co - p.mean_ctrl
        k = ring_index(p.target, ring_edges)
        per_target[p.target] = term
        ring_of[p.target] = k
        sums[k] += term
        counts[k] += 1
    means: list[float | None] = [
        (sums[k] / counts[k]) if counts[k] else None for k in range(n_rings)
    ]
    return RingStats(
        edges=tuple(ring_edges),
        means=means,
        counts=counts,
        per_target=per_target,
        ring_of=ring_of,
    )


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------


def histogram(values: Sequence[float], edges: Sequence[float]) -> list[int]:
    """Counts per half-open bin [e_i, e_{i+1}) plus a final overflow bin.

    A value exactly on an interior edge goes to the upper bin; values at or
    beyond the last edge land in the overflow bin, so the counts always sum
    to ``len(values)``. Values below the first edge are a caller error.
    """
    if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
        raise ValueError("edges must be strictly increasing")
    edges = list(edges)
    counts = [0] * len(edges)  # len(edges)-1 regular bins + overflow
    for v in values:
        if v < edges[0]:
            raise ValueError(f"value {v} below first edge {edges[0]}")
        idx = bisect_right(edges, v) - 1
        counts[idx] += 1  # idx == len(edges)-1 is the overflow bin
    return counts


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF as (value, cumulative fraction) steps.

    Duplicate values collapse into one step carrying their combined mass.
    """
    if not len(values):
        raise ValueError("ecdf needs at least one value")
    ordered = sorted(values)
    n = len(ordered)
    out: list[tuple[float, float]] = []
    seen = 0
    for i, v in enumerate(ordered):
        seen += 1
        if i + 1 == n or ordered[i + 1] != v:
            out.append((v, seen / n))
    return out


# ---------------------------------------------------------------------------
# Win rates
# ---------------------------------------------------------------------------


class WinRate(NamedTuple):
    wins_co: int
    wins_ctrl: int
    ties: int
    n_targets: int

    @property
    def fraction_co(self) -> float:
        return self.wins_co / self.n_targets

    @property
    def fraction_ctrl(self) -> float:
        return self.wins_ctrl / self.n_targets


def win_rate(
    co: Iterable[Record], ctrl: Iterable[Record], metric: str = "final_error"
) -> WinRate:
    """Per-target strict wins over paired seed-means; ties reported separately."""
    paired, _ = paired_target_stats(co, ctrl, metric)
    if not paired:
        raise ValueError("win_rate needs at least one paired target")
    wins_co = wins_ctrl = ties = 0
    higher_is_better = metric == "success"
    for p in paired:
        a, b = p.mean_co, p.mean_ctrl
        if a == b:
            ties += 1
        elif (a > b) == higher_is_better:
            wins_co += 1
        else:
            wins_ctrl += 1
    return WinRate(wins_co=wins_co, wins_ctrl=wins_ctrl, ties=ties, n_targets=len(paired))
