"""Scenario construction, target grids, and paired condition execution.

A scenario fixes the obstacle layout, initial pose, horizon, and physical
constants. Targets are sampled from a rectangular lattice over the
baseline workspace, dropping points inside an obstacle's safety margin or
beyond reach. For every (target, seed) work item both conditions run the
full GA with the same master seed, so downstream statistics are paired.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from . import analysis
from .dynamics import Morphology, PhysicalParams, rollout
from .evolve import GAConfig, GenomeCodec, decode, evolve
from .geometry import (
    CollisionConfig,
    Obstacle,
    arm_clearance,
    collision_penalty,
    target_feasible,
)
from .policy import (
    DEFAULT_HIDDEN_WIDTH,
    Condition,
    Protocol,
    condition_layouts,
    make_policy,
)

__all__ = [
    "EvalRecord",
    "LayoutResult",
    "Scenario",
    "TargetGrid",
    "generate_target_grid",
    "run_condition",
    "run_layout_suite",
    "validate_initial_pose",
]

CONDITION_ORDER = ("co_design", "control_only")


@dataclass(frozen=True)
class Scenario:
    """Static task definition shared by both conditions."""

    obstacles: tuple[Obstacle, ...] = ()
    initial_pose: tuple[float, float] = (math.pi / 2.0, 0.0)
    horizon: int = 300
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    collision: CollisionConfig = field(default_factory=CollisionConfig)
    safety_margin: float = 0.02
    stop_on_reach: bool = False  # paper-style early exit, off by default
    reach_tolerance: float = 0.05

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.safety_margin < 0:
            raise ValueError("safety_margin must be >= 0")
        if self.reach_tolerance <= 0:
            raise ValueError("reach_tolerance must be > 0")


def validate_initial_pose(scenario: Scenario, baseline: Morphology) -> None:
    """Reject scenarios whose start pose already touches an obstacle."""
    from .dynamics import ArmState

    state = ArmState(scenario.initial_pose[0], scenario.initial_pose[1])
    if scenario.obstacles and arm_clearance(state, baseline, list(scenario.obstacles)) <= 0.0:
        raise ValueError("initial pose intersects an obstacle with the baseline morphology")


@dataclass(frozen=True)
class TargetGrid:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    spacing: float
    targets: tuple[tuple[float, float], ...]


def generate_target_grid(
    scenario: Scenario, morph_baseline: Morphology, spacing: float
) -> TargetGrid:
    """Feasible lattice targets over the baseline workspace square.

    The lattice covers [-reach, +reach]^2 at the given spacing (origin
    included) and keeps only points that are reachable and clear every
    obstacle by more than the scenario's safety margin.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    reach = morph_baseline.reach
    n = int(math.floor(reach / spacing + 1e-9))
    obstacles = list(scenario.obstacles)
    targets = [
        (i * spacing, j * spacing)
        for j in range(-n, n + 1)
        for i in range(-n, n + 1)
        if target_feasible(
            (i * spacing, j * spacing), obstacles, morph_baseline, scenario.safety_margin
        )
    ]
    if not targets:
        raise ValueError("layout admits no feasible targets (degenerate layout)")
    return TargetGrid(
        x_range=(-reach, reach),
        y_range=(-reach, reach),
        spacing=spacing,
        targets=tuple(targets),
    )


@dataclass
class EvalRecord:
    """Outcome of one (layout, condition, target, seed) work item.

    Metric fields are None when the run failed; ``error`` then carries the
    reason. ``best_loss_trace`` holds the GA's per-generation best loss.
    """

    layout: str
    condition: str
    target: tuple[float, float]
    seed: int
    trajectory_error: float | None = None
    final_error: float | None = None
    success: bool | None = None
    collision_penalty: float | None = None
    collided: bool | None = None
    l1: float | None = None
    l2: float | None = None
    best_loss_trace: list[float] = field(default_factory=list)
    error: str | None = None


def _evaluate_item(
    cond: Condition,
    scenario: Scenario,
    target: tuple[float, float],
    seed: int,
    ga_cfg: GAConfig,
    codec: GenomeCodec,
    tolerance: float,
    layout_name: str,
) -> EvalRecord:
    """Run one GA + evaluation rollout; failures become error records."""
    record = EvalRecord(
        layout=layout_name, condition=cond.kind, target=target, seed=seed
    )
    try:
        trace = evolve(replace(ga_cfg, seed=seed), scenario, target, codec)
        champion = trace.best_genome
        assert champion is not None
        morph, net = decode(champion)
        traj = rollout(make_policy(net, cond), morph, scenario, target)
        coll = collision_penalty(
            traj, morph, list(scenario.obstacles), scenario.collision
        )
        fe = analysis.final_error(traj, target)
        record.trajectory_error = analysis.trajectory_error(traj, target)
        record.final_error = fe
        record.success = fe < tolerance
        record.collision_penalty = coll.penalty
        record.collided = coll.violating_states > 0
        record.l1 = morph.l1
        record.l2 = morph.l2
        record.best_loss_trace = list(trace.best_loss)
    except Exception as exc:  # isolate failures per record
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def run_condition(
    cond: Condition,
    scenario: Scenario,
    targets: Sequence[tuple[float, float]],
    ga_cfg: GAConfig,
    protocol: Protocol,
    seeds: Sequence[int],
    *,
    baseline: Morphology,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    tolerance: float = 0.05,
    layout_name: str = "",
    workers: int = 1,
) -> list[EvalRecord]:
    """Evaluate one condition on every (target, seed) pair.

    The network layout is fixed by the fairness protocol before any run.
    Work items are independent, so a thread pool returns exactly the records
    serial execution would. Per-item failures land in the record's ``error``
    field without aborting the batch.
    """
    layout = condition_layouts(protocol, hidden_width)[cond.kind]
    codec = GenomeCodec(
        condition=cond,
        layout=layout,
        baseline=baseline,
        torque_scale=scenario.physical.torque_limit,
    )
    items = [(t, s) for t in targets for s in seeds]

    def one(item: tuple[tuple[float, float], int]) -> EvalRecord:
        target, seed = item
        return _evaluate_item(
            cond, scenario, target, seed, ga_cfg, codec, tolerance, layout_name
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, items))
    return [one(item) for item in items]


@dataclass
class LayoutResult:
    """Records for one layout, or a structured error if it could not run."""

    layout: str
    records: list[EvalRecord] = field(default_factory=list)
    targets: tuple[tuple[float, float], ...] = ()
    error: str | None = None


def run_layout_suite(
    layouts: dict[str, Scenario],
    ga_cfg: GAConfig,
    protocol: Protocol,
    seeds: Sequence[int],
    *,
    baseline: Morphology,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    spacing: float = 0.05,
    tolerance: float = 0.05,
    explicit_targets: dict[str, Sequence[tuple[float, float]]] | None = None,
    conditions: Sequence[str] = CONDITION_ORDER,
    workers: int = 1,
) -> dict[str, LayoutResult]:
    """Run both conditions over every layout; one bad layout never aborts the rest.

    Targets come from ``explicit_targets`` when given for a layout, otherwise
    from the lattice generator. Records are merged deterministically by
    (layout, target, seed, condition).
    """
    by_kind = {
        "co_design": Condition.co_design(),
        "control_only": Condition.control_only(baseline),
    }
    results: dict[str, LayoutResult] = {}
    for name in sorted(layouts):
        scenario = layouts[name]
        result = LayoutResult(layout=name)
        try:
            validate_initial_pose(scenario, baseline)
            if explicit_targets and name in explicit_targets:
                targets = [tuple(t) for t in explicit_targets[name]]
                for t in targets:
                    if not target_feasible(
                        t, list(scenario.obstacles), baseline, scenario.safety_margin
                    ):
                        raise ValueError(f"explicit target {t} is not feasible")
            else:
                targets = list(
                    generate_target_grid(scenario, baseline, spacing).targets
                )
            result.targets = tuple(targets)
            records: list[EvalRecord] = []
            for kind in conditions:
                records.extend(
                    run_condition(
                        by_kind[kind],
                        scenario,
                        targets,
                        ga_cfg,
                        protocol,
                        seeds,
                        baseline=baseline,
                        hidden_width=hidden_width,
                        tolerance=tolerance,
                        layout_name=name,
                        workers=workers,
                    )
                )
            records.sort(key=_record_key)
            result.records = records
        except Exception as exc:
            result.error = f"{type(exc).__name__}: {exc}"
        results[name] = result
    return results


def _record_key(r: EvalRecord) -> tuple:
    return (r.layout, r.target[0], r.target[1], r.seed, r.condition)
