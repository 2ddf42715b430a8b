"""2-D obstacles, signed distances, clearance costs, and target feasibility.

Obstacles are circles or axis-aligned rectangles. Signed distance is
positive outside, negative inside, zero on the boundary. Collisions are
never physically resolved; instead every simulated state is charged a
hinge cost on how far each arm link intrudes into the ``margin``
clearance band around each obstacle, and those per-step costs accumulate
into the episode's collision penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

from .dynamics import ArmState, Morphology, Trajectory, forward_kinematics

__all__ = [
    "Circle",
    "CollisionConfig",
    "CollisionResult",
    "Obstacle",
    "Rect",
    "arm_clearance",
    "collision_penalty",
    "segment_clearance",
    "signed_distance",
    "step_cost",
    "target_feasible",
]

# Sample count for rectangle-vs-segment clearance; spacing between samples
# is link_length / (N_SEGMENT_SAMPLES - 1).
N_SEGMENT_SAMPLES = 32

# Slack for the reachability test so lattice points sitting exactly on the
# workspace boundary are not dropped to float rounding.
_REACH_EPS = 1e-9


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ValueError("circle radius must be > 0")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by min and max corners."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self) -> None:
        if not (self.lo[0] < self.hi[0] and self.lo[1] < self.hi[1]):
            raise ValueError(f"rectangle corners must satisfy lo < hi, got {self.lo}, {self.hi}")


Obstacle = Union[Circle, Rect]


@dataclass(frozen=True)
class CollisionConfig:
    """Clearance margin, hinge exponent, and penalty weight."""

    margin: float = 0.01  # m
    exponent: int = 2  # 1 or 2
    lambda_coll: float = 10.0

    def __post_init__(self) -> None:
        if self.margin < 0.0:
            raise ValueError("margin must be >= 0")
        if self.exponent not in (1, 2):
            raise ValueError("exponent must be 1 or 2")
        if self.lambda_coll < 0.0:
            raise ValueError("lambda_coll must be >= 0")


class CollisionResult(NamedTuple):
    """Accumulated penalty and the number of states that incurred any cost."""

    penalty: float
    violating_states: int


def signed_distance(p: tuple[float, float], obs: Obstacle) -> float:
    """Exact Euclidean signed distance from point ``p`` to the obstacle."""
    x, y = p
    if isinstance(obs, Circle):
        cx, cy = obs.center
        return math.hypot(x - cx, y - cy) - obs.radius
    # Axis-aligned box: offset from center, folded into the first quadrant.
    hx = 0.5 * (obs.hi[0] - obs.lo[0])
    hy = 0.5 * (obs.hi[1] - obs.lo[1])
    qx = abs(x - 0.5 * (obs.lo[0] + obs.hi[0])) - hx
    qy = abs(y - 0.5 * (obs.lo[1] + obs.hi[1])) - hy
    outside = math.hypot(max(qx, 0.0), max(qy, 0.0))
    inside = min(max(qx, qy), 0.0)
    return outside + inside


def segment_clearance(
    a: tuple[float, float], b: tuple[float, float], obs: Obstacle
) -> float:
    """Minimum signed distance from any point of segment ab to the obstacle.

    Circles are handled analytically via the closest point on the segment.
    Rectangles use N_SEGMENT_SAMPLES uniform samples along the segment, an
    approximation with error bounded by the sample spacing. Endpoints are
    canonicalized so the result is exactly symmetric in (a, b).
    """
    if b < a:
        a, b = b, a
    if isinstance(obs, Circle):
        ax, ay = a
        bx, by = b
        cx, cy = obs.center
        dx = bx - ax
        dy = by - ay
        dd = dx * dx + dy * dy
        if dd == 0.0:
            return math.hypot(ax - cx, ay - cy) - obs.radius
        u = ((cx - ax) * dx + (cy - ay) * dy) / dd
        u = 0.0 if u < 0.0 else (1.0 if u > 1.0 else u)
        px = ax + u * dx
        py = ay + u * dy
        return math.hypot(px - cx, py - cy) - obs.radius
    best = math.inf
    n = N_SEGMENT_SAMPLES - 1
    for i in range(N_SEGMENT_SAMPLES):
        t = i / n
        p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
        d = signed_distance(p, obs)
        if d < best:
            best = d
    return best


def _link_segments(
    state: ArmState, morph: Morphology
) -> tuple[tuple[tuple[float, float], tuple[float, float]], ...]:
    elbow, ee = forward_kinematics(morph, (state.q1, state.q2))
    return (((0.0, 0.0), elbow), (elbow, ee))


def arm_clearance(
    state: ArmState, morph: Morphology, obstacles: list[Obstacle]
) -> float:
    """Minimum clearance of either link to any obstacle (inf when empty)."""
    best = math.inf
    for a, b in _link_segments(state, morph):
        for obs in obstacles:
            d = segment_clearance(a, b, obs)
            if d < best:
                best = d
    return best


def step_cost(
    state: ArmState,
    morph: Morphology,
    obstacles: list[Obstacle],
    cfg: CollisionConfig,
) -> float:
    """Hinge cost of one state: sum over links and obstacles of
    max(0, margin - clearance) ** exponent. Zero iff every link clears every
    obstacle by at least the margin."""
    if not obstacles:
        return 0.0
    total = 0.0
    for a, b in _link_segments(state, morph):
        for obs in obstacles:
            violation = cfg.margin - segment_clearance(a, b, obs)
            if violation > 0.0:
                total += violation * violation if cfg.exponent == 2 else violation
    return total


def collision_penalty(
    traj: Trajectory,
    morph: Morphology,
    obstacles: list[Obstacle],
    cfg: CollisionConfig,
) -> CollisionResult:
    """Sum of :func:`step_cost` over all states of the trajectory, plus the
    count of states with positive cost (the collision-rate numerator)."""
    total = 0.0
    violating = 0
    for state in traj.states:
        c = step_cost(state, morph, obstacles, cfg)
        if c > 0.0:
            violating += 1
            total += c
    return CollisionResult(penalty=total, violating_states=violating)


def target_feasible(
    x: tuple[float, float],
    obstacles: list[Obstacle],
    morph: Morphology,
    safety: float,
) -> bool:
    """True iff ``x`` is reachable by the baseline morphology and clears every
    obstacle by more than ``safety``."""
    if safety < 0.0:
        raise ValueError("safety must be >= 0")
    if math.hypot(x[0], x[1]) > morph.reach + _REACH_EPS:
        return False
    return all(signed_distance(x, obs) > safety for obs in obstacles)
