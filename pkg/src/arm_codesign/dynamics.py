"""Planar two-link revolute arm: kinematics, torque-driven dynamics, rollouts.

The arm moves in a horizontal plane (no gravity). Each link is a uniform
rod whose mass is proportional to its length, so changing link lengths
changes inertia as well as reach. The equations of motion are the standard
manipulator form

    M(q) q'' + C(q, q') q' + B q' = tau

with M the 2x2 mass matrix for uniform rods (mass m_i = density * l_i,
rod inertia m_i l_i^2 / 12 about the center), C the Coriolis/centrifugal
terms, and B = diag(damping, damping) viscous joint damping. Integration
is semi-implicit Euler, optionally subdivided into substeps. Everything
here is a pure function of its inputs: identical inputs give bit-identical
outputs, and values can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

if TYPE_CHECKING:
    from .experiment import Scenario

__all__ = [
    "DEFAULT_LINK_BOUNDS",
    "ArmState",
    "Morphology",
    "PhysicalParams",
    "SimulationDiverged",
    "Trajectory",
    "forward_kinematics",
    "kinetic_energy",
    "rollout",
    "step",
]

# Per-link [min, max] length in meters. Baseline reach 0.30 m sits at the
# middle of the allowed sum range.
DEFAULT_LINK_BOUNDS: tuple[tuple[float, float], tuple[float, float]] = (
    (0.05, 0.30),
    (0.05, 0.30),
)


class SimulationDiverged(RuntimeError):
    """Raised when a state or torque stops being finite during integration."""


@dataclass(frozen=True)
class Morphology:
    """Link lengths (m) plus the per-link closed length bounds."""

    l1: float
    l2: float
    bounds: tuple[tuple[float, float], tuple[float, float]] = DEFAULT_LINK_BOUNDS

    def __post_init__(self) -> None:
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise ValueError(f"link lengths must be positive, got {(self.l1, self.l2)}")
        for lo, hi in self.bounds:
            if not (0.0 < lo <= hi):
                raise ValueError(f"invalid link bounds {self.bounds}")

    @property
    def lengths(self) -> tuple[float, float]:
        return (self.l1, self.l2)

    @property
    def reach(self) -> float:
        return self.l1 + self.l2


@dataclass(frozen=True)
class ArmState:
    """Joint angles (rad) and angular velocities (rad/s)."""

    q1: float
    q2: float
    dq1: float = 0.0
    dq2: float = 0.0

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.q1)
            and math.isfinite(self.q2)
            and math.isfinite(self.dq1)
            and math.isfinite(self.dq2)
        ):
            raise ValueError("arm state components must be finite")


@dataclass(frozen=True)
class PhysicalParams:
    """Simulation constants: damping, mass density, torque limit, timestep.

    Defaults were frozen from an empirical sweep of 100 random bounded
    policies and 100 passive rollouts over random in-bounds morphologies:
    10 substeps keep the semi-implicit scheme stable (and passively
    dissipative to 1e-9 per step) across the whole reachable velocity
    envelope, which the 0.1 N*m torque limit caps near |dq| ~ 2 rad/s.
    """

    damping: float = 0.05  # N*m*s/rad, viscous, per joint
    density: float = 1.0  # kg/m of link length
    torque_limit: float = 0.1  # N*m, symmetric per joint
    dt: float = 0.01  # s, control interval
    substeps: int = 10  # integrator subdivisions per dt

    def __post_init__(self) -> None:
        if self.damping < 0.0:
            raise ValueError("damping must be >= 0")
        if self.density <= 0.0:
            raise ValueError("density must be > 0")
        if self.torque_limit <= 0.0:
            raise ValueError("torque_limit must be > 0")
        if self.dt <= 0.0:
            raise ValueError("dt must be > 0")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


@dataclass
class Trajectory:
    """One episode: T+1 states/end-effector positions and T applied torques."""

    states: list[ArmState]
    ee_positions: np.ndarray  # shape (T+1, 2)
    torques: np.ndarray  # shape (T, 2), post-clamp values

    def __len__(self) -> int:
        return len(self.torques)

    @property
    def final_ee(self) -> tuple[float, float]:
        x, y = self.ee_positions[-1]
        return (float(x), float(y))


def forward_kinematics(
    morph: Morphology, q: tuple[float, float]
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Elbow and end-effector positions for joint angles ``q``; base at origin."""
    q1, q2 = q
    ex = morph.l1 * math.cos(q1)
    ey = morph.l1 * math.sin(q1)
    s = q1 + q2
    return (ex, ey), (ex + morph.l2 * math.cos(s), ey + morph.l2 * math.sin(s))


def _mass_matrix(
    q2: float, l1: float, l2: float, density: float
) -> tuple[float, float, float]:
    """Entries (M11, M12, M22) of the uniform-rod mass matrix."""
    m1 = density * l1
    m2 = density * l2
    lc1 = 0.5 * l1
    lc2 = 0.5 * l2
    i1 = m1 * l1 * l1 / 12.0
    i2 = m2 * l2 * l2 / 12.0
    c2 = math.cos(q2)
    m11 = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2)
    m12 = i2 + m2 * (lc2 * lc2 + l1 * lc2 * c2)
    m22 = i2 + m2 * lc2 * lc2
    return m11, m12, m22


def kinetic_energy(state: ArmState, morph: Morphology, params: PhysicalParams) -> float:
    """Total kinetic energy 0.5 * q' M(q) q' of the arm."""
    m11, m12, m22 = _mass_matrix(state.q2, morph.l1, morph.l2, params.density)
    dq1, dq2 = state.dq1, state.dq2
    return 0.5 * (m11 * dq1 * dq1 + 2.0 * m12 * dq1 * dq2 + m22 * dq2 * dq2)


def step(
    state: ArmState,
    torque: tuple[float, float],
    morph: Morphology,
    params: PhysicalParams,
) -> ArmState:
    """Advance the arm by one dt under an already-clamped joint torque.

    Semi-implicit Euler over ``params.substeps`` sub-intervals: velocities are
    updated from the accelerations first, then positions from the new
    velocities. Raises :class:`SimulationDiverged` if any input or output
    component is non-finite.
    """
    t1, t2 = float(torque[0]), float(torque[1])
    if not (math.isfinite(t1) and math.isfinite(t2)):
        raise SimulationDiverged(f"non-finite torque {(t1, t2)}")

    q1, q2, dq1, dq2 = state.q1, state.q2, state.dq1, state.dq2
    l1, l2 = morph.l1, morph.l2
    density = params.density
    b = params.damping
    h = params.dt / params.substeps

    m1 = density * l1
    m2 = density * l2
    lc1 = 0.5 * l1
    lc2 = 0.5 * l2
    i1 = m1 * l1 * l1 / 12.0
    i2 = m2 * l2 * l2 / 12.0
    # Configuration-independent pieces of M.
    m11_const = i1 + i2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2)
    m12_const = i2 + m2 * lc2 * lc2
    m22 = i2 + m2 * lc2 * lc2
    k_cos = m2 * l1 * lc2  # multiplies cos(q2) in M, sin(q2) in Coriolis

    cos = math.cos
    sin = math.sin
    try:
        for _ in range(params.substeps):
            c2 = cos(q2)
            s2 = sin(q2)
            m11 = m11_const + 2.0 * k_cos * c2
            m12 = m12_const + k_cos * c2
            hk = k_cos * s2
            # rhs = tau - C(q, q')q' - B q'
            r1 = t1 + hk * (2.0 * dq1 * dq2 + dq2 * dq2) - b * dq1
            r2 = t2 - hk * dq1 * dq1 - b * dq2
            det = m11 * m22 - m12 * m12
            ddq1 = (m22 * r1 - m12 * r2) / det
            ddq2 = (m11 * r2 - m12 * r1) / det
            dq1 += h * ddq1
            dq2 += h * ddq2
            q1 += h * dq1
            q2 += h * dq2
    except (ValueError, OverflowError) as exc:
        # cos/sin of an inf angle etc.: the state blew up mid-integration
        raise SimulationDiverged("state became non-finite during integration") from exc

    if not (
        math.isfinite(q1)
        and math.isfinite(q2)
        and math.isfinite(dq1)
        and math.isfinite(dq2)
    ):
        raise SimulationDiverged("state became non-finite during integration")
    return ArmState(q1, q2, dq1, dq2)


# A policy maps (state, target, morph, step index, horizon) to a raw torque
# pair; rollout clamps it to the torque limit before applying it.
PolicyFn = Callable[
    [ArmState, tuple[float, float], Morphology, int, int], tuple[float, float]
]


def rollout(
    policy: PolicyFn,
    morph: Morphology,
    scenario: "Scenario",
    target: tuple[float, float],
) -> Trajectory:
    """Run one full episode of ``scenario.horizon`` control steps.

    Starts from the scenario's initial pose with zero velocity. By default the
    episode always runs the full horizon so per-step errors stay comparable
    across rollouts; if ``scenario.stop_on_reach`` is set, the episode ends
    early once the end-effector is within ``scenario.reach_tolerance`` of the
    target. :class:`SimulationDiverged` from :func:`step` propagates to the
    caller, which treats the rollout as failed.
    """
    params = scenario.physical
    horizon = scenario.horizon
    limit = params.torque_limit

    q1, q2 = scenario.initial_pose
    state = ArmState(q1, q2, 0.0, 0.0)
    states = [state]
    ee = np.empty((horizon + 1, 2))
    ee[0] = forward_kinematics(morph, (q1, q2))[1]
    torques = np.empty((horizon, 2))

    tx, ty = target
    steps_done = 0
    for t in range(horizon):
        raw1, raw2 = policy(state, target, morph, t, horizon)
        t1 = limit if raw1 > limit else (-limit if raw1 < -limit else raw1)
        t2 = limit if raw2 > limit else (-limit if raw2 < -limit else raw2)
        torques[t, 0] = t1
        torques[t, 1] = t2
        state = step(state, (t1, t2), morph, params)
        states.append(state)
        px, py = forward_kinematics(morph, (state.q1, state.q2))[1]
        ee[t + 1, 0] = px
        ee[t + 1, 1] = py
        steps_done = t + 1
        if scenario.stop_on_reach and math.hypot(px - tx, py - ty) < scenario.reach_tolerance:
            break

    if steps_done < horizon:
        ee = ee[: steps_done + 1].copy()
        torques = torques[:steps_done].copy()
    return Trajectory(states=states, ee_positions=ee, torques=torques)
