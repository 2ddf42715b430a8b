"""Controller features, single-hidden-layer inference, and capacity protocols.

Both experimental conditions share one architecture: a tanh MLP with a
single hidden layer, outputs squashed to the torque limit. Under
``control_only`` the network sees 7 inputs (joint angles, joint
velocities, end-effector-to-target error, normalized time); under
``co_design`` the two link lengths are appended, giving 9 inputs.

Two fairness protocols decide hidden widths: ``equal_width`` gives both
conditions the same width H (co-design then has slightly more parameters
from the extra inputs), while ``equal_params`` shrinks the co-design
width to the largest H~ whose parameter count does not exceed the
control-only network's.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dynamics import ArmState, Morphology, PolicyFn, forward_kinematics

__all__ = [
    "CONTROL_ONLY_INPUT_DIM",
    "CO_DESIGN_INPUT_DIM",
    "DEFAULT_HIDDEN_WIDTH",
    "Condition",
    "NetLayout",
    "PolicyNet",
    "Protocol",
    "build_features",
    "condition_layouts",
    "forward",
    "make_policy",
    "matched_hidden_width",
    "param_count",
]

CONTROL_ONLY_INPUT_DIM = 7
CO_DESIGN_INPUT_DIM = 9
MORPH_INPUT_DIM = CO_DESIGN_INPUT_DIM - CONTROL_ONLY_INPUT_DIM
TORQUE_DIM = 2
DEFAULT_HIDDEN_WIDTH = 64

Protocol = Literal["equal_width", "equal_params"]


@dataclass(frozen=True)
class Condition:
    """Which optimization condition a run belongs to.

    ``control_only`` carries the fixed baseline morphology that every genome
    decodes to; ``co_design`` optimizes morphology alongside the controller.
    """

    kind: Literal["control_only", "co_design"]
    baseline: Morphology | None = None

    def __post_init__(self) -> None:
        if self.kind == "control_only" and self.baseline is None:
            raise ValueError("control_only condition requires a baseline morphology")

    @classmethod
    def control_only(cls, baseline: Morphology) -> "Condition":
        return cls(kind="control_only", baseline=baseline)

    @classmethod
    def co_design(cls) -> "Condition":
        return cls(kind="co_design")

    @property
    def input_dim(self) -> int:
        return CO_DESIGN_INPUT_DIM if self.kind == "co_design" else CONTROL_ONLY_INPUT_DIM


def param_count(d_in: int, hidden: int, d_out: int) -> int:
    """Weights plus biases of a single-hidden-layer MLP."""
    if d_in < 1 or hidden < 1 or d_out < 1:
        raise ValueError("dimensions must be positive")
    return d_in * hidden + hidden * d_out + hidden + d_out


def matched_hidden_width(p_target: int, d_in: int, d_out: int) -> int:
    """Largest hidden width whose parameter count does not exceed ``p_target``.

    Used by the equal-parameter-count protocol: the co-design width is solved
    from the control-only budget, rounding down to an integer.
    """
    if p_target < param_count(d_in, 1, d_out):
        raise ValueError(
            f"budget {p_target} is below the smallest {d_in}-input network "
            f"({param_count(d_in, 1, d_out)} parameters)"
        )
    return (p_target - d_out) // (d_in + d_out + 1)


@dataclass(frozen=True)
class NetLayout:
    """Input, hidden, and output dimensions of a policy network."""

    d_in: int
    hidden: int
    d_out: int = TORQUE_DIM

    def __post_init__(self) -> None:
        if self.d_in not in (CONTROL_ONLY_INPUT_DIM, CO_DESIGN_INPUT_DIM):
            raise ValueError(f"d_in must be 7 or 9, got {self.d_in}")
        if self.hidden < 1:
            raise ValueError("hidden width must be >= 1")
        if self.d_out != TORQUE_DIM:
            raise ValueError("output dimension is fixed at 2 torques")

    @property
    def n_params(self) -> int:
        return param_count(self.d_in, self.hidden, self.d_out)


def condition_layouts(
    protocol: Protocol, hidden: int = DEFAULT_HIDDEN_WIDTH
) -> dict[str, NetLayout]:
    """Hidden widths for both conditions under a fairness protocol."""
    ctrl = NetLayout(CONTROL_ONLY_INPUT_DIM, hidden)
    if protocol == "equal_width":
        co = NetLayout(CO_DESIGN_INPUT_DIM, hidden)
    elif protocol == "equal_params":
        h_tilde = matched_hidden_width(ctrl.n_params, CO_DESIGN_INPUT_DIM, TORQUE_DIM)
        co = NetLayout(CO_DESIGN_INPUT_DIM, h_tilde)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return {"control_only": ctrl, "co_design": co}


class PolicyNet:
    """Immutable MLP over a flat weight vector.

    The weight vector is laid out as [W1 (hidden x d_in), b1 (hidden),
    W2 (d_out x hidden), b2 (d_out)]. ``torque_scale`` multiplies the output
    tanh so actions land in [-torque_scale, +torque_scale].
    """

    __slots__ = ("layout", "weights", "torque_scale", "_w1", "_b1", "_w2", "_b2")

    def __init__(
        self, layout: NetLayout, weights: np.ndarray, torque_scale: float = 1.0
    ) -> None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (layout.n_params,):
            raise ValueError(
                f"weight vector has shape {weights.shape}, layout needs ({layout.n_params},)"
            )
        self.layout = layout
        self.weights = weights.copy()
        self.weights.flags.writeable = False
        self.torque_scale = float(torque_scale)
        d_in, h, d_out = layout.d_in, layout.hidden, layout.d_out
        i = 0
        self._w1 = self.weights[i : i + h * d_in].reshape(h, d_in)
        i += h * d_in
        self._b1 = self.weights[i : i + h]
        i += h
        self._w2 = self.weights[i : i + d_out * h].reshape(d_out, h)
        i += d_out * h
        self._b2 = self.weights[i : i + d_out]

    @classmethod
    def zeros(cls, layout: NetLayout, torque_scale: float = 1.0) -> "PolicyNet":
        return cls(layout, np.zeros(layout.n_params), torque_scale)


def build_features(
    state: ArmState,
    target: tuple[float, float],
    morph: Morphology,
    cond: Condition,
    t: int,
    horizon: int,
) -> np.ndarray:
    """Policy input vector for one control step.

    Always [q1, q2, dq1, dq2, target_x - ee_x, target_y - ee_y, t/horizon];
    co-design appends the raw link lengths [l1, l2].
    """
    px, py = forward_kinematics(morph, (state.q1, state.q2))[1]
    feat = np.empty(cond.input_dim)
    feat[0] = state.q1
    feat[1] = state.q2
    feat[2] = state.dq1
    feat[3] = state.dq2
    feat[4] = target[0] - px
    feat[5] = target[1] - py
    feat[6] = t / horizon
    if cond.kind == "co_design":
        feat[7] = morph.l1
        feat[8] = morph.l2
    return feat


def forward(net: PolicyNet, features: np.ndarray) -> tuple[float, float]:
    """Torque pair tanh-squashed into [-torque_scale, +torque_scale]."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (net.layout.d_in,):
        raise ValueError(
            f"feature vector has shape {features.shape}, net expects ({net.layout.d_in},)"
        )
    hidden = np.tanh(net._w1 @ features + net._b1)
    out = net._w2 @ hidden
    scale = net.torque_scale
    return (
        scale * math.tanh(out[0] + net._b2[0]),
        scale * math.tanh(out[1] + net._b2[1]),
    )


def make_policy(net: PolicyNet, cond: Condition) -> PolicyFn:
    """Bind a network and condition into the rollout policy protocol.

    The returned callable reuses internal scratch buffers, so it computes the
    same values as ``forward(net, build_features(...))`` but is not safe to
    share across concurrently running rollouts; create one per rollout thread.
    """
    w1, b1, w2, b2 = net._w1, net._b1, net._w2, net._b2
    scale = net.torque_scale
    co = cond.kind == "co_design"
    feat = np.empty(net.layout.d_in)
    hid = np.empty(net.layout.hidden)
    tanh = math.tanh

    def policy(
        state: ArmState,
        target: tuple[float, float],
        morph: Morphology,
        t: int,
        horizon: int,
    ) -> tuple[float, float]:
        px, py = forward_kinematics(morph, (state.q1, state.q2))[1]
        feat[0] = state.q1
        feat[1] = state.q2
        feat[2] = state.dq1
        feat[3] = state.dq2
        feat[4] = target[0] - px
        feat[5] = target[1] - py
        feat[6] = t / horizon
        if co:
            feat[7] = morph.l1
            feat[8] = morph.l2
        np.dot(w1, feat, out=hid)
        np.add(hid, b1, out=hid)
        np.tanh(hid, out=hid)
        out = w2 @ hid
        return (scale * tanh(out[0] + b2[0]), scale * tanh(out[1] + b2[1]))

    return policy
