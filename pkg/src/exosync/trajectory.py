"""Desired joint trajectories with analytic derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import InvalidInputError, N_JOINTS

SINE = "sine"
HOLD = "hold"


@dataclass(frozen=True)
class JointTrajectory:
    """One joint's reference: a raised cosine sweep or a constant posture.

    sine: q_d(t) = mid - amp*cos(2*pi*t/period + phase), so at t = 0 (phase 0)
    the joint starts at the lower end mid - amp of its sweep.
    hold: q_d(t) = value.
    """

    kind: str = HOLD
    mid: float = 0.0
    amp: float = 0.0
    period: float = 1.0
    phase: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (SINE, HOLD):
            raise InvalidInputError(f"unknown trajectory kind {self.kind!r}")
        if self.kind == SINE and self.period <= 0:
            raise InvalidInputError("sine trajectory needs period > 0")
        if self.amp < 0:
            raise InvalidInputError("amp must be >= 0")

    def eval(self, t):
        if self.kind == HOLD:
            zero = np.zeros_like(np.asarray(t, dtype=float))
            return self.value + zero, zero, zero
        w = 2.0 * math.pi / self.period
        ph = w * np.asarray(t, dtype=float) + self.phase
        q = self.mid - self.amp * np.cos(ph)
        qd = self.amp * w * np.sin(ph)
        qdd = self.amp * w * w * np.cos(ph)
        return q, qd, qdd

    def vel_max(self) -> float:
        return 0.0 if self.kind == HOLD else self.amp * 2.0 * math.pi / self.period

    def acc_max(self) -> float:
        return 0.0 if self.kind == HOLD else self.amp * (2.0 * math.pi / self.period) ** 2


@dataclass(frozen=True)
class TrajectorySpec:
    joints: tuple  # 4 JointTrajectory entries in joint order

    def __post_init__(self):
        if len(self.joints) != N_JOINTS:
            raise InvalidInputError("TrajectorySpec needs one entry per joint")

    def vel_max_norm(self) -> float:
        return float(np.linalg.norm([j.vel_max() for j in self.joints]))

    def acc_max_norm(self) -> float:
        return float(np.linalg.norm([j.acc_max() for j in self.joints]))


def desired_trajectory(spec: TrajectorySpec, t):
    """(q_d, qdot_d, qddot_d) at time t (scalar or array, stacked last axis)."""
    cols = [j.eval(t) for j in spec.joints]
    q = np.stack([c[0] for c in cols], axis=-1)
    qd = np.stack([c[1] for c in cols], axis=-1)
    qdd = np.stack([c[2] for c in cols], axis=-1)
    return q, qd, qdd
