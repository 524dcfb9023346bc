"""Eight-motor actuation layer: per-motor dynamics and the switched torque map.

Each joint is driven by an antagonistic cable pair (flexion motor + extension
motor).  The motor currently holding the joint's cable taut is the lead; its
angle is rigidly slaved to the joint through the transmission.  The other
motor is the follower and obeys the second-order motor model
``J thdd + D thd + d_n(t) = B u_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ExoState, InvalidInputError, N_JOINTS

FLEXION = "flexion"
EXTENSION = "extension"
N_MOTORS = 2 * N_JOINTS


@dataclass(frozen=True)
class MotorState:
    """Angle and angular velocity of one motor system (pulley side)."""

    theta: float
    thetadot: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.thetadot)):
            raise InvalidInputError("MotorState entries must be finite")


@dataclass(frozen=True)
class MotorParams:
    """One motor system: electric motor + gearbox + pulley, reflected to the pulley.

    ``friction_*`` parameterize the bounded disturbance/friction term
    d_n(t) = bias + amp*sin(2*pi*freq*t + phase).  ``effectiveness`` is the
    torque produced per unit control input, used both in the motor model and
    in the joint torque map.  ``angle_offset`` is the motor's taut-cable
    datum: the angle it reads when its cable is taut at joint angle zero.
    """

    inertia: float
    damping: float
    effectiveness: float
    role: str
    joint_index: int
    friction_bias: float = 0.0
    friction_amp: float = 0.0
    friction_freq: float = 1.0
    friction_phase: float = 0.0
    transmission_ratio: float = 1.0
    angle_offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.inertia) and self.inertia > 0.0):
            raise InvalidInputError(f"motor inertia must be > 0, got {self.inertia}")
        if not (math.isfinite(self.effectiveness) and self.effectiveness > 0.0):
            raise InvalidInputError(f"motor effectiveness must be > 0, got {self.effectiveness}")
        if self.role not in (FLEXION, EXTENSION):
            raise InvalidInputError(f"role must be '{FLEXION}' or '{EXTENSION}'")
        if not 0 <= self.joint_index < N_JOINTS:
            raise InvalidInputError("joint_index must be 0..3")
        if self.friction_amp < 0:
            raise InvalidInputError("friction amplitude must be >= 0")
        if self.transmission_ratio <= 0:
            raise InvalidInputError("transmission ratio must be > 0")

    def friction(self, t: float) -> float:
        return self.friction_bias + self.friction_amp * math.sin(
            2.0 * math.pi * self.friction_freq * t + self.friction_phase)

    def friction_range(self):
        return (self.friction_bias - self.friction_amp,
                self.friction_bias + self.friction_amp)


@dataclass(frozen=True)
class MotorIntervals:
    """Declared interval constants for all eight motors (exact, not sampled)."""

    c_j: float
    c_J: float
    c_d: float
    c_D: float
    c_de: float
    c_De: float
    b_lower: float
    b_upper: float

    def __post_init__(self):
        if self.c_j <= 0 or self.c_j > self.c_J:
            raise InvalidInputError("need 0 < c_j <= c_J")
        if self.c_d > self.c_D or self.c_de > self.c_De:
            raise InvalidInputError("interval bounds out of order")
        if self.b_lower <= 0 or self.b_lower > self.b_upper:
            raise InvalidInputError("need 0 < b_lower <= b_upper")

    def as_dict(self):
        return dict(c_j=self.c_j, c_J=self.c_J, c_d=self.c_d, c_D=self.c_D,
                    c_de=self.c_de, c_De=self.c_De,
                    b_lower=self.b_lower, b_upper=self.b_upper)

    def admits(self, m: MotorParams) -> bool:
        lo, hi = m.friction_range()
        return (self.c_j <= m.inertia <= self.c_J
                and self.c_d <= m.damping <= self.c_D
                and self.c_de <= lo and hi <= self.c_De
                and self.b_lower <= m.effectiveness <= self.b_upper)


class MotorBank:
    """The eight motors plus their declared interval constants.

    Construction validates that every joint has exactly one flexion and one
    extension motor and that each motor's parameters lie inside the declared
    intervals (the constructor-enforced form of the interval invariants).
    """

    def __init__(self, motors, intervals: MotorIntervals):
        motors = tuple(motors)
        if len(motors) != N_MOTORS:
            raise InvalidInputError(f"expected {N_MOTORS} motors, got {len(motors)}")
        pair_map = {}
        for idx, m in enumerate(motors):
            key = (m.joint_index, m.role)
            if key in pair_map:
                raise InvalidInputError(f"duplicate {m.role} motor for joint {m.joint_index}")
            pair_map[key] = idx
            if not intervals.admits(m):
                raise InvalidInputError(
                    f"motor {idx} violates the declared parameter intervals")
        for j in range(N_JOINTS):
            if (j, FLEXION) not in pair_map or (j, EXTENSION) not in pair_map:
                raise InvalidInputError(f"joint {j} is missing a motor pair")
        self.motors = motors
        self.intervals = intervals
        self._pairs = tuple((pair_map[(j, FLEXION)], pair_map[(j, EXTENSION)])
                            for j in range(N_JOINTS))

    def pair(self, joint: int):
        """(flexion_index, extension_index) of the pair acting on `joint`."""
        return self._pairs[joint]

    def __eq__(self, other):
        return (isinstance(other, MotorBank)
                and self.motors == other.motors
                and self.intervals == other.intervals)

    def __iter__(self):
        return iter(self.motors)


@dataclass(frozen=True)
class SwitchSignals:
    """Lead flags sigma and follower flags sigma_bar for the eight motors."""

    sigma: tuple
    sigma_bar: tuple

    def __post_init__(self):
        if len(self.sigma) != N_MOTORS or len(self.sigma_bar) != N_MOTORS:
            raise InvalidInputError("switch signals must have 8 entries")
        if any(s not in (0, 1) for s in self.sigma):
            raise InvalidInputError("sigma entries must be 0 or 1")
        if any(sb != 1 - s for s, sb in zip(self.sigma, self.sigma_bar)):
            raise InvalidInputError("sigma_bar must equal 1 - sigma elementwise")

    @staticmethod
    def from_leads(lead_roles, bank: MotorBank) -> "SwitchSignals":
        sigma = [0] * N_MOTORS
        for j, role in enumerate(lead_roles):
            fl, ex = bank.pair(j)
            sigma[fl if role == FLEXION else ex] = 1
        return SwitchSignals(tuple(sigma), tuple(1 - s for s in sigma))


def motor_accel(m: MotorState, p: MotorParams, u_n: float, sigma_bar_n: int,
                t: float) -> float:
    """Angular acceleration of one motor: (B u sigma_bar - D thd - d_n(t)) / J."""
    if not (math.isfinite(u_n) and math.isfinite(t)):
        raise InvalidInputError("motor_accel inputs must be finite")
    return (p.effectiveness * u_n * sigma_bar_n
            - p.damping * m.thetadot
            - p.friction(t)) / p.inertia


def exo_torque(u, signals: SwitchSignals, bank: MotorBank) -> np.ndarray:
    """Joint torque tau_e = B_sigma u, one lead motor per joint.

    Positive input means flexion torque; a negative input through an
    extension lead is an extension torque, so a single effectiveness gain per
    lead covers both movement directions.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (N_JOINTS,) or not np.all(np.isfinite(u)):
        raise InvalidInputError("u must be 4 finite numbers")
    tau = np.zeros(N_JOINTS)
    for j in range(N_JOINTS):
        fl, ex = bank.pair(j)
        lead = signals.sigma[fl] + signals.sigma[ex]
        if lead != 1:
            raise InvalidInputError(f"joint {j} must have exactly one lead motor")
        idx = fl if signals.sigma[fl] == 1 else ex
        tau[j] = bank.motors[idx].effectiveness * u[j]
    return tau


def lead_motor_kinematics(state: ExoState, joint: int, p: MotorParams) -> MotorState:
    """Lead motor state implied by the rigid transmission: ratio * q + offset."""
    return MotorState(p.transmission_ratio * float(state.q[joint]) + p.angle_offset,
                      p.transmission_ratio * float(state.qdot[joint]))
