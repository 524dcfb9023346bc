"""Follower-motor synchronization layer (sliding mode).

The pair error is e = theta_fl - theta_ex regardless of which motor leads;
r = e_dot + beta*e.  The extension follower uses
u_ex = k2*r + (k3 + k4*||z2||)*sgn(r); the flexion follower uses its exact
negation.  sgn(0) = 0 stands in for the set-valued signum of the nonsmooth
analysis; an optional boundary layer replaces sgn with a saturation ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import InvalidInputError
from .motors import MotorIntervals


@dataclass(frozen=True)
class SyncGains:
    k2: float
    k3: float
    k4: float
    beta: float
    boundary_layer: float = 0.0

    def __post_init__(self):
        for name in ("k2", "k3", "k4", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidInputError(f"SyncGains.{name} must be > 0")
        if self.boundary_layer < 0:
            raise InvalidInputError("boundary_layer must be >= 0 (0 disables smoothing)")


@dataclass(frozen=True)
class SyncErrors:
    e: float
    r: float
    z2_norm: float


@dataclass(frozen=True)
class ChiBounds:
    """Coefficients of the follower disturbance bound |chi| <= c1 + c2*||z2||."""

    c1: float
    c2: float

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise InvalidInputError("ChiBounds must be >= 0")


@dataclass(frozen=True)
class LeadEnvelope:
    """Worst-case lead-motor velocity/acceleration magnitudes for one pair."""

    vel_max: float
    acc_max: float

    def __post_init__(self):
        if self.vel_max < 0 or self.acc_max < 0:
            raise InvalidInputError("lead envelope magnitudes must be >= 0")


def sync_errors(theta_fl: float, theta_ex: float, thetadot_fl: float,
                thetadot_ex: float, beta: float) -> SyncErrors:
    e = theta_fl - theta_ex
    edot = thetadot_fl - thetadot_ex
    r = edot + beta * e
    return SyncErrors(e=e, r=r, z2_norm=math.hypot(e, r))


def _switching_term(r: float, boundary_layer: float) -> float:
    # Pure signum with sgn(0) = 0 by default; sat(r/phi) when smoothing is on.
    if boundary_layer > 0.0:
        return max(-1.0, min(1.0, r / boundary_layer))
    return float(r > 0.0) - float(r < 0.0)


def control_extension(s: SyncErrors, g: SyncGains) -> float:
    """u_ex = k2*r + (k3 + k4*||z2||)*sgn(r)."""
    return g.k2 * s.r + (g.k3 + g.k4 * s.z2_norm) * _switching_term(s.r, g.boundary_layer)


def control_flexion(s: SyncErrors, g: SyncGains) -> float:
    """u_fl: the exact negation of the extension law."""
    return -control_extension(s, g)


@dataclass(frozen=True)
class GainConditionVerdict:
    k3_required: float
    k4_required: float
    k3_margin: float
    k4_margin: float

    @property
    def k3_ok(self) -> bool:
        return self.k3_margin >= 0.0

    @property
    def k4_ok(self) -> bool:
        return self.k4_margin >= 0.0

    @property
    def passed(self) -> bool:
        return self.k3_ok and self.k4_ok


def check_gain_conditions(g: SyncGains, b: ChiBounds, b_lower: float) -> GainConditionVerdict:
    """Sufficient conditions k3 >= c1/b_lower, k4 >= c2/b_lower, with margins."""
    if b_lower <= 0:
        raise InvalidInputError("b_lower must be > 0")
    k3_req = b.c1 / b_lower
    k4_req = b.c2 / b_lower
    return GainConditionVerdict(k3_required=k3_req, k4_required=k4_req,
                                k3_margin=g.k3 - k3_req, k4_margin=g.k4 - k4_req)


def chi_bounds_from_params(intervals: MotorIntervals, env: LeadEnvelope,
                           beta: float) -> ChiBounds:
    """Conservative c1, c2 by interval arithmetic over the lead envelope.

    From chi = J(thdd_lead + beta*edot) + D*thd_follower + d + e with
    |edot| <= sqrt(1+beta^2)*||z2|| and |thd_follower| <= vel_max + |edot|:

        c1 = c_J*acc_max + max(|c_d|,|c_D|)*vel_max + max(|c_de|,|c_De|)
        c2 = (c_J*beta + max(|c_d|,|c_D|)) * sqrt(1+beta^2) + 1

    The trajectory-independent "+e" term lands in c2 as the trailing 1, which
    is why c2 >= 1 for any parameterization.
    """
    if beta <= 0:
        raise InvalidInputError("beta must be > 0")
    d_abs = max(abs(intervals.c_d), abs(intervals.c_D))
    fric_abs = max(abs(intervals.c_de), abs(intervals.c_De))
    slope = math.sqrt(1.0 + beta * beta)
    return ChiBounds(
        c1=intervals.c_J * env.acc_max + d_abs * env.vel_max + fric_abs,
        c2=(intervals.c_J * beta + d_abs) * slope + 1.0,
    )


def pair_lyapunov(e: float, r: float, follower_inertia: float) -> float:
    """V_pair = 0.5*e^2 + 0.5*J_follower*r^2."""
    return 0.5 * e * e + 0.5 * follower_inertia * r * r
