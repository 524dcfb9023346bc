"""Joint-layer robust tracking controller.

Errors: xi = q_d - q, eta = xi_dot + alpha*xi.  The control input is the
high-gain law u = k1*eta + (1/epsilon)*rho(||z1||)^2 * eta, where rho is a
quadratic polynomial dominating the lumped model torque chi along the
trajectory envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import BoundConstants, InvalidInputError, N_JOINTS, _as_vec4


@dataclass(frozen=True)
class JointGains:
    k1: float
    epsilon: float
    alpha: float

    def __post_init__(self):
        for name in ("k1", "epsilon", "alpha"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidInputError(f"JointGains.{name} must be > 0")


@dataclass(frozen=True)
class RhoCoeffs:
    """rho(s) = rho1 + rho2*s + rho3*s^2, nonnegative coefficients."""

    rho1: float
    rho2: float
    rho3: float

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho3"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise InvalidInputError(f"RhoCoeffs.{name} must be >= 0")


@dataclass(frozen=True)
class JointErrors:
    xi: np.ndarray
    eta: np.ndarray
    z1_norm: float


@dataclass(frozen=True)
class TrajectoryEnvelope:
    """Worst-case desired-trajectory magnitudes used in bound derivations."""

    vel_max: float    # max ||qdot_d||
    acc_max: float    # max ||qddot_d||

    def __post_init__(self):
        if self.vel_max < 0 or self.acc_max < 0:
            raise InvalidInputError("envelope magnitudes must be >= 0")


def joint_errors(q, qdot, q_d, qdot_d, alpha: float) -> JointErrors:
    """Tracking and filtered errors from measured and desired joint state."""
    q = _as_vec4(q, "q")
    qdot = _as_vec4(qdot, "qdot")
    q_d = _as_vec4(q_d, "q_d")
    qdot_d = _as_vec4(qdot_d, "qdot_d")
    xi = q_d - q
    eta = (qdot_d - qdot) + alpha * xi
    z1 = math.sqrt(float(xi @ xi + eta @ eta))
    return JointErrors(xi=xi, eta=eta, z1_norm=z1)


def rho(z1_norm: float, c: RhoCoeffs) -> float:
    """The quadratic domination polynomial; nondecreasing in its argument."""
    if z1_norm < 0:
        raise InvalidInputError("z1_norm must be >= 0")
    return c.rho1 + c.rho2 * z1_norm + c.rho3 * z1_norm ** 2


def joint_control(e: JointErrors, g: JointGains, c: RhoCoeffs) -> np.ndarray:
    """u = k1*eta + rho(||z1||)^2/epsilon * eta (zero exactly when eta is zero)."""
    gain = g.k1 + rho(e.z1_norm, c) ** 2 / g.epsilon
    return gain * e.eta


def saturate(u: np.ndarray, limit) -> tuple[np.ndarray, bool]:
    """Optional symmetric input saturation; returns (clipped, was_active)."""
    if limit is None or limit <= 0 or math.isinf(limit):
        return u, False
    clipped = np.clip(u, -limit, limit)
    return clipped, bool(np.any(clipped != u))


def rho_coeffs_from_bounds(b: BoundConstants, env: TrajectoryEnvelope,
                           alpha: float) -> RhoCoeffs:
    """Conservative rho coefficients from the structural bounds.

    Interval arithmetic on chi = M(qdd_d + alpha*xi_dot) + C(q,qd)(qd_d +
    alpha*xi) + G + P + d, using ||xi_dot|| <= (1+alpha)||z1|| and
    ||qd|| <= vel_max + (1+alpha)||z1||:

        rho1 = c_M*A + c_c*V^2 + c_g + c_p1 + c_p2*V + d_exo
        rho2 = c_M*alpha*(1+alpha) + c_c*V*(2*alpha+1) + c_p2*(1+alpha)
        rho3 = c_c*alpha*(1+alpha)
    """
    if alpha <= 0:
        raise InvalidInputError("alpha must be > 0")
    V, A = env.vel_max, env.acc_max
    a1 = 1.0 + alpha
    return RhoCoeffs(
        rho1=b.c_M * A + b.c_c * V * V + b.c_g + b.c_p1 + b.c_p2 * V + b.d_exo,
        rho2=b.c_M * alpha * a1 + b.c_c * V * (2.0 * alpha + 1.0) + b.c_p2 * a1,
        rho3=b.c_c * alpha * a1,
    )
