"""Four-link human-exoskeleton rigid-body model.

The plant is a sagittal-plane bipedal system: two independent two-link legs
(thigh + shank) hanging from a supported trunk.  Trunk dynamics are excluded,
so the inertia matrix is block diagonal with one 2x2 block per leg.

Conventions
-----------
* Joint order in every length-4 vector: left hip, left knee, right hip,
  right knee.
* q = 0 means both legs hanging vertically.  Hip flexion (thigh forward) is
  positive.  Knee flexion (heel toward buttocks) is positive, so the shank's
  absolute angle from the downward vertical is ``q_hip - q_knee``.
* Units are SI throughout: rad, rad/s, kg, m, N.m.

With this convention the hanging posture is a stable equilibrium,
``G(0) = 0``, and the unforced conservative system preserves
``E = 0.5 q'.M(q).q' + U(q)`` exactly, which the integrator tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 4

# (hip, knee) index pairs for the left and right leg blocks.
LEG_SLICES = (slice(0, 2), slice(2, 4))


class InvalidInputError(ValueError):
    """Raised when an operation receives non-finite or ill-formed input."""


class SingularMassMatrixError(RuntimeError):
    """Raised when the inertia matrix is numerically singular (internal fault)."""


def _as_vec4(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (N_JOINTS,):
        raise InvalidInputError(f"{name} must have shape (4,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return v


@dataclass(frozen=True)
class LinkParams:
    """One rigid link: combined human segment plus exoskeleton attachment.

    Attributes:
        mass: link mass (kg).
        length: proximal-to-distal joint distance (m).
        com: center-of-mass offset from the proximal joint (m).
        inertia: rotational inertia about the center of mass (kg.m^2).
    """

    mass: float
    length: float
    com: float
    inertia: float

    def __post_init__(self):
        for name in ("mass", "length", "com", "inertia"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise InvalidInputError(f"LinkParams.{name} must be finite and > 0, got {v}")
        if self.com > self.length:
            raise InvalidInputError("LinkParams.com must not exceed link length")


@dataclass(frozen=True)
class PlantParams:
    """All physical constants of the four-link plant.

    Vector fields are 4-tuples in joint order.  ``joint_stiffness`` and
    ``joint_damping`` parameterize the viscoelastic term P; the stiffness
    torque saturates smoothly at ``joint_stiffness * stiffness_range`` so the
    bound ``|P| <= c_p1 + c_p2 |qdot|`` holds on the whole configuration
    space.  The disturbance is a deterministic per-joint sinusoid.
    """

    thigh_left: LinkParams
    shank_left: LinkParams
    thigh_right: LinkParams
    shank_right: LinkParams
    joint_damping: tuple = (1.0, 1.0, 1.0, 1.0)
    joint_stiffness: tuple = (0.0, 0.0, 0.0, 0.0)
    rest_angle: tuple = (0.0, 0.0, 0.0, 0.0)
    stiffness_range: tuple = (0.7, 0.7, 0.7, 0.7)
    dist_amplitude: tuple = (0.0, 0.0, 0.0, 0.0)
    dist_frequency: tuple = (0.5, 0.5, 0.5, 0.5)
    dist_phase: tuple = (0.0, 0.0, 0.0, 0.0)
    gravity: float = 9.81
    stop_lower: tuple = (-0.6, -0.3, -0.6, -0.3)
    stop_upper: tuple = (2.2, 2.5, 2.2, 2.5)

    def __post_init__(self):
        for name in ("joint_damping", "joint_stiffness", "rest_angle", "stiffness_range",
                     "dist_amplitude", "dist_frequency", "dist_phase",
                     "stop_lower", "stop_upper"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != N_JOINTS or not all(math.isfinite(x) for x in v):
                raise InvalidInputError(f"PlantParams.{name} must be 4 finite numbers")
            object.__setattr__(self, name, v)
        if any(a < 0 for a in self.dist_amplitude):
            raise InvalidInputError("disturbance amplitude must be >= 0")
        if any(d < 0 for d in self.joint_damping) or any(k < 0 for k in self.joint_stiffness):
            raise InvalidInputError("damping and stiffness must be >= 0")
        if any(r <= 0 for r in self.stiffness_range):
            raise InvalidInputError("stiffness_range must be > 0")
        if not math.isfinite(self.gravity) or self.gravity < 0:
            raise InvalidInputError("gravity must be finite and >= 0")
        if any(lo >= hi for lo, hi in zip(self.stop_lower, self.stop_upper)):
            raise InvalidInputError("mechanical stops must satisfy lower < upper")

    def legs(self):
        """(thigh, shank) pairs for the left and right leg."""
        return ((self.thigh_left, self.shank_left), (self.thigh_right, self.shank_right))

    def disturbance_bound(self) -> float:
        """Exact bound on ||d(t)||: the amplitude vector's Euclidean norm."""
        return float(np.linalg.norm(self.dist_amplitude))


@dataclass
class ExoState:
    """Joint angles and velocities of the four-link system at time t."""

    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = _as_vec4(self.q, "q")
        self.qdot = _as_vec4(self.qdot, "qdot")
        if not math.isfinite(self.t):
            raise InvalidInputError("t must be finite")

    def within_stops(self, p: PlantParams) -> bool:
        return bool(np.all(self.q >= np.asarray(p.stop_lower) - 1e-12)
                    and np.all(self.q <= np.asarray(p.stop_upper) + 1e-12))


@dataclass(frozen=True)
class BoundConstants:
    """Numeric instantiations of the model's structural bound constants.

    Plant side: c_m, c_M sandwich the inertia eigenvalues on the sampled
    domain, ||C|| <= c_c ||qdot||, ||G|| <= c_g, ||P|| <= c_p1 + c_p2 ||qdot||,
    ||d|| <= d_exo.  Motor side: per-motor inertia, damping, friction and
    effectiveness intervals shared by all eight motors.
    """

    c_m: float
    c_M: float
    c_c: float
    c_g: float
    c_p1: float
    c_p2: float
    d_exo: float
    c_j: float
    c_J: float
    c_d: float
    c_D: float
    c_de: float
    c_De: float
    b_lower: float
    b_upper: float

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, f)) for f in (
                "c_m", "c_M", "c_c", "c_g", "c_p1", "c_p2", "d_exo",
                "c_j", "c_J", "c_d", "c_D", "c_de", "c_De", "b_lower", "b_upper")):
            raise InvalidInputError("BoundConstants entries must be finite")
        nonneg = ("c_m", "c_M", "c_c", "c_g", "c_p1", "c_p2", "d_exo",
                  "c_j", "c_J", "c_D", "c_De", "b_lower", "b_upper")
        if any(getattr(self, f) < 0 for f in nonneg):
            raise InvalidInputError("bound constants (except c_d, c_de) must be >= 0")
        if self.c_m > self.c_M:
            raise InvalidInputError("c_m must be <= c_M")
        if self.c_j > self.c_J:
            raise InvalidInputError("c_j must be <= c_J")
        if self.c_d > self.c_D or self.c_de > self.c_De:
            raise InvalidInputError("interval bounds out of order")
        if self.b_lower > self.b_upper:
            raise InvalidInputError("b_lower must be <= b_upper")


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned state box used for bound estimation and validation."""

    q_lower: tuple
    q_upper: tuple
    qdot_max: tuple

    def __post_init__(self):
        for name in ("q_lower", "q_upper", "qdot_max"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != N_JOINTS or not all(math.isfinite(x) for x in v):
                raise InvalidInputError(f"DomainBox.{name} must be 4 finite numbers")
            object.__setattr__(self, name, v)
        if any(lo > hi for lo, hi in zip(self.q_lower, self.q_upper)):
            raise InvalidInputError("empty domain: q_lower > q_upper")
        if any(v < 0 for v in self.qdot_max):
            raise InvalidInputError("qdot_max must be >= 0")

    def sample(self, rng: np.random.Generator, n: int):
        q = rng.uniform(self.q_lower, self.q_upper, size=(n, N_JOINTS))
        qd = rng.uniform(-np.asarray(self.qdot_max), self.qdot_max, size=(n, N_JOINTS))
        return q, qd


def _leg_block_mass(thigh: LinkParams, shank: LinkParams, knee: float):
    """2x2 inertia block of one leg at knee flexion angle `knee`."""
    m2l1lc2 = shank.mass * thigh.length * shank.com
    a = (thigh.inertia + thigh.mass * thigh.com ** 2
         + shank.inertia + shank.mass * (thigh.length ** 2 + shank.com ** 2))
    ck = math.cos(knee)
    m11 = a + 2.0 * m2l1lc2 * ck
    m12 = -(shank.inertia + shank.mass * shank.com ** 2 + m2l1lc2 * ck)
    m22 = shank.inertia + shank.mass * shank.com ** 2
    return m11, m12, m22


def mass_matrix(q, p: PlantParams) -> np.ndarray:
    """Symmetric positive-definite inertia matrix M(q).

    Block diagonal: the two legs couple only through the excluded trunk.
    Each block is the standard two-link form, written in the anatomical
    (hip-minus-knee) shank convention, so the off-diagonal entries are
    negative.
    """
    q = _as_vec4(q, "q")
    M = np.zeros((N_JOINTS, N_JOINTS))
    for (thigh, shank), sl in zip(p.legs(), LEG_SLICES):
        m11, m12, m22 = _leg_block_mass(thigh, shank, q[sl.start + 1])
        M[sl, sl] = ((m11, m12), (m12, m22))
    return M


def coriolis_matrix(q, qdot, p: PlantParams) -> np.ndarray:
    """Centripetal-Coriolis matrix from Christoffel symbols.

    Built so that 0.5*Mdot - C is exactly skew symmetric along trajectories,
    and C is homogeneous of degree one in qdot.
    """
    q = _as_vec4(q, "q")
    qdot = _as_vec4(qdot, "qdot")
    C = np.zeros((N_JOINTS, N_JOINTS))
    for (thigh, shank), sl in zip(p.legs(), LEG_SLICES):
        h = shank.mass * thigh.length * shank.com * math.sin(q[sl.start + 1])
        sd, kd = qdot[sl.start], qdot[sl.start + 1]
        C[sl, sl] = ((-h * kd, -h * (sd - kd)), (h * sd, 0.0))
    return C


def gravity_vector(q, p: PlantParams) -> np.ndarray:
    """Gravity torque G(q) = dU/dq; zero at the hanging posture."""
    q = _as_vec4(q, "q")
    G = np.zeros(N_JOINTS)
    g = p.gravity
    for (thigh, shank), sl in zip(p.legs(), LEG_SLICES):
        s, k = q[sl.start], q[sl.start + 1]
        hip_coef = (thigh.mass * thigh.com + shank.mass * thigh.length) * g
        knee_coef = shank.mass * shank.com * g
        G[sl.start] = hip_coef * math.sin(s) + knee_coef * math.sin(s - k)
        G[sl.start + 1] = -knee_coef * math.sin(s - k)
    return G


def viscoelastic(q, qdot, p: PlantParams) -> np.ndarray:
    """Damping and viscoelastic torque P(q, qdot).

    Stiffness about the rest posture saturates smoothly (tanh) at
    ``stiffness * stiffness_range`` per joint; damping is linear in qdot.
    """
    q = _as_vec4(q, "q")
    qdot = _as_vec4(qdot, "qdot")
    k = np.asarray(p.joint_stiffness)
    r = np.asarray(p.stiffness_range)
    stiff = k * r * np.tanh((q - np.asarray(p.rest_angle)) / r)
    return stiff + np.asarray(p.joint_damping) * qdot


def stiffness_torque_bound(p: PlantParams) -> float:
    """Exact bound on the stiffness part of P (the c_p1 candidate)."""
    per_joint = np.asarray(p.joint_stiffness) * np.asarray(p.stiffness_range)
    return float(np.linalg.norm(per_joint))


def disturbance(t: float, p: PlantParams) -> np.ndarray:
    """Bounded deterministic disturbance d(t): per-joint sinusoids."""
    if not math.isfinite(t):
        raise InvalidInputError("t must be finite")
    amp = np.asarray(p.dist_amplitude)
    w = 2.0 * math.pi * np.asarray(p.dist_frequency)
    return amp * np.sin(w * t + np.asarray(p.dist_phase))


def _solve_spd(M: np.ndarray, rhs: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 0.0 or sv[0] / sv[-1] > cond_limit:
        raise SingularMassMatrixError(
            f"inertia matrix numerically singular (cond ~ {sv[0] / max(sv[-1], 1e-300):.3e})")
    return np.linalg.solve(M, rhs)


def forward_dynamics(state: ExoState, tau_e, p: PlantParams) -> np.ndarray:
    """Joint accelerations from M qdd + C qd + G + P + d = tau_e.

    Solved by factorization (never an explicit inverse).  A condition number
    above 1e12 raises SingularMassMatrixError; with positive link parameters
    this is unreachable and treated as an internal fault.
    """
    tau_e = _as_vec4(tau_e, "tau_e")
    M = mass_matrix(state.q, p)
    rhs = (tau_e
           - coriolis_matrix(state.q, state.qdot, p) @ state.qdot
           - gravity_vector(state.q, p)
           - viscoelastic(state.q, state.qdot, p)
           - disturbance(state.t, p))
    return _solve_spd(M, rhs)


def potential_energy(q, p: PlantParams) -> np.ndarray:
    """Gravitational potential U(q), shifted so U(0) = 0."""
    q = _as_vec4(q, "q")
    u = 0.0
    g = p.gravity
    for (thigh, shank), sl in zip(p.legs(), LEG_SLICES):
        s, k = q[sl.start], q[sl.start + 1]
        hip_coef = (thigh.mass * thigh.com + shank.mass * thigh.length) * g
        knee_coef = shank.mass * shank.com * g
        u += hip_coef * (1.0 - math.cos(s)) + knee_coef * (1.0 - math.cos(s - k))
    return float(u)


def total_energy(state: ExoState, p: PlantParams) -> float:
    """E = kinetic + gravitational potential (conserved when unforced and P=d=0)."""
    M = mass_matrix(state.q, p)
    return float(0.5 * state.qdot @ M @ state.qdot + potential_energy(state.q, p))


# Motor-side interval defaults used when estimate_bounds is called without a
# motor bank; mirrors the default bank in presets.py.
_DEFAULT_MOTOR_SIDE = dict(c_j=0.95, c_J=1.05, c_d=0.45, c_D=0.55,
                           c_de=-0.04, c_De=0.04, b_lower=25.0, b_upper=26.0)


def estimate_bounds(p: PlantParams, domain: DomainBox, motor_intervals=None,
                    margin: float = 0.10, seed: int = 0,
                    n_grid: int = 400, n_random: int = 4000) -> BoundConstants:
    """Estimate the plant-side bound constants on a state box.

    Dense 1-D/2-D grids exploit the block structure (M depends only on the
    knee angles, G on one leg's two angles), topped up with seeded random
    sampling; a relative safety margin widens every sampled estimate.  The
    motor-side constants are exact interval data, taken from
    ``motor_intervals`` (a MotorIntervals or a mapping) without margin.

    Deterministic for a fixed seed.
    """
    if not (0.0 <= margin < 1.0):
        raise InvalidInputError("margin must be in [0, 1)")
    rng = np.random.default_rng(seed)

    # Inertia eigenvalue range: sweep each leg's knee angle densely.
    eig_min, eig_max = math.inf, 0.0
    for leg_idx, (thigh, shank) in enumerate(p.legs()):
        lo = p.stop_lower[2 * leg_idx + 1]
        hi = p.stop_upper[2 * leg_idx + 1]
        lo = max(lo, domain.q_lower[2 * leg_idx + 1])
        hi = min(hi, domain.q_upper[2 * leg_idx + 1])
        for k in np.linspace(lo, hi, n_grid):
            m11, m12, m22 = _leg_block_mass(thigh, shank, k)
            tr, det = m11 + m22, m11 * m22 - m12 * m12
            disc = math.sqrt(max(tr * tr / 4.0 - det, 0.0))
            eig_min = min(eig_min, tr / 2.0 - disc)
            eig_max = max(eig_max, tr / 2.0 + disc)

    # ||C|| / ||qdot|| ratio over sampled configurations and directions.
    q_s, qd_s = domain.sample(rng, n_random)
    c_c = 0.0
    for q, qd in zip(q_s, qd_s):
        nv = np.linalg.norm(qd)
        if nv > 1e-12:
            c_c = max(c_c, np.linalg.norm(coriolis_matrix(q, qd, p), 2) / nv)

    # ||G|| decomposes over legs, so per-leg 2-D grids give the global max.
    g_max_sq = 0.0
    for leg_idx, (thigh, shank) in enumerate(p.legs()):
        s_grid = np.linspace(domain.q_lower[2 * leg_idx], domain.q_upper[2 * leg_idx], n_grid // 2)
        k_grid = np.linspace(domain.q_lower[2 * leg_idx + 1], domain.q_upper[2 * leg_idx + 1], n_grid // 2)
        ss, kk = np.meshgrid(s_grid, k_grid)
        hip_coef = (thigh.mass * thigh.com + shank.mass * thigh.length) * p.gravity
        knee_coef = shank.mass * shank.com * p.gravity
        g1 = hip_coef * np.sin(ss) + knee_coef * np.sin(ss - kk)
        g2 = -knee_coef * np.sin(ss - kk)
        g_max_sq += float(np.max(g1 ** 2 + g2 ** 2))
    c_g = math.sqrt(g_max_sq)

    # Stiffness part of P over per-joint ranges (monotone in q: endpoints
    # suffice), damping coefficient reported directly.
    stiff_sq = 0.0
    for j in range(N_JOINTS):
        k, r, rest = p.joint_stiffness[j], p.stiffness_range[j], p.rest_angle[j]
        ends = [abs(k * r * math.tanh((qv - rest) / r))
                for qv in (domain.q_lower[j], domain.q_upper[j])]
        stiff_sq += max(ends) ** 2
    c_p1 = math.sqrt(stiff_sq)
    c_p2 = max(p.joint_damping)

    grow = 1.0 + margin
    motor = dict(_DEFAULT_MOTOR_SIDE)
    if motor_intervals is not None:
        if hasattr(motor_intervals, "as_dict"):
            motor.update(motor_intervals.as_dict())
        else:
            motor.update(motor_intervals)
    return BoundConstants(
        c_m=eig_min * (1.0 - margin),
        c_M=eig_max * grow,
        c_c=c_c * grow,
        c_g=c_g * grow,
        c_p1=c_p1 * grow,
        c_p2=c_p2,
        d_exo=p.disturbance_bound(),
        **motor,
    )
