"""Fixed-step closed-loop simulation of the plant, motors and both control layers.

Per tick (zero-order hold at the configured rate): read states, form joint
errors, evaluate the joint-layer input, allocate lead/follower roles from its
sign, route the lead torque through the switched map, then integrate plant
and follower motors with classical RK4.  The joint-layer input and the lead
torque are frozen across the step; the follower's sliding-mode law is part of
the ODE right-hand side and is re-evaluated at every RK4 sub-stage.  Lead
motor coordinates are algebraically slaved to the joint through the rigid
transmission and integrated consistently (theta_lead' = ratio * qdot).

Clamped (non-actuated) joints are held on their reference exactly: their
coordinates are re-pinned each tick and driven with the reference derivatives
inside the integrator, which is the ideal limit of the stiff virtual clamps
used to keep a leg standing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import dynamics as dyn
from .dynamics import (BoundConstants, DomainBox, ExoState, InvalidInputError,
                       N_JOINTS, PlantParams)
from .joint_control import (JointErrors, JointGains, RhoCoeffs,
                            TrajectoryEnvelope, joint_control, joint_errors,
                            rho, rho_coeffs_from_bounds, saturate)
from .motors import (EXTENSION, FLEXION, MotorBank, N_MOTORS, SwitchSignals,
                     exo_torque)
from .switching import AllocationState, DwellConfig, allocate
from .sync_control import (ChiBounds, LeadEnvelope, SyncGains,
                           check_gain_conditions, chi_bounds_from_params,
                           control_extension, sync_errors)
from .trajectory import HOLD, TrajectorySpec, desired_trajectory

AUTO = "auto"


class DivergenceError(RuntimeError):
    """Raised when the integration produces a non-finite or out-of-stops state.

    Carries the partial tick log produced before the failure.
    """

    def __init__(self, message, partial_log=None, switch_log=None):
        super().__init__(message)
        self.partial_log = partial_log
        self.switch_log = switch_log or []


@dataclass(frozen=True)
class Scenario:
    """Everything needed for one deterministic run."""

    duration: float
    step: float
    plant: PlantParams
    motors: MotorBank
    joint_gains: JointGains
    sync_gains: SyncGains
    traj: TrajectorySpec
    rho_auto: bool = False
    rho_coeffs: RhoCoeffs = RhoCoeffs(0.0, 0.0, 0.0)
    active_joints: tuple = (0, 1, 2, 3)
    xi0: tuple = (0.0, 0.0, 0.0, 0.0)
    initial_lead: tuple = (FLEXION,) * N_JOINTS
    u_saturation: float = 0.0          # 0 disables saturation
    dwell_n0: float = 1.0
    dwell_tau_a: float = 0.0           # 0 = derive ln(mu)/lambda_rho
    dwell_mu: float = 0.0              # 0 = derive from motor intervals
    dwell_lambda: float = 0.0          # 0 = derive from gains and intervals
    dwell_min_hold: float = 0.0
    monitor_guub: bool = True
    monitor_sync: bool = True
    monitor_dwell: bool = True
    envelope_inflation: float = 1.2
    qdot_box: tuple = (4.0, 4.0, 4.0, 4.0)
    seed: int = 0

    def __post_init__(self):
        if not (self.step > 0 and self.duration >= self.step):
            raise InvalidInputError("need step > 0 and duration >= step")
        aj = tuple(sorted(set(int(j) for j in self.active_joints)))
        if any(j < 0 or j >= N_JOINTS for j in aj):
            raise InvalidInputError("active_joints must be a subset of 0..3")
        object.__setattr__(self, "active_joints", aj)
        object.__setattr__(self, "xi0", tuple(float(x) for x in self.xi0))
        object.__setattr__(self, "qdot_box", tuple(float(x) for x in self.qdot_box))
        lead = (tuple([self.initial_lead] * N_JOINTS)
                if isinstance(self.initial_lead, str) else tuple(self.initial_lead))
        if len(lead) != N_JOINTS or any(r not in (FLEXION, EXTENSION) for r in lead):
            raise InvalidInputError("initial_lead must name flexion/extension per joint")
        object.__setattr__(self, "initial_lead", lead)
        if len(self.xi0) != N_JOINTS:
            raise InvalidInputError("xi0 must have 4 entries")
        if self.envelope_inflation < 1.0:
            raise InvalidInputError("envelope_inflation must be >= 1")
        if self.u_saturation < 0:
            raise InvalidInputError("u_saturation must be >= 0 (0 = off)")

    @property
    def clamped_joints(self) -> tuple:
        return tuple(j for j in range(N_JOINTS) if j not in self.active_joints)

    def n_ticks(self) -> int:
        return int(round(self.duration / self.step))

    def validate(self):
        """Reject configurations that are inconsistent before starting."""
        lo = np.asarray(self.plant.stop_lower)
        hi = np.asarray(self.plant.stop_upper)
        t = np.linspace(0.0, self.duration, 2001)
        q_d, _, _ = desired_trajectory(self.traj, t)
        if np.any(q_d < lo) or np.any(q_d > hi):
            raise InvalidInputError("desired trajectory leaves the mechanical stops")
        q0 = q_d[0] - np.asarray(self.xi0)
        if np.any(q0 < lo) or np.any(q0 > hi):
            raise InvalidInputError("initial condition violates the mechanical stops")


@dataclass(frozen=True)
class ResolvedConstants:
    """Bound constants and certificate parameters fixed at run start."""

    bounds: BoundConstants
    rho_coeffs: RhoCoeffs
    chi_bounds: tuple            # per joint pair
    gain_verdicts: tuple         # per joint pair
    dwell: DwellConfig
    a_joint: float               # min(1/2, c_m/2)
    b_joint: float               # max(1/2, c_M/2)
    delta: float                 # (1/b) min(alpha, b_lower*k1)
    a_pair: float
    b_pair: float
    mu: float
    lambda_rho: float


def resolve_constants(sc: Scenario) -> ResolvedConstants:
    """Instantiate every certificate constant from the scenario."""
    box = DomainBox(sc.plant.stop_lower, sc.plant.stop_upper, sc.qdot_box)
    bounds = dyn.estimate_bounds(sc.plant, box, sc.motors.intervals, seed=sc.seed)

    infl = sc.envelope_inflation
    if sc.rho_auto:
        env = TrajectoryEnvelope(vel_max=sc.traj.vel_max_norm() * infl,
                                 acc_max=sc.traj.acc_max_norm() * infl)
        rho_c = rho_coeffs_from_bounds(bounds, env, sc.joint_gains.alpha)
    else:
        rho_c = sc.rho_coeffs

    chi_bounds, verdicts = [], []
    for j in range(N_JOINTS):
        ratio = sc.motors.motors[sc.motors.pair(j)[0]].transmission_ratio
        tr = sc.traj.joints[j]
        env_j = LeadEnvelope(vel_max=ratio * tr.vel_max() * infl,
                             acc_max=ratio * tr.acc_max() * infl)
        cb = chi_bounds_from_params(sc.motors.intervals, env_j, sc.sync_gains.beta)
        chi_bounds.append(cb)
        verdicts.append(check_gain_conditions(sc.sync_gains, cb,
                                              sc.motors.intervals.b_lower))

    a_j = min(0.5, 0.5 * bounds.c_m)
    b_j = max(0.5, 0.5 * bounds.c_M)
    delta = min(sc.joint_gains.alpha, bounds.b_lower * sc.joint_gains.k1) / b_j
    a_p = min(0.5, 0.5 * bounds.c_j)
    b_p = max(0.5, 0.5 * bounds.c_J)
    mu = sc.dwell_mu if sc.dwell_mu > 0 else b_p / a_p
    lam = (sc.dwell_lambda if sc.dwell_lambda > 0 else
           min(sc.sync_gains.beta, bounds.b_lower * sc.sync_gains.k2) / b_p)
    tau_a = sc.dwell_tau_a if sc.dwell_tau_a > 0 else max(math.log(mu) / lam, sc.step)
    dwell = DwellConfig(n0=sc.dwell_n0, tau_a=tau_a, mu=mu, lambda_rho=lam,
                        min_hold=sc.dwell_min_hold)
    return ResolvedConstants(bounds=bounds, rho_coeffs=rho_c,
                             chi_bounds=tuple(chi_bounds),
                             gain_verdicts=tuple(verdicts), dwell=dwell,
                             a_joint=a_j, b_joint=b_j, delta=delta,
                             a_pair=a_p, b_pair=b_p, mu=mu, lambda_rho=lam)


# --------------------------------------------------------------------------
# tick log

LOG_SCALARS = ("t", "V", "chi_norm", "rho_val", "rho_ok", "sat_active")
LOG_VEC4 = ("q", "qdot", "q_d", "u", "xi", "eta", "e", "r", "V_rho", "lead")
LOG_VEC8 = ("theta", "thetadot", "u_n", "sigma")


@dataclass
class TickLog:
    """Column-major record of every tick; arrays are (n_rows,) or (n_rows, k)."""

    data: dict
    rows: int

    @staticmethod
    def empty(n_rows: int) -> "TickLog":
        data = {}
        for name in LOG_SCALARS:
            data[name] = np.zeros(n_rows)
        for name in LOG_VEC4:
            data[name] = np.zeros((n_rows, N_JOINTS))
        for name in LOG_VEC8:
            data[name] = np.zeros((n_rows, N_MOTORS))
        return TickLog(data=data, rows=0)

    def __getattr__(self, name):
        try:
            return self.data[name][: self.rows]
        except KeyError:
            raise AttributeError(name)

    def truncated(self) -> "TickLog":
        return TickLog(data={k: v[: self.rows] for k, v in self.data.items()},
                       rows=self.rows)


@dataclass
class SimResult:
    scenario: Scenario
    constants: ResolvedConstants
    log: TickLog
    switch_log: list
    deferral_log: list
    report: "object" = None  # CertificateReport, attached by run()


# --------------------------------------------------------------------------
# fast plant/motor evaluation (plain-float math; pinned to the public ops by
# tests/test_engine.py::test_rhs_matches_reference_ops)

class _FastModel:
    def __init__(self, sc: Scenario):
        p = sc.plant
        self.g = p.gravity
        self.legs = []
        for thigh, shank in p.legs():
            i2m = shank.inertia + shank.mass * shank.com ** 2
            self.legs.append((
                thigh.inertia + thigh.mass * thigh.com ** 2
                + shank.inertia + shank.mass * (thigh.length ** 2 + shank.com ** 2),
                shank.mass * thigh.length * shank.com,      # b = m2 l1 lc2
                i2m,                                        # I2 + m2 lc2^2
                (thigh.mass * thigh.com + shank.mass * thigh.length) * p.gravity,
                shank.mass * shank.com * p.gravity,
            ))
        self.damp = p.joint_damping
        self.stiff = p.joint_stiffness
        self.rest = p.rest_angle
        self.srange = p.stiffness_range
        self.damp_amp = p.dist_amplitude
        self.damp_w = tuple(2.0 * math.pi * f for f in p.dist_frequency)
        self.damp_ph = p.dist_phase
        self.free = tuple(j in sc.active_joints for j in range(N_JOINTS))
        mot = sc.motors
        self.pairs = tuple(mot.pair(j) for j in range(N_JOINTS))
        m = mot.motors
        self.mJ = tuple(x.inertia for x in m)
        self.mD = tuple(x.damping for x in m)
        self.mB = tuple(x.effectiveness for x in m)
        self.mRatio = tuple(x.transmission_ratio for x in m)
        self.mOff = tuple(x.angle_offset for x in m)
        self.mFb = tuple(x.friction_bias for x in m)
        self.mFa = tuple(x.friction_amp for x in m)
        self.mFw = tuple(2.0 * math.pi * x.friction_freq for x in m)
        self.mFp = tuple(x.friction_phase for x in m)
        sg = sc.sync_gains
        self.k2, self.k3, self.k4 = sg.k2, sg.k3, sg.k4
        self.beta, self.blayer = sg.beta, sg.boundary_layer
        self.is_flexion = tuple(x.role == FLEXION for x in m)

    def friction(self, n, t):
        return self.mFb[n] + self.mFa[n] * math.sin(self.mFw[n] * t + self.mFp[n])

    def plant_terms(self, q, qd, t):
        """Per-leg mass blocks and the torque-side terms C qd + G + P + d.

        Returns (blocks, bias, hs) with blocks = [(m11,m12,m22), ...] and
        bias[j] = (C qd + G + P + d)[j]; hs are the per-leg Coriolis factors.
        """
        blocks, hs = [], []
        bias = [0.0] * N_JOINTS
        for leg in range(2):
            a, bcoef, i2m, hipg, kneeg = self.legs[leg]
            i0 = 2 * leg
            s, k = q[i0], q[i0 + 1]
            sd, kd = qd[i0], qd[i0 + 1]
            ck, sk = math.cos(k), math.sin(k)
            m12 = -(i2m + bcoef * ck)
            blocks.append((a + 2.0 * bcoef * ck, m12, i2m))
            h = bcoef * sk
            hs.append(h)
            sink = math.sin(s - k)
            g1 = hipg * math.sin(s) + kneeg * sink
            g2 = -kneeg * sink
            # C qd rows: (-h*kd)*sd + (-h*(sd-kd))*kd ; (h*sd)*sd
            bias[i0] = -h * kd * sd - h * (sd - kd) * kd + g1
            bias[i0 + 1] = h * sd * sd + g2
        for j in range(N_JOINTS):
            dj = (self.stiff[j] * self.srange[j]
                  * math.tanh((q[j] - self.rest[j]) / self.srange[j])
                  + self.damp[j] * qd[j]
                  + self.damp_amp[j] * math.sin(self.damp_w[j] * t + self.damp_ph[j]))
            bias[j] += dj
        return blocks, bias, hs

    def joint_accel(self, blocks, bias, tau, qdd_ref):
        """Solve for joint accelerations; clamped joints follow qdd_ref.

        Free 2x2 blocks are solved with a closed-form Cholesky factorization.
        """
        qdd = [0.0] * N_JOINTS
        for leg in range(2):
            i0 = 2 * leg
            m11, m12, m22 = blocks[leg]
            f1, f2 = self.free[i0], self.free[i0 + 1]
            r1 = tau[i0] - bias[i0]
            r2 = tau[i0 + 1] - bias[i0 + 1]
            if f1 and f2:
                l11 = math.sqrt(m11)
                l21 = m12 / l11
                l22 = math.sqrt(m22 - l21 * l21)
                y1 = r1 / l11
                y2 = (r2 - l21 * y1) / l22
                x2 = y2 / l22
                qdd[i0 + 1] = x2
                qdd[i0] = (y1 - l21 * x2) / l11
            elif f1:
                qdd[i0 + 1] = qdd_ref[i0 + 1]
                qdd[i0] = (r1 - m12 * qdd_ref[i0 + 1]) / m11
            elif f2:
                qdd[i0] = qdd_ref[i0]
                qdd[i0 + 1] = (r2 - m12 * qdd_ref[i0]) / m22
            else:
                qdd[i0] = qdd_ref[i0]
                qdd[i0 + 1] = qdd_ref[i0 + 1]
        return qdd

    def sync_input(self, n_follower, e, r):
        """Sliding-mode follower input, sign-flipped for a flexion follower."""
        z2 = math.hypot(e, r)
        if self.blayer > 0.0:
            sw = max(-1.0, min(1.0, r / self.blayer))
        else:
            sw = (r > 0.0) - (r < 0.0)
        u = self.k2 * r + (self.k3 + self.k4 * z2) * sw
        return -u if self.is_flexion[n_follower] else u


def make_rhs(model: _FastModel, tau_e, leads, qdd_ref_fn):
    """ODE right-hand side with tau_e frozen and lead indices fixed.

    leads[j] is the lead motor index of pair j; qdd_ref_fn(t) supplies
    accelerations for clamped joints.
    """
    pairs = model.pairs

    def rhs(t, x):
        q = x[:4].tolist()
        qd = x[4:8].tolist()
        th = x[8:16].tolist()
        thd = x[16:24].tolist()
        blocks, bias, _ = model.plant_terms(q, qd, t)
        qdd = model.joint_accel(blocks, bias, tau_e, qdd_ref_fn(t))
        dth = [0.0] * N_MOTORS
        dthd = [0.0] * N_MOTORS
        for j in range(N_JOINTS):
            fl, ex = pairs[j]
            lead = leads[j]
            fol = ex if lead == fl else fl
            ratio = model.mRatio[lead]
            dth[lead] = ratio * qd[j]
            dthd[lead] = ratio * qdd[j]
            e = th[fl] - th[ex]
            edot = thd[fl] - thd[ex]
            r = edot + model.beta * e
            u_f = model.sync_input(fol, e, r)
            dth[fol] = thd[fol]
            dthd[fol] = (model.mB[fol] * u_f - model.mD[fol] * thd[fol]
                         - model.friction(fol, t)) / model.mJ[fol]
        return np.array(qd + qdd + dth + dthd)

    return rhs


def rk4_step(f, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step."""
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(scenario: Scenario, x: np.ndarray, t: float,
             tau_e=None, leads=None) -> np.ndarray:
    """One engine step of the stacked plant + motor state (reference path).

    Control inputs are held over the step; with tau_e omitted the plant is
    unforced.  Exposed for integrator tests; run() uses the same RHS.
    """
    model = _FastModel(scenario)
    if tau_e is None:
        tau_e = [0.0] * N_JOINTS
    if leads is None:
        leads = [scenario.motors.pair(j)[0] for j in range(N_JOINTS)]
    _, qdd_ref_fn = _reference_functions(scenario)
    rhs = make_rhs(model, list(np.asarray(tau_e, dtype=float)), leads, qdd_ref_fn)
    return rk4_step(rhs, t, np.asarray(x, dtype=float), scenario.step)


def _reference_functions(sc: Scenario):
    """(q_ref(t) full tuple fn, qdd_ref(t) list fn) for clamp driving."""
    traj = sc.traj

    def qdd_ref(t):
        _, _, qdd = desired_trajectory(traj, t)
        return qdd.tolist()

    return traj, qdd_ref


VEL_LIMIT = 200.0  # rad/s, divergence guard


def run(scenario: Scenario, monitors=True) -> SimResult:
    """Execute the scenario and (optionally) evaluate the certificate monitors."""
    from .monitors import build_report  # local import to avoid a cycle

    scenario.validate()
    consts = resolve_constants(scenario)
    model = _FastModel(scenario)
    bank = scenario.motors
    h = scenario.step
    n = scenario.n_ticks()
    log = TickLog.empty(n + 1)
    d = log.data

    q_d0, qd_d0, _ = desired_trajectory(scenario.traj, 0.0)
    q = np.asarray(q_d0, dtype=float) - np.asarray(scenario.xi0)
    qdot = np.asarray(qd_d0, dtype=float).copy()
    for j in scenario.clamped_joints:
        q[j], qdot[j] = q_d0[j], qd_d0[j]

    # Every motor starts on its own taut-cable datum.
    x = np.zeros(16 + 8)
    x[:4], x[4:8] = q, qdot
    for nmot, mp in enumerate(bank.motors):
        jq = mp.joint_index
        x[8 + nmot] = mp.transmission_ratio * q[jq] + mp.angle_offset
        x[16 + nmot] = mp.transmission_ratio * qdot[jq]

    alloc = AllocationState.initial(list(scenario.initial_lead), 0.0)
    lo = np.asarray(scenario.plant.stop_lower)
    hi = np.asarray(scenario.plant.stop_upper)
    _, qdd_ref_fn = _reference_functions(scenario)
    sat_limit = scenario.u_saturation if scenario.u_saturation > 0 else None

    def record(k, t, q_d, qd_d, errs, u, sat_on, signals, tau_e, u_motors):
        d["t"][k] = t
        d["q"][k] = x[:4]
        d["qdot"][k] = x[4:8]
        d["q_d"][k] = q_d
        d["u"][k] = u
        d["sat_active"][k] = float(sat_on)
        d["xi"][k] = errs.xi
        d["eta"][k] = errs.eta
        d["theta"][k] = x[8:16]
        d["thetadot"][k] = x[16:24]
        d["u_n"][k] = u_motors
        d["sigma"][k] = signals.sigma
        M = dyn.mass_matrix(x[:4], scenario.plant)
        d["V"][k] = 0.5 * float(errs.xi @ errs.xi) + 0.5 * float(errs.eta @ M @ errs.eta)
        xid = errs.eta - scenario.joint_gains.alpha * errs.xi
        chi = (M @ (np.asarray(qdd_ref_fn(t)) + scenario.joint_gains.alpha * xid)
               + dyn.coriolis_matrix(x[:4], x[4:8], scenario.plant)
               @ (qd_d + scenario.joint_gains.alpha * errs.xi)
               + dyn.gravity_vector(x[:4], scenario.plant)
               + dyn.viscoelastic(x[:4], x[4:8], scenario.plant)
               + dyn.disturbance(t, scenario.plant))
        chi_n = float(np.linalg.norm(chi))
        rho_v = rho(errs.z1_norm, consts.rho_coeffs)
        d["chi_norm"][k] = chi_n
        d["rho_val"][k] = rho_v
        d["rho_ok"][k] = float(chi_n <= rho_v)
        for j in range(N_JOINTS):
            fl, ex = bank.pair(j)
            e = x[8 + fl] - x[8 + ex]
            r = (x[16 + fl] - x[16 + ex]) + scenario.sync_gains.beta * e
            d["e"][k, j] = e
            d["r"][k, j] = r
            lead_is_fl = alloc.lead_role[j] == FLEXION
            fol = ex if lead_is_fl else fl
            d["V_rho"][k, j] = 0.5 * e * e + 0.5 * model.mJ[fol] * r * r
            d["lead"][k, j] = 1.0 if lead_is_fl else 0.0

    t = 0.0
    for k in range(n + 1):
        # re-pin clamped joints on the reference (kills O(h^5) drift)
        q_d, qd_d, _ = desired_trajectory(scenario.traj, t)
        for j in scenario.clamped_joints:
            x[j], x[4 + j] = q_d[j], qd_d[j]

        errs = joint_errors(x[:4], x[4:8], q_d, qd_d, scenario.joint_gains.alpha)
        u_raw = joint_control(errs, scenario.joint_gains, consts.rho_coeffs)
        u, sat_on = saturate(u_raw, sat_limit)

        prev_roles = list(alloc.lead_role)
        signals, alloc = allocate(u, alloc, t, consts.dwell, bank)
        for j in range(N_JOINTS):
            if alloc.lead_role[j] != prev_roles[j]:
                # new lead snaps onto the joint through its taut transmission
                fl, ex = bank.pair(j)
                new_lead = fl if alloc.lead_role[j] == FLEXION else ex
                mp = bank.motors[new_lead]
                x[8 + new_lead] = mp.transmission_ratio * x[j] + mp.angle_offset
                x[16 + new_lead] = mp.transmission_ratio * x[4 + j]

        tau_e = exo_torque(u, signals, bank)
        leads = []
        u_motors = np.zeros(N_MOTORS)
        for j in range(N_JOINTS):
            fl, ex = bank.pair(j)
            lead = fl if alloc.lead_role[j] == FLEXION else ex
            fol = ex if lead == fl else fl
            leads.append(lead)
            e = x[8 + fl] - x[8 + ex]
            r = (x[16 + fl] - x[16 + ex]) + scenario.sync_gains.beta * e
            u_motors[lead] = u[j]
            u_motors[fol] = model.sync_input(fol, e, r)
        for j in scenario.clamped_joints:
            tau_e[j] = 0.0

        record(k, t, q_d, qd_d, errs, u, sat_on, signals, tau_e, u_motors)
        log.rows = k + 1
        if k == n:
            break

        rhs = make_rhs(model, tau_e.tolist(), leads, qdd_ref_fn)
        x = rk4_step(rhs, t, x, h)
        t = (k + 1) * h

        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"non-finite state at t={t:.4f}s",
                                  log.truncated(), alloc.switch_log)
        if np.any(x[:4] < lo - 1e-9) or np.any(x[:4] > hi + 1e-9):
            raise DivergenceError(f"mechanical stop violated at t={t:.4f}s",
                                  log.truncated(), alloc.switch_log)
        if np.any(np.abs(x[4:8]) > VEL_LIMIT):
            raise DivergenceError(f"velocity runaway at t={t:.4f}s",
                                  log.truncated(), alloc.switch_log)

    result = SimResult(scenario=scenario, constants=consts, log=log.truncated(),
                       switch_log=list(alloc.switch_log),
                       deferral_log=list(alloc.deferral_log))
    if monitors:
        result.report = build_report(result)
    return result
