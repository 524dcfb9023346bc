"""Lead/follower allocation, switch logging, and the average dwell time certificate.

Allocation follows the control-input sign per joint: positive input puts the
flexion motor in the lead, negative the extension motor, zero holds the
previous lead.  An optional minimum hold time defers sign-triggered switches
(hysteresis) so an average dwell time can be enforced rather than merely
observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import InvalidInputError, N_JOINTS
from .motors import EXTENSION, FLEXION, MotorBank, SwitchSignals


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    joint: int
    new_lead: str


@dataclass(frozen=True)
class Deferral:
    time: float
    joint: int
    wanted_lead: str


@dataclass
class AllocationState:
    """Current lead roles plus the append-only switch and deferral logs."""

    lead_role: list
    last_switch_time: list
    switch_log: list = field(default_factory=list)
    deferral_log: list = field(default_factory=list)
    last_time: float = -math.inf

    @staticmethod
    def initial(initial_lead=FLEXION, t0: float = 0.0) -> "AllocationState":
        roles = ([initial_lead] * N_JOINTS if isinstance(initial_lead, str)
                 else list(initial_lead))
        if len(roles) != N_JOINTS or any(r not in (FLEXION, EXTENSION) for r in roles):
            raise InvalidInputError("initial_lead must be 'flexion'/'extension' per joint")
        return AllocationState(lead_role=roles, last_switch_time=[t0] * N_JOINTS)


@dataclass(frozen=True)
class DwellConfig:
    """Average-dwell-time certificate parameters.

    mu is the Lyapunov jump factor b/a of the pair system, lambda_rho its
    inter-switch decay rate; tau_a is admissible when
    tau_a >= ln(mu)/lambda_rho.  min_hold > 0 turns the certificate into an
    enforced property of the allocator.
    """

    n0: float = 1.0
    tau_a: float = 1.0
    mu: float = 1.0
    lambda_rho: float = 1.0
    min_hold: float = 0.0

    def __post_init__(self):
        if self.n0 < 1:
            raise InvalidInputError("n0 must be >= 1")
        if self.tau_a <= 0:
            raise InvalidInputError("tau_a must be > 0")
        if self.mu < 1:
            raise InvalidInputError("mu must be >= 1")
        if self.lambda_rho <= 0:
            raise InvalidInputError("lambda_rho must be > 0")
        if self.min_hold < 0:
            raise InvalidInputError("min_hold must be >= 0")
        if self.min_hold > 0 and self.min_hold < self.min_admissible_tau() - 1e-12:
            raise InvalidInputError(
                "enforced min_hold must be at least ln(mu)/lambda_rho")

    def min_admissible_tau(self) -> float:
        return math.log(self.mu) / self.lambda_rho


def allocate(u, state: AllocationState, t: float, cfg: DwellConfig,
             bank: MotorBank):
    """Assign lead roles from the sign of u and log realized switches.

    Returns (SwitchSignals, AllocationState).  The returned state is the
    input state advanced in place; the allocator is deterministic and the
    logs are append-only.  Time must not regress between calls.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (N_JOINTS,) or not np.all(np.isfinite(u)):
        raise InvalidInputError("u must be 4 finite numbers")
    if t < state.last_time:
        raise InvalidInputError(f"time regression: {t} < {state.last_time}")
    state.last_time = t
    for j in range(N_JOINTS):
        if u[j] == 0.0:
            continue  # tie-break: hold the previous lead
        wanted = FLEXION if u[j] > 0.0 else EXTENSION
        if wanted == state.lead_role[j]:
            continue
        if cfg.min_hold > 0.0 and (t - state.last_switch_time[j]) < cfg.min_hold:
            state.deferral_log.append(Deferral(time=t, joint=j, wanted_lead=wanted))
            continue
        state.lead_role[j] = wanted
        state.last_switch_time[j] = t
        state.switch_log.append(SwitchEvent(time=t, joint=j, new_lead=wanted))
    return SwitchSignals.from_leads(state.lead_role, bank), state


def count_switches(log, t: float, T: float) -> int:
    """Number of realized role changes in the half-open interval (t, T]."""
    return sum(1 for ev in log if t < ev.time <= T)


@dataclass(frozen=True)
class DwellVerdict:
    passed: bool
    count_margin: float        # worst N0 + dt/tau_a - N over checked windows
    tau_ok: bool               # tau_a >= ln(mu)/lambda_rho
    tau_margin: float
    n_switches: int
    min_spacing: float


def dwell_certificate(log, cfg: DwellConfig, T: float, t0: float = 0.0,
                      joint=None) -> DwellVerdict:
    """Check N(T,t) <= N0 + (T-t)/tau_a on every switch-delimited window.

    It suffices to check windows spanning pairs of logged switches: for
    switches i <= j the tightest window contains j-i+1 events over
    t_j - t_i.  Also checks the admissibility condition on tau_a itself.
    """
    times = sorted(ev.time for ev in log
                   if (joint is None or ev.joint == joint) and t0 <= ev.time <= T)
    tau_margin = cfg.tau_a - cfg.min_admissible_tau()
    tau_ok = tau_margin >= -1e-12
    if not times:
        return DwellVerdict(passed=tau_ok, count_margin=float(cfg.n0), tau_ok=tau_ok,
                            tau_margin=tau_margin, n_switches=0, min_spacing=math.inf)
    margin = math.inf
    n = len(times)
    for i in range(n):
        for j in range(i, n):
            allowed = cfg.n0 + (times[j] - times[i]) / cfg.tau_a
            margin = min(margin, allowed - (j - i + 1))
    spacing = min((b - a for a, b in zip(times, times[1:])), default=math.inf)
    return DwellVerdict(passed=tau_ok and margin >= 0.0, count_margin=margin,
                        tau_ok=tau_ok, tau_margin=tau_margin,
                        n_switches=n, min_spacing=spacing)


def decay_envelope(V0: float, N0: float, mu: float, lambda_rho: float,
                   tau_a: float, T: float) -> float:
    """exp[(N0-1)ln(mu)] * exp[(ln(mu)/tau_a - lambda_rho) T] * V0.

    Strictly decreasing in T iff tau_a > ln(mu)/lambda_rho.  With mu = 1 the
    switching penalty vanishes and the bound is exactly V0*exp(-lambda_rho*T)
    for any tau_a.
    """
    if mu < 1:
        raise InvalidInputError("mu must be >= 1")
    if V0 < 0 or lambda_rho <= 0:
        raise InvalidInputError("need V0 >= 0 and lambda_rho > 0")
    ln_mu = math.log(mu)
    if ln_mu == 0.0:
        rate = -lambda_rho
    else:
        if tau_a <= 0:
            raise InvalidInputError("tau_a must be > 0 when mu > 1")
        rate = ln_mu / tau_a - lambda_rho
    return math.exp((N0 - 1.0) * ln_mu) * math.exp(rate * T) * V0
