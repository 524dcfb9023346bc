"""Runtime certificate monitors evaluated over simulation logs.

Three certificates are checked against the produced trajectories:

* joint layer: V(t) <= V(0) e^{-delta t} + (eps/delta)(1 - e^{-delta t}) with
  delta = (1/b) min(alpha, b_lower k1), plus the steady-state ultimate bound
  ||xi|| <= sqrt(eps/(delta a));
* motor pair layer: between switches,
  ||z2(t)|| <= sqrt(b/a) exp(-lambda (t - t_w)/2) ||z2(t_w)||,
  asserted only while its sufficient gain conditions hold;
* switching layer: the average-dwell-time budget N <= N0 + dT/tau_a and the
  admissibility of tau_a.

A verdict is PASS/FAIL only when the certificate's hypotheses held for the
whole run; otherwise the claim is withheld.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import N_JOINTS
from .switching import DwellVerdict, count_switches, dwell_certificate

PASS = "PASS"
FAIL = "FAIL"
WITHHELD = "WITHHELD"

REL_TOL = 0.02        # relative envelope tolerance absorbing discretization
ZERO_ANCHOR_ATOL = 1e-9   # absolute slack when an interval starts at z2 = 0


def guub_envelope(V0: float, eps: float, delta: float, t) -> np.ndarray:
    """V(0) e^{-delta t} + (eps/delta)(1 - e^{-delta t})."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-delta * t)
    return V0 * decay + (eps / delta) * (1.0 - decay)


def sync_envelope(z0: float, a: float, b: float, lam: float, dt) -> np.ndarray:
    """sqrt(b/a) exp(-lam dt / 2) z0."""
    return math.sqrt(b / a) * np.exp(-0.5 * lam * np.asarray(dt, dtype=float)) * z0


@dataclass
class GuubVerdict:
    status: str
    max_rel_violation: float
    hypothesis_ok: bool
    hypothesis_notes: tuple
    delta: float
    eps_over_delta: float
    ultimate_bound: float        # sqrt(eps/(delta a))
    steady_xi_max: float
    steady_bound_ok: bool


@dataclass
class PairSyncVerdict:
    joint: int
    status: str
    max_rel_violation: float
    hypothesis_ok: bool
    notes: tuple
    n_intervals: int


@dataclass
class PairDwellVerdict:
    joint: int
    verdict: DwellVerdict
    status: str


@dataclass
class CertificateReport:
    guub: GuubVerdict | None
    sync: tuple                   # PairSyncVerdict per joint, or ()
    dwell: tuple                  # PairDwellVerdict per joint, or ()
    gain_conditions: tuple        # per joint GainConditionVerdict
    enabled: dict

    def failed(self) -> bool:
        checks = []
        if self.guub is not None:
            checks.append(self.guub.status)
        checks += [v.status for v in self.sync]
        checks += [v.status for v in self.dwell]
        return any(c == FAIL for c in checks)

    def to_lines(self):
        lines = []
        add = lines.append
        add("certificate_report: 1")
        for name, on in sorted(self.enabled.items()):
            add(f"monitor.{name}.enabled: {str(on).lower()}")
        if self.guub is not None:
            g = self.guub
            add(f"guub.status: {g.status}")
            add(f"guub.max_rel_violation: {g.max_rel_violation:.6g}")
            add(f"guub.hypothesis_ok: {str(g.hypothesis_ok).lower()}")
            for note in g.hypothesis_notes:
                add(f"guub.note: {note}")
            add(f"guub.delta: {g.delta:.9g}")
            add(f"guub.eps_over_delta: {g.eps_over_delta:.9g}")
            add(f"guub.ultimate_bound: {g.ultimate_bound:.9g}")
            add(f"guub.steady_xi_max: {g.steady_xi_max:.9g}")
            add(f"guub.steady_bound_ok: {str(g.steady_bound_ok).lower()}")
        for j, v in enumerate(self.gain_conditions):
            add(f"gains.joint{j}.k3_margin: {v.k3_margin:.6g}")
            add(f"gains.joint{j}.k4_margin: {v.k4_margin:.6g}")
            add(f"gains.joint{j}.passed: {str(v.passed).lower()}")
        for v in self.sync:
            add(f"sync.joint{v.joint}.status: {v.status}")
            add(f"sync.joint{v.joint}.max_rel_violation: {v.max_rel_violation:.6g}")
            add(f"sync.joint{v.joint}.intervals: {v.n_intervals}")
            for note in v.notes:
                add(f"sync.joint{v.joint}.note: {note}")
        for v in self.dwell:
            add(f"dwell.joint{v.joint}.status: {v.status}")
            add(f"dwell.joint{v.joint}.switches: {v.verdict.n_switches}")
            add(f"dwell.joint{v.joint}.count_margin: {v.verdict.count_margin:.6g}")
            add(f"dwell.joint{v.joint}.tau_margin: {v.verdict.tau_margin:.6g}")
            add(f"dwell.joint{v.joint}.min_spacing: {v.verdict.min_spacing:.6g}")
        return lines


def monitor_guub(log, constants, gains, steady_window: float = 0.25) -> GuubVerdict:
    """Check the joint-layer decay envelope at every tick (2% tolerance).

    The claim is withheld unless rho dominated chi at every logged tick and
    the input saturation never engaged.
    """
    t = log.t
    V = log.V
    delta = constants.delta
    eps = gains.epsilon
    env = guub_envelope(V[0], eps, delta, t)
    denom = np.maximum(env, 1e-12)
    max_rel = float(np.max((V - env) / denom))
    notes = []
    rho_ok = bool(np.all(log.rho_ok > 0.5))
    if not rho_ok:
        bad = int(np.sum(log.rho_ok < 0.5))
        notes.append(f"rho domination failed on {bad} ticks")
    sat_ok = bool(np.all(log.sat_active < 0.5))
    if not sat_ok:
        notes.append("input saturation engaged; high-gain hypothesis void")
    hypothesis_ok = rho_ok and sat_ok

    ult = math.sqrt(eps / (delta * constants.a_joint))
    n_steady = max(1, int(steady_window * len(t)))
    xi_norm = np.linalg.norm(log.xi, axis=1)
    steady_max = float(np.max(xi_norm[-n_steady:]))
    steady_ok = steady_max <= ult

    if not hypothesis_ok:
        status = WITHHELD
    else:
        status = PASS if (max_rel <= REL_TOL and steady_ok) else FAIL
    return GuubVerdict(status=status, max_rel_violation=max_rel,
                       hypothesis_ok=hypothesis_ok, hypothesis_notes=tuple(notes),
                       delta=delta, eps_over_delta=eps / delta,
                       ultimate_bound=ult, steady_xi_max=steady_max,
                       steady_bound_ok=steady_ok)


def _pair_intervals(times, switch_times, t_end):
    """Anchor indices delimiting the inter-switch intervals of one pair."""
    anchors = [0]
    for ts in switch_times:
        idx = int(np.searchsorted(times, ts - 1e-12))
        if idx < len(times) and idx != anchors[-1]:
            anchors.append(idx)
    spans = []
    for i, start in enumerate(anchors):
        stop = anchors[i + 1] if i + 1 < len(anchors) else len(times)
        spans.append((start, stop))
    return spans


def monitor_sync_exponential(log, switch_log, constants, sync_gains,
                             joint: int) -> PairSyncVerdict:
    """Per-interval exponential envelope check for one motor pair.

    Each interval is anchored at the first tick at or after its switch
    (post-handoff state).  Violations are measured relative to the envelope,
    with an absolute floor for intervals anchored at exactly zero error.
    Withheld when the sufficient gain conditions fail, and restricted to the
    region outside the boundary layer when sgn smoothing is enabled.
    """
    notes = []
    verdict = constants.gain_verdicts[joint]
    hypothesis_ok = verdict.passed
    if not hypothesis_ok:
        notes.append("gain conditions fail: "
                     f"k3 margin {verdict.k3_margin:.4g}, k4 margin {verdict.k4_margin:.4g}")

    t = log.t
    z2 = np.hypot(log.e[:, joint], log.r[:, joint])
    lam = constants.lambda_rho
    a, b = constants.a_pair, constants.b_pair
    layer = sync_gains.boundary_layer
    if layer > 0.0:
        notes.append("boundary layer active: envelope checked outside the layer only")

    switch_times = [ev.time for ev in switch_log if ev.joint == joint]
    spans = _pair_intervals(t, switch_times, t[-1])
    max_rel = -math.inf
    for start, stop in spans:
        anchor = z2[start]
        dt = t[start:stop] - t[start]
        env = sync_envelope(anchor, a, b, lam, dt)
        allowed = (1.0 + REL_TOL) * env + ZERO_ANCHOR_ATOL
        seg = z2[start:stop]
        if layer > 0.0:
            mask = seg > layer
            if not np.any(mask):
                continue
            rel = np.max((seg[mask] - allowed[mask]) / np.maximum(env[mask], ZERO_ANCHOR_ATOL))
        else:
            rel = np.max((seg - allowed) / np.maximum(env, ZERO_ANCHOR_ATOL))
        max_rel = max(max_rel, float(rel))
    if max_rel == -math.inf:
        max_rel = 0.0

    if not hypothesis_ok:
        status = WITHHELD
    else:
        status = PASS if max_rel <= 0.0 else FAIL
    return PairSyncVerdict(joint=joint, status=status, max_rel_violation=max_rel,
                           hypothesis_ok=hypothesis_ok, notes=tuple(notes),
                           n_intervals=len(spans))


def monitor_dwell(switch_log, constants, t_end: float, joint: int) -> PairDwellVerdict:
    v = dwell_certificate(switch_log, constants.dwell, t_end, joint=joint)
    return PairDwellVerdict(joint=joint, verdict=v, status=PASS if v.passed else FAIL)


def build_report(result) -> CertificateReport:
    """Evaluate every enabled monitor over a finished run."""
    sc = result.scenario
    log = result.log
    consts = result.constants
    enabled = dict(guub=sc.monitor_guub, sync=sc.monitor_sync, dwell=sc.monitor_dwell)

    guub = monitor_guub(log, consts, sc.joint_gains) if sc.monitor_guub else None
    sync = tuple(monitor_sync_exponential(log, result.switch_log, consts,
                                          sc.sync_gains, j)
                 for j in range(N_JOINTS)) if sc.monitor_sync else ()
    dwell = tuple(monitor_dwell(result.switch_log, consts, float(log.t[-1]), j)
                  for j in range(N_JOINTS)) if sc.monitor_dwell else ()

    return CertificateReport(guub=guub, sync=sync, dwell=dwell,
                             gain_conditions=consts.gain_verdicts, enabled=enabled)
