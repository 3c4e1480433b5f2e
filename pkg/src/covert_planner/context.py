"""Shared state for the block-coordinate optimization loop.

A context snapshots one plan together with the channel/propulsion tables the
block updates need.  Tables are built lazily and cached; contexts are cheap
to recreate after a block changes the plan.

Scheduling-facing tables are computed under the closed-form beamforming
policy: the rate and leakage of candidate UE k in slot n assume the IRS is
phase-aligned to k, which is exactly the configuration the plan will carry
if k gets scheduled there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import beamforming, covert
from .kinematics import propulsion_power


@dataclass
class BscaOptions:
    """Tolerances and penalty schedules of the optimization loop."""

    eps_outer: float = 0.1  # fractional mAEE increase terminating the loop
    eps_traj_uirs: float = 1e-3  # relative eta change, reflector trajectory
    eps_traj_ucj: float = 1e-3  # relative eta change, jammer trajectory
    eps_powers: float = 1e-4  # relative objective change, power block
    max_outer: int = 10
    max_inner: int = 30
    penalty_init: float = 1e-3
    penalty_growth: float = 5.0
    penalty_cap: float = 1e6
    penalty_tol: float = 1e-6  # residual eta at which relaxed binaries count as exact
    rank_tol: float = 1e-6  # rank-one certificate threshold
    gap_tol: float = 1e-6
    feas_tol: float = 1e-8
    beamforming: str = "closed-form"  # or "rm-sca"
    use_joint_power_scheduling: bool = False


@dataclass
class IterationContext:
    scenario: object
    plan: object
    anchors: tuple | None = None
    options: BscaOptions = field(default_factory=BscaOptions)
    _power_total: np.ndarray | None = field(default=None, repr=False)
    _candidate: tuple | None = field(default=None, repr=False)
    _plan_gains: covert.PlanGains | None = field(default=None, repr=False)

    def power_totals(self) -> np.ndarray:
        """Per-slot propulsion power of both UAVs combined."""
        if self._power_total is None:
            s = self.scenario
            self._power_total = propulsion_power(self.plan.traj_r.velocities, s.propulsion) + propulsion_power(
                self.plan.traj_j.velocities, s.propulsion
            )
        return self._power_total

    def plan_gains(self) -> covert.PlanGains:
        if self._plan_gains is None:
            self._plan_gains = covert.compute_plan_gains(self.scenario, self.plan)
        return self._plan_gains

    def candidate_tables(self):
        """Per-slot, per-candidate scheduling tables under aligned beamforming.

        Returns (efficiency, min_zeta, coefficients, g_bob, g_jam):
          efficiency[n, k]  rate/power ratio if k were scheduled in slot n
          min_zeta[n, k]    worst-warden minimum detection error for that choice
          coefficients[n, k] aligned reflection coefficients (N, K, L) complex
          g_bob[n, k]       aligned cascaded gain to the candidate
          g_jam[n, k]       jammer->UE direct gain
        """
        if self._candidate is not None:
            return self._candidate
        s = self.scenario
        plan = self.plan
        n_slots, n_ue = plan.schedule.shape
        power = self.power_totals()
        eff = np.zeros((n_slots, n_ue))
        min_zeta = np.zeros((n_slots, n_ue))
        coeffs = np.zeros((n_slots, n_ue, s.irs.size), dtype=complex)
        g_bob = np.zeros((n_slots, n_ue))
        g_jam = np.zeros((n_slots, n_ue))
        for n in range(n_slots):
            q_r = plan.traj_r.positions[n]
            q_j = plan.traj_j.positions[n]
            for k in range(n_ue):
                gains = beamforming.aligned_slot_gains(s, q_r, q_j, k)
                coeffs[n, k] = gains.coefficients
                g_bob[n, k] = gains.g_ar[k]
                g_jam[n, k] = gains.g_j[k]
                rate = covert.rate_lower_bound(
                    plan.p_a[n], plan.p_hat_j[n], gains.g_ar[k], gains.g_j[k], s.noise_power[k], s.bandwidth
                )
                eff[n, k] = rate / power[n]
                wardens = [m for m in range(n_ue) if m != k]
                zeta = covert.zeta_star_array(
                    plan.p_a[n], plan.p_hat_j[n], gains.g_ar[wardens], gains.g_j[wardens]
                )
                min_zeta[n, k] = float(np.min(zeta))
        self._candidate = (eff, min_zeta, coeffs, g_bob, g_jam)
        return self._candidate

    def refresh(self, plan) -> "IterationContext":
        return IterationContext(self.scenario, plan, self.anchors, self.options)


def schedule_objective(efficiency: np.ndarray, schedule: np.ndarray) -> float:
    """True mAEE of a binary schedule under the candidate efficiency table."""
    n_slots = schedule.shape[0]
    per_ue = (efficiency * schedule).sum(axis=0) / n_slots
    return float(per_ue.min())
