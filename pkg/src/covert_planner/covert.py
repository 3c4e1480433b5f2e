"""Signal-level covertness analysis.

The jammer radiates artificial noise with power uniform on [0, peak], which
makes the radiometer statistic at an unscheduled user (warden) uniformly
distributed under both hypotheses.  False-alarm and missed-detection rates
are then exact piecewise-linear functions of the detection threshold, and the
warden-optimal threshold yields the closed-form minimum error rate used by
the covertness constraint.  This module also evaluates the planner objective
(minimum average energy efficiency) for a full plan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import channel
from .errors import ParameterError
from .kinematics import propulsion_power

# Slack on covert margins: a slot passes when min_m zeta* >= 1 - eps - MARGIN_TOL.
MARGIN_TOL = 1e-9


def rate_lower_bound(p_a, p_hat_j, g_ark, g_jk, sigma2, bandwidth):
    """Average-rate lower bound in bits/s under uniformly random jamming power.

    W * log2(1 + p_a g_ark / (p_hat_j g_jk / 2 + sigma2)); tight (equal to the
    expectation) when the peak jamming power is zero.
    """
    if np.any(np.asarray(sigma2) <= 0.0):
        raise ParameterError("noise power must be positive")
    p_a, p_hat_j, g_ark, g_jk = (np.asarray(v, dtype=float) for v in (p_a, p_hat_j, g_ark, g_jk))
    if np.any(p_a < 0) or np.any(p_hat_j < 0) or np.any(g_ark < 0) or np.any(g_jk < 0):
        raise ParameterError("powers and gains must be nonnegative")
    sinr = p_a * g_ark / (0.5 * p_hat_j * g_jk + sigma2)
    out = bandwidth * np.log2(1.0 + sinr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DetectionContext:
    """One warden's view of one slot: powers, gains, noise and threshold."""

    p_a: float  # W, AP transmit power
    p_hat_j: float  # W, peak artificial-noise power
    g_arm: float  # cascaded AP->IRS->warden power gain (current beamforming)
    g_jm: float  # jammer->warden power gain
    sigma2_m: float  # W, warden noise power
    threshold: float | None = None  # W, radiometer threshold

    def __post_init__(self):
        if min(self.p_a, self.p_hat_j, self.g_arm, self.g_jm, self.sigma2_m) < 0.0:
            raise ParameterError("detection context values must be nonnegative")

    @property
    def non_trivial(self) -> bool:
        """True when jamming dominates the signal leak and detection errors are unavoidable."""
        return self.p_hat_j * self.g_jm >= self.p_a * self.g_arm

    @property
    def chi(self) -> tuple[float, float, float]:
        """Breakpoints of the piecewise error-rate curve."""
        leak = self.p_a * self.g_arm
        jam = self.p_hat_j * self.g_jm
        return (leak + self.sigma2_m, jam + self.sigma2_m, leak + jam + self.sigma2_m)


class DetectionOutcome(NamedTuple):
    p_fa: float
    p_md: float
    zeta: float
    zero_error_achievable: bool


def detection_error_piecewise(ctx: DetectionContext) -> DetectionOutcome:
    """Exact false-alarm/missed-detection probabilities at the context threshold.

    Both are clipped uniform CDF evaluations, so the expressions stay valid in
    the trivial case too; the outcome carries a marker when the warden could
    reach zero total error by thresholding at the signal-plus-noise level.
    """
    if ctx.threshold is None:
        raise ParameterError("detection threshold required")
    rho = ctx.threshold
    jam = ctx.p_hat_j * ctx.g_jm
    leak = ctx.p_a * ctx.g_arm
    if jam > 0.0:
        p_fa = 1.0 - float(np.clip((rho - ctx.sigma2_m) / jam, 0.0, 1.0))
        p_md = float(np.clip((rho - leak - ctx.sigma2_m) / jam, 0.0, 1.0))
    else:
        p_fa = 1.0 if rho <= ctx.sigma2_m else 0.0
        p_md = 1.0 if rho > leak + ctx.sigma2_m else 0.0
    marker = (not ctx.non_trivial) and leak > 0.0
    return DetectionOutcome(p_fa, p_md, p_fa + p_md, marker)


class ZetaStar(NamedTuple):
    value: float
    zero_error_achievable: bool


def min_detection_error(p_a: float, p_hat_j: float, g_arm: float, g_jm: float) -> ZetaStar:
    """Minimum total detection error over all thresholds, clamped to [0, 1].

    1 - p_a g_arm / (p_hat_j g_jm) in the non-trivial case; zero (with a
    marker) when the signal leak dominates the jamming envelope.
    """
    leak = p_a * g_arm
    jam = p_hat_j * g_jm
    if jam <= 0.0:
        if leak > 0.0:
            return ZetaStar(0.0, True)
        return ZetaStar(1.0, False)
    value = 1.0 - leak / jam
    if value < 0.0:
        return ZetaStar(0.0, True)
    return ZetaStar(min(value, 1.0), False)


def zeta_star_array(p_a, p_hat_j, g_arm, g_jm):
    """Vectorized minimum detection error; zero where the trivial case applies."""
    p_a, p_hat_j, g_arm, g_jm = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (p_a, p_hat_j, g_arm, g_jm))
    )
    leak = p_a * g_arm
    jam = p_hat_j * g_jm
    with np.errstate(divide="ignore", invalid="ignore"):
        value = 1.0 - leak / jam
    value = np.where(jam > 0.0, value, np.where(leak > 0.0, 0.0, 1.0))
    return np.clip(value, 0.0, 1.0)


def mc_detection_oracle(ctx: DetectionContext, trials: int, seed: int, block: int = 1 << 16):
    """Empirical (P_FA, P_MD) at the context threshold by direct simulation.

    Draws the jamming power uniformly on [0, peak] and applies the
    infinite-sample radiometer statistic under both hypotheses.  Trials are
    consumed in fixed-size blocks with per-block child seeds, so the result
    depends only on (trials, seed), not on any worker partitioning.
    """
    if trials < 10_000:
        raise ParameterError("at least 1e4 trials required for a meaningful estimate")
    if ctx.threshold is None:
        raise ParameterError("detection threshold required")
    rho = ctx.threshold
    fa_hits = 0
    md_hits = 0
    done = 0
    block_index = 0
    while done < trials:
        count = min(block, trials - done)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block_index,)))
        p_j = rng.uniform(0.0, ctx.p_hat_j, count) if ctx.p_hat_j > 0 else np.zeros(count)
        stat_h0 = p_j * ctx.g_jm + ctx.sigma2_m
        fa_hits += int(np.count_nonzero(stat_h0 >= rho))
        md_hits += int(np.count_nonzero(stat_h0 + ctx.p_a * ctx.g_arm <= rho))
        done += count
        block_index += 1
    return fa_hits / trials, md_hits / trials


def mc_zeta_curve(ctx: DetectionContext, thresholds, trials: int, seed: int, block: int = 1 << 16):
    """Empirical total error rate over a threshold grid, reusing one set of draws."""
    if trials < 10_000:
        raise ParameterError("at least 1e4 trials required for a meaningful estimate")
    thresholds = np.asarray(thresholds, dtype=float)
    fa_hits = np.zeros(thresholds.shape, dtype=np.int64)
    md_hits = np.zeros(thresholds.shape, dtype=np.int64)
    done = 0
    block_index = 0
    while done < trials:
        count = min(block, trials - done)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block_index,)))
        p_j = rng.uniform(0.0, ctx.p_hat_j, count) if ctx.p_hat_j > 0 else np.zeros(count)
        stat_h0 = np.sort(p_j * ctx.g_jm + ctx.sigma2_m)
        fa_hits += count - np.searchsorted(stat_h0, thresholds, side="left")
        md_hits += np.searchsorted(stat_h0 + ctx.p_a * ctx.g_arm, thresholds, side="right")
        done += count
        block_index += 1
    return (fa_hits + md_hits) / trials


# ---------------------------------------------------------------------------
# Plan-level evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanGains:
    """Channel power gains of a plan, per slot and UE.

    ``g_eff[n, k]``: cascaded AP->IRS->UE gain including the slot's actual
    reflection coefficients; ``g_j[n, k]``: direct jammer->UE gain;
    ``h_tilde_sq``: per-element cascaded gain and ``combining`` the squared
    coherent-combining magnitude, so g_eff = combining * h_tilde_sq.
    ``g_aligned[n, k]`` is the gain the UE would see with perfectly aligned
    phases (L^2 * h_tilde_sq), used when rescheduling.
    """

    g_eff: np.ndarray
    g_j: np.ndarray
    h_tilde_sq: np.ndarray
    combining: np.ndarray
    g_aligned: np.ndarray


def compute_plan_gains(scenario, plan) -> PlanGains:
    """Evaluate every slot/UE channel gain for a plan's trajectories and phases."""
    n_slots, n_ue = plan.schedule.shape
    atmos = scenario.atmosphere
    irs = scenario.irs
    lam = atmos.wavelength
    L = irs.size
    g_eff = np.zeros((n_slots, n_ue))
    g_j = np.zeros((n_slots, n_ue))
    h_tilde_sq = np.zeros((n_slots, n_ue))
    combining = np.zeros((n_slots, n_ue))
    for n in range(n_slots):
        q_r = plan.traj_r.positions[n]
        q_jam = plan.traj_j.positions[n]
        for k in range(n_ue):
            q_k = scenario.ue_positions[k]
            h_t = channel.cascaded_base_gain(q_r, scenario.ap_position, q_k, atmos, scenario.path_loss_exponent)
            resp = channel.array_responses(q_r, scenario.ap_position, q_k, irs, lam)
            factor = channel.combining_factor(resp, plan.phi[n])
            h_tilde_sq[n, k] = abs(h_t) ** 2
            combining[n, k] = abs(factor) ** 2
            g_eff[n, k] = combining[n, k] * h_tilde_sq[n, k]
            h_j = channel.direct_gain(q_jam, q_k, atmos, scenario.path_loss_exponent)
            g_j[n, k] = abs(h_j) ** 2
    return PlanGains(
        g_eff=g_eff,
        g_j=g_j,
        h_tilde_sq=h_tilde_sq,
        combining=combining,
        g_aligned=L**2 * h_tilde_sq,
    )


def slot_zeta_stars(plan, gains: PlanGains) -> np.ndarray:
    """(N, K) matrix of each UE's minimum detection error as a warden.

    Column k of row n is the error rate UE k would suffer trying to detect
    slot n's transmission; NaN for the scheduled UE itself.  Rows of empty
    slots are all 1 (nothing to detect).
    """
    n_slots, n_ue = plan.schedule.shape
    scheduled = plan.scheduled_ue()
    out = np.ones((n_slots, n_ue))
    for n in range(n_slots):
        k = scheduled[n]
        if k < 0:
            continue
        for m in range(n_ue):
            if m == k:
                out[n, m] = np.nan
                continue
            out[n, m] = min_detection_error(
                plan.p_a[n], plan.p_hat_j[n], gains.g_eff[n, m], gains.g_j[n, m]
            ).value
    return out


def covertness_check(plan, gains: PlanGains, epsilon: float):
    """Per-slot covert margins min_m zeta*_{m,k}[n] - (1 - eps).

    Empty slots pass vacuously and report the zero-transmission margin eps.
    Returns (margins, ok) with ok true iff every margin clears -MARGIN_TOL.
    """
    n_slots, n_ue = plan.schedule.shape
    if n_ue < 2:
        raise ParameterError("covertness needs at least two UEs (one potential warden)")
    zeta = slot_zeta_stars(plan, gains)
    scheduled = plan.scheduled_ue()
    margins = np.full(n_slots, epsilon)
    for n in range(n_slots):
        if scheduled[n] >= 0:
            margins[n] = np.nanmin(zeta[n]) - (1.0 - epsilon)
    return margins, bool(np.all(margins >= -MARGIN_TOL))


@dataclass(frozen=True)
class CovertnessReport:
    """Per-slot covertness and rate diagnostics plus the mAEE decomposition."""

    scheduled_ue: np.ndarray  # (N,), -1 for empty slots
    zeta_star: np.ndarray  # (N, K), NaN at the scheduled column
    zeta_star_min: np.ndarray  # (N,), 1 for empty slots
    margin: np.ndarray  # (N,)
    rate_lb: np.ndarray  # (N,), bits/s for the scheduled UE, 0 if empty
    propulsion_power: np.ndarray  # (N,), both UAVs, W
    per_ue_throughput: np.ndarray  # (K,), average covert throughput, bits/s
    per_ue_efficiency: np.ndarray  # (K,), average rate/power ratio, bits/J
    maee: float
    mact: float
    apc: float
    epsilon: float
    covert_feasible: bool

    def recomputed_maee(self) -> float:
        """Objective recomputed from the raw per-slot fields (self-consistency)."""
        n_slots, n_ue = self.zeta_star.shape
        per_ue = np.zeros(n_ue)
        for n in range(n_slots):
            k = self.scheduled_ue[n]
            if k >= 0:
                per_ue[k] += self.rate_lb[n] / self.propulsion_power[n]
        return float(np.min(per_ue) / n_slots)

    def to_json_dict(self) -> dict:
        return {
            "maee_bits_per_joule": self.maee,
            "mact_bits_per_s": self.mact,
            "apc_watts": self.apc,
            "epsilon": self.epsilon,
            "covert_feasible": self.covert_feasible,
            "per_ue_throughput_bits": list(map(float, self.per_ue_throughput)),
            "per_ue_efficiency_bits_per_joule": list(map(float, self.per_ue_efficiency)),
            "slots": {
                "scheduled_ue": [int(k) for k in self.scheduled_ue],
                "zeta_star_min": list(map(float, self.zeta_star_min)),
                "margin": list(map(float, self.margin)),
                "rate_lb_bits": list(map(float, self.rate_lb)),
                "power_watts": list(map(float, self.propulsion_power)),
            },
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    def csv_rows(self):
        rows = []
        for n in range(len(self.scheduled_ue)):
            rows.append(
                (
                    n + 1,
                    int(self.scheduled_ue[n]),
                    float(self.zeta_star_min[n]),
                    float(self.margin[n]),
                    float(self.rate_lb[n]),
                    float(self.propulsion_power[n]),
                )
            )
        return rows


def evaluate_maee(plan, scenario, gains: PlanGains | None = None) -> CovertnessReport:
    """Full objective evaluation of a plan: rates, detection errors, mAEE.

    Infeasible plans are still evaluated; covertness feasibility is reported
    as a flag rather than raised.
    """
    if gains is None:
        gains = compute_plan_gains(scenario, plan)
    n_slots, n_ue = plan.schedule.shape
    scheduled = plan.scheduled_ue()

    power = propulsion_power(plan.traj_r.velocities, scenario.propulsion) + propulsion_power(
        plan.traj_j.velocities, scenario.propulsion
    )

    rate = np.zeros(n_slots)
    for n in range(n_slots):
        k = scheduled[n]
        if k < 0:
            continue
        rate[n] = rate_lower_bound(
            plan.p_a[n],
            plan.p_hat_j[n],
            gains.g_eff[n, k],
            gains.g_j[n, k],
            scenario.noise_power[k],
            scenario.bandwidth,
        )

    zeta = slot_zeta_stars(plan, gains)
    zeta_min = np.ones(n_slots)
    margins = np.full(n_slots, scenario.epsilon)
    for n in range(n_slots):
        if scheduled[n] >= 0:
            zeta_min[n] = np.nanmin(zeta[n])
            margins[n] = zeta_min[n] - (1.0 - scenario.epsilon)

    per_ue_tp = np.zeros(n_ue)
    per_ue_eff = np.zeros(n_ue)
    for n in range(n_slots):
        k = scheduled[n]
        if k >= 0:
            per_ue_tp[k] += rate[n]
            per_ue_eff[k] += rate[n] / power[n]
    per_ue_tp /= n_slots
    per_ue_eff /= n_slots

    return CovertnessReport(
        scheduled_ue=scheduled,
        zeta_star=zeta,
        zeta_star_min=zeta_min,
        margin=margins,
        rate_lb=rate,
        propulsion_power=power,
        per_ue_throughput=per_ue_tp,
        per_ue_efficiency=per_ue_eff,
        maee=float(np.min(per_ue_eff)),
        mact=float(np.min(per_ue_tp)),
        apc=float(np.mean(power)),
        epsilon=scenario.epsilon,
        covert_feasible=bool(np.all(margins >= -MARGIN_TOL)),
    )
