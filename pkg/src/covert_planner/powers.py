"""Transmit/jamming power block: successive convex solves of the conic
reformulation of the per-slot rate/covertness tradeoff.

Per scheduled slot the rate is split as log(1 + B p_a + C pj) minus
log(1 + C pj); the subtrahend is linearized at the incumbent (a global affine
upper bound, so the surrogate under-estimates the rate and ascent is
monotone).  The covertness requirement with the per-slot slack pinned at its
binding value 1 - eps reads eps * pj >= D p_a with D the worst warden's
gain ratio; its log form is kept convex by linearizing log(p_a) at the
incumbent.  Powers of slots without a scheduled UE are carried unchanged as
constants: they spend no new budget headroom and keep re-scheduling of those
slots possible in later outer iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solver
from .context import IterationContext
from .covert import zeta_star_array
from .errors import ParameterError
from .surrogates import log_linearization, log_rate_linearization

_EXPANSION_FLOOR = 1e-12  # W, keeps log expansions finite when powers collapse


@dataclass
class PowerDiagnostics:
    sca_rounds: int
    objective_trace: list
    improved: bool


@dataclass
class _PowerModel:
    """Constant tables of the power subproblem for the current plan."""

    slots: np.ndarray  # indices of scheduled slots
    ue_of_slot: np.ndarray
    weight: np.ndarray  # W / (N ln2 (P_fr + P_fj)) per scheduled slot
    b_rate: np.ndarray  # g_bob / sigma^2
    c_rate: np.ndarray  # g_jam / (2 sigma^2)
    d_worst: np.ndarray  # max_m g_arm / g_jm
    n_ue: int
    fixed_budget: float  # TX energy of untouched (empty) slots, W*s


def build_power_model(ctx: IterationContext) -> _PowerModel:
    s = ctx.scenario
    plan = ctx.plan
    gains = ctx.plan_gains()
    power = ctx.power_totals()
    scheduled = plan.scheduled_ue()
    slots = np.nonzero(scheduled >= 0)[0]
    ue = scheduled[slots]
    n = s.n_slots
    weight = s.bandwidth / (n * np.log(2.0) * power[slots])
    b_rate = np.array([gains.g_eff[t, k] / s.noise_power[k] for t, k in zip(slots, ue)])
    c_rate = np.array([gains.g_j[t, k] / (2.0 * s.noise_power[k]) for t, k in zip(slots, ue)])
    d_worst = np.zeros(slots.size)
    for i, (t, k) in enumerate(zip(slots, ue)):
        wardens = [m for m in range(s.n_ue) if m != k]
        ratios = gains.g_eff[t, wardens] / gains.g_j[t, wardens]
        d_worst[i] = float(np.max(ratios))
    if not np.all(np.isfinite(d_worst)):
        raise ParameterError("non-finite warden gain ratio; de-schedule the slot first")
    empty = np.setdiff1d(np.arange(n), slots)
    fixed_budget = float(s.dt * np.sum(plan.p_a[empty] + plan.p_hat_j[empty]))
    return _PowerModel(
        slots=slots,
        ue_of_slot=ue,
        weight=weight,
        b_rate=b_rate,
        c_rate=c_rate,
        d_worst=d_worst,
        n_ue=s.n_ue,
        fixed_budget=fixed_budget,
    )


def power_objective(model: _PowerModel, p_a, p_j) -> float:
    """True min-over-UEs average efficiency for scheduled-slot powers."""
    rates = model.weight * np.log1p(model.b_rate * p_a / (model.c_rate * p_j + 1.0))
    per_ue = np.zeros(model.n_ue)
    np.add.at(per_ue, model.ue_of_slot, rates)
    return float(per_ue.min())


def _binding_covert_start(model: _PowerModel, scenario, p_a, p_j):
    """Drop peak jamming to just above its covert-binding level.

    At fixed signal power the rate bound strictly grows as the jamming
    envelope shrinks, the covert ratio stays satisfied by construction and
    the energy budget only gains headroom, so this pre-step is a monotone
    true-objective improvement that also puts the SCA on a well-scaled path.
    """
    binding = model.d_worst * p_a * (1.0 + 1e-6) / scenario.epsilon
    return p_a, np.clip(binding, _EXPANSION_FLOOR, p_j)


def _interiorize(model: _PowerModel, scenario, p_a, p_j):
    """Pull a warm start strictly inside every constraint of the subproblem."""
    p_a = np.minimum(np.maximum(p_a, _EXPANSION_FLOOR), scenario.p_a_max * (1.0 - 1e-9))
    p_j = np.minimum(np.maximum(p_j, _EXPANSION_FLOOR), scenario.p_j_max * (1.0 - 1e-9))
    # covert margin log(eps pj) - log(D pa) must be strictly positive
    margin = np.log(scenario.epsilon * p_j) - np.log(model.d_worst * p_a)
    shift = np.minimum(0.0, margin - 1e-9)
    p_a = p_a * np.exp(shift)
    # budget strictly below the cap
    cap = scenario.total_budget - model.fixed_budget
    spent = scenario.dt * float(np.sum(p_a + p_j))
    if spent >= cap:
        scale = (cap * (1.0 - 1e-9)) / max(spent, 1e-300)
        p_a, p_j = p_a * scale, p_j * scale
    return p_a, p_j


def _solve_round(model: _PowerModel, scenario, p_a_lo, p_j_lo, obj_scale, opts, t0):
    m = model.slots.size
    prog = solver.ConvexProgram()
    pa = prog.add_variable("p_a", m, lower=0.0, upper=scenario.p_a_max)
    pj = prog.add_variable("p_hat_j", m, lower=0.0, upper=scenario.p_j_max)
    eta = prog.add_variable("eta", 1)
    prog.add_objective_linear([eta[0]], [1.0])

    # per-UE rate rows: sum_n w log(1 + B pa + C pj) >= eta + sum_n w (f2c + f2s pj)
    f2_const, f2_slope = log_rate_linearization(p_j_lo, model.c_rate)
    w_scaled = model.weight / obj_scale
    for k in range(model.n_ue):
        rows = np.nonzero(model.ue_of_slot == k)[0]
        if rows.size == 0:
            prog.add_linear_ineq([eta[0]], [1.0], 0.0)
            continue
        idx = np.concatenate([pa.indices()[rows], pj.indices()[rows], [eta[0]]])
        a = np.zeros((rows.size, idx.size))
        a[np.arange(rows.size), np.arange(rows.size)] = model.b_rate[rows]
        a[np.arange(rows.size), rows.size + np.arange(rows.size)] = model.c_rate[rows]
        b = np.ones(rows.size)
        c = np.zeros(idx.size)
        c[rows.size : 2 * rows.size] = w_scaled[rows] * f2_slope[rows]
        c[-1] = 1.0
        d = float(np.sum(w_scaled[rows] * f2_const[rows]))
        prog.add_logsum(idx, w_scaled[rows], a, b, c, d)

    # per-slot covertness: log(pj) >= log(D/eps) + log-linearization of log(p_a)
    g2_const, g2_slope = log_linearization(p_a_lo)
    for i in range(m):
        idx = [pj[i], pa[i]]
        a = np.array([[1.0, 0.0]])
        c = np.array([0.0, float(g2_slope[i])])
        d = float(np.log(model.d_worst[i] / scenario.epsilon) + g2_const[i])
        prog.add_logsum(idx, [1.0], a, np.zeros(1), c, d)

    # mission energy budget over the optimized slots
    cap = scenario.total_budget - model.fixed_budget
    prog.add_linear_ineq(
        np.concatenate([pa.indices(), pj.indices()]),
        np.full(2 * m, scenario.dt),
        cap,
    )

    x0 = np.zeros(prog.n)
    x0[pa.indices()] = p_a_lo
    x0[pj.indices()] = p_j_lo
    x0[eta[0]] = power_objective(model, p_a_lo, p_j_lo) / obj_scale - 1e-3
    sol = solver.solve(prog, x0, gap_tol=opts.gap_tol, feas_tol=opts.feas_tol, t0=t0)
    return sol


def optimize_powers(ctx: IterationContext):
    """Reallocate AP and peak jamming powers; returns (p_a, p_hat_j, diagnostics).

    Inner SCA iterations never decrease the true objective; the block returns
    the warm start when no strict improvement is found.
    """
    scenario = ctx.scenario
    plan = ctx.plan
    opts = ctx.options
    model = build_power_model(ctx)
    if model.slots.size == 0 or scenario.total_budget <= 0.0 or scenario.p_a_max <= 0.0:
        return plan.p_a.copy(), plan.p_hat_j.copy(), PowerDiagnostics(0, [], False)

    warm_a = plan.p_a[model.slots].copy()
    warm_j = plan.p_hat_j[model.slots].copy()
    warm_value = power_objective(model, warm_a, warm_j)

    p_a, p_j = _binding_covert_start(model, scenario, warm_a, warm_j)
    obj_scale = max(power_objective(model, p_a, p_j), 1e-12)
    p_a, p_j = _interiorize(model, scenario, p_a, p_j)
    trace = [power_objective(model, p_a, p_j)]
    t0 = 1.0
    rounds = 0
    for _ in range(opts.max_inner):
        rounds += 1
        sol = _solve_round(model, scenario, p_a, p_j, obj_scale, opts, t0)
        if sol.status not in ("optimal", "max-iter"):
            break
        new_a, new_j = sol.values["p_a"], sol.values["p_hat_j"]
        value = power_objective(model, new_a, new_j)
        trace.append(value)
        p_a, p_j = new_a, new_j
        t0 = max(1.0, sol.final_t / 1e4)
        prev = trace[-2]
        if abs(value - prev) <= opts.eps_powers * max(abs(prev), 1e-30):
            break

    final_value = power_objective(model, p_a, p_j)
    improved = final_value > warm_value + 1e-15 * max(1.0, abs(warm_value))
    out_a, out_j = plan.p_a.copy(), plan.p_hat_j.copy()
    if improved:
        out_a[model.slots] = p_a
        out_j[model.slots] = p_j
    return out_a, out_j, PowerDiagnostics(rounds, trace, improved)


def grid_search_powers(model: _PowerModel, scenario, resolution=200):
    """Dense per-slot grid oracle; valid when the energy budget is slack.

    Maximizes the true rate over (p_a, p_hat_j) in the box subject to the
    covertness ratio constraint, independently per slot.
    """
    p_a = np.zeros(model.slots.size)
    p_j = np.zeros(model.slots.size)
    a_grid = np.linspace(0.0, scenario.p_a_max, resolution)
    j_grid = np.linspace(0.0, scenario.p_j_max, resolution)
    aa, jj = np.meshgrid(a_grid, j_grid, indexing="ij")
    for i in range(model.slots.size):
        feasible = model.d_worst[i] * aa <= scenario.epsilon * jj + 1e-18
        rate = model.weight[i] * np.log1p(model.b_rate[i] * aa / (model.c_rate[i] * jj + 1.0))
        rate = np.where(feasible, rate, -np.inf)
        flat = int(np.argmax(rate))
        p_a[i], p_j[i] = aa.flat[flat], jj.flat[flat]
    return p_a, p_j


def covert_power_feasible(model: _PowerModel, scenario, p_a, p_j) -> bool:
    """Exact check of the covert constraint for scheduled-slot powers."""
    zeta = zeta_star_array(p_a, p_j, model.d_worst, np.ones_like(p_a))
    return bool(np.all(zeta >= 1.0 - scenario.epsilon - 1e-9))
