"""User-scheduling block: penalty-relaxed linear programs driven to binary.

The binary slot assignment is relaxed to [0, 1], the concave binary-gap
penalty sum(alpha - alpha^2) is linearized at the incumbent and its slack is
pushed to zero by a growing penalty weight.  Candidates that cannot satisfy
the covertness level are removed up front, which also makes empty slots
legitimate (the covertness constraint is vacuous without a transmission).
The rounded result is polished by deterministic single-slot ascent and the
block never returns a schedule worse than its warm start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solver
from .context import IterationContext, schedule_objective
from .covert import MARGIN_TOL


@dataclass
class SchedulingDiagnostics:
    penalty_rounds: int
    final_penalty_gap: float
    reached_binary: bool
    improved: bool


def _relaxed_lp(efficiency, feasible, alpha_lo, mu, n_slots, n_ue, gap_tol, t0=1.0):
    """One penalty-SCA LP solve; returns the relaxed alpha and the penalty slack."""
    prog = solver.ConvexProgram()
    entries = np.argwhere(feasible)
    m = len(entries)
    alpha = prog.add_variable("alpha", m, lower=0.0, upper=1.0)
    psi = prog.add_variable("psi", 1)
    eta = prog.add_variable("eta", 1, lower=0.0)
    prog.add_objective_linear([psi[0], eta[0]], [1.0, -mu])

    by_ue = {k: [] for k in range(n_ue)}
    by_slot = {n: [] for n in range(n_slots)}
    for i, (n, k) in enumerate(entries):
        by_ue[k].append(i)
        by_slot[n].append(i)
    for k in range(n_ue):
        idx = by_ue[k]
        coef = [-efficiency[entries[i][0], k] / n_slots for i in idx]
        prog.add_linear_ineq(idx + [psi[0]], coef + [1.0], 0.0)
    for n in range(n_slots):
        if len(by_slot[n]) > 1:
            prog.add_linear_ineq(by_slot[n], [1.0] * len(by_slot[n]), 1.0)
    lo = np.array([alpha_lo[n, k] for n, k in entries])
    prog.add_linear_ineq(
        list(range(m)) + [eta[0]], list(1.0 - 2.0 * lo) + [-1.0], -float(np.sum(lo**2))
    )

    x0 = np.zeros(prog.n)
    start = 0.8 * lo + 0.1 / max(n_ue, 2)
    x0[alpha.indices()] = start
    per_ue0 = np.zeros(n_ue)
    for i, (n, k) in enumerate(entries):
        per_ue0[k] += efficiency[n, k] * start[i] / n_slots
    x0[psi[0]] = float(per_ue0.min()) - 1.0
    pen0 = float(np.sum((1.0 - 2.0 * lo) * start + lo**2))
    x0[eta[0]] = max(pen0, 0.0) + 1.0

    sol = solver.solve(prog, x0, gap_tol=gap_tol, t0=t0)
    relaxed = np.zeros((n_slots, n_ue))
    for i, (n, k) in enumerate(entries):
        relaxed[n, k] = sol.values["alpha"][i]
    penalty_gap = float(np.sum(relaxed - relaxed**2))
    return relaxed, penalty_gap, sol.status, sol.final_t


def _round_schedule(relaxed, efficiency, feasible):
    """Largest efficiency-weighted mass wins a slot; light slots stay empty."""
    n_slots, n_ue = relaxed.shape
    out = np.zeros((n_slots, n_ue), dtype=np.int8)
    for n in range(n_slots):
        mass = relaxed[n] * feasible[n]
        eligible = mass >= 0.5
        if not eligible.any():
            continue
        score = np.where(eligible, efficiency[n] * mass, -np.inf)
        best = int(np.argmax(score))  # argmax takes the lowest index on ties
        out[n, best] = 1
    return out


def polish_schedule(schedule, efficiency, feasible, max_sweeps=60):
    """Deterministic single-slot coordinate ascent on the min-over-UEs objective."""
    n_slots, n_ue = schedule.shape
    current = schedule.copy()
    sums = (efficiency * current).sum(axis=0)
    for _ in range(max_sweeps):
        changed = False
        for n in range(n_slots):
            held = int(np.argmax(current[n])) if current[n].any() else -1
            base = sums - (efficiency[n] * current[n])
            best_val = float(np.min(sums))
            best_choice = held
            for cand in range(-1, n_ue):
                if cand == held:
                    continue
                if cand >= 0 and not feasible[n, cand]:
                    continue
                trial = base.copy()
                if cand >= 0:
                    trial[cand] += efficiency[n, cand]
                val = float(np.min(trial))
                if val > best_val + 1e-15:
                    best_val = val
                    best_choice = cand
            if best_choice != held:
                current[n] = 0
                if best_choice >= 0:
                    current[n, best_choice] = 1
                sums = base
                if best_choice >= 0:
                    sums = base + efficiency[n] * current[n]
                changed = True
        if not changed:
            break
    return current


def optimize_scheduling(ctx: IterationContext):
    """Reassign slots to UEs; returns (schedule, phi, diagnostics).

    The returned reflection coefficients are re-aligned to the new schedule
    (slots keep their previous coefficients when their assignment is
    unchanged, and empty slots keep theirs as inert).
    """
    opts = ctx.options
    efficiency, min_zeta, coeffs, _, _ = ctx.candidate_tables()
    n_slots, n_ue = ctx.plan.schedule.shape
    feasible = min_zeta >= (1.0 - ctx.scenario.epsilon) - MARGIN_TOL
    warm = ctx.plan.schedule.astype(np.int8)
    # a warm assignment that turned covert-infeasible must not be kept
    warm = np.where(feasible, warm, 0).astype(np.int8)

    if not feasible.any():
        empty = np.zeros_like(warm)
        phi = _apply_alignment(ctx, empty)
        return empty, phi, SchedulingDiagnostics(0, 0.0, True, False)

    alpha_lo = warm.astype(float)
    mu = opts.penalty_init
    rounds = 0
    penalty_gap = np.inf
    relaxed = alpha_lo
    t0 = 1.0
    while rounds < 40:
        rounds += 1
        relaxed, penalty_gap, status, t_final = _relaxed_lp(
            efficiency, feasible, alpha_lo, mu, n_slots, n_ue, opts.gap_tol, t0=t0
        )
        if status not in ("optimal", "max-iter"):
            relaxed = alpha_lo
            break
        if penalty_gap <= opts.penalty_tol or mu >= opts.penalty_cap:
            break
        alpha_lo = relaxed
        mu = min(mu * opts.penalty_growth, opts.penalty_cap)
        # warm rounds restart the barrier path close to its previous end
        t0 = max(1.0, t_final / 1e4)

    rounded = _round_schedule(relaxed, efficiency, feasible)
    polished = polish_schedule(rounded, efficiency, feasible)
    warm_polished = polish_schedule(warm, efficiency, feasible)

    candidates = [warm, rounded, polished, warm_polished]
    values = [schedule_objective(efficiency, c) for c in candidates]
    best = int(np.argmax(values))  # prefers the warm start on exact ties
    schedule = candidates[best]
    phi = _apply_alignment(ctx, schedule)
    return (
        schedule,
        phi,
        SchedulingDiagnostics(
            penalty_rounds=rounds,
            final_penalty_gap=penalty_gap,
            reached_binary=penalty_gap <= opts.penalty_tol,
            improved=values[best] > values[0] + 1e-15,
        ),
    )


def _apply_alignment(ctx, schedule):
    """Reflection coefficients matching a schedule, from the candidate cache."""
    _, _, coeffs, _, _ = ctx.candidate_tables()
    phi = ctx.plan.phi.copy()
    scheduled = np.where(schedule.sum(axis=1) > 0, np.argmax(schedule, axis=1), -1)
    for n in range(schedule.shape[0]):
        if scheduled[n] >= 0:
            phi[n] = coeffs[n, scheduled[n]]
    return phi


def brute_force_schedule(efficiency, feasible):
    """Exhaustive max-min assignment over all per-slot choices (test oracle)."""
    n_slots, n_ue = efficiency.shape
    best_val = -np.inf
    best = np.zeros((n_slots, n_ue), dtype=np.int8)
    options = [[-1] + [k for k in range(n_ue) if feasible[n, k]] for n in range(n_slots)]

    def rec(n, sums):
        nonlocal best_val, best
        if n == n_slots:
            val = float(np.min(sums)) / n_slots
            if val > best_val + 1e-15:
                best_val = val
                snapshot = np.zeros((n_slots, n_ue), dtype=np.int8)
                for slot, choice in enumerate(stack):
                    if choice >= 0:
                        snapshot[slot, choice] = 1
                best = snapshot
            return
        for choice in options[n]:
            stack.append(choice)
            if choice >= 0:
                sums[choice] += efficiency[n, choice]
            rec(n + 1, sums)
            if choice >= 0:
                sums[choice] -= efficiency[n, choice]
            stack.pop()

    stack: list[int] = []
    rec(0, np.zeros(n_ue))
    return best, best_val
