import numpy as np
import pytest

from covert_planner import scenario as sc
from covert_planner.context import IterationContext, schedule_objective
from covert_planner.scheduling import (
    brute_force_schedule,
    optimize_scheduling,
    polish_schedule,
)

from conftest import mini_config


def synthetic_tables(rng, n_slots=4, n_ue=2, eps=0.5):
    efficiency = rng.uniform(0.0, 1.0, (n_slots, n_ue))
    min_zeta = rng.uniform(0.3, 1.0, (n_slots, n_ue))
    feasible = min_zeta >= 1.0 - eps
    return efficiency, feasible


class FakeContext:
    """IterationContext stand-in exposing pre-built scheduling tables."""

    def __init__(self, efficiency, min_zeta, epsilon, schedule=None):
        from covert_planner.context import BscaOptions

        n_slots, n_ue = efficiency.shape
        self.options = BscaOptions()
        self.scenario = type("S", (), {"epsilon": epsilon})()
        phi = np.ones((n_slots, 1), dtype=complex)
        sched = np.zeros((n_slots, n_ue), dtype=np.int8) if schedule is None else schedule
        self.plan = type(
            "P", (), {"schedule": sched, "phi": phi, "p_a": np.ones(n_slots), "p_hat_j": np.ones(n_slots)}
        )()
        self._tables = (
            efficiency,
            min_zeta,
            np.ones((n_slots, n_ue, 1), dtype=complex),
            None,
            None,
        )

    def candidate_tables(self):
        return self._tables


class TestAgainstBruteForce:
    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(2024)
        for draw in range(20):
            efficiency, feasible = synthetic_tables(rng)
            min_zeta = np.where(feasible, 1.0, 0.0)
            ctx = FakeContext(efficiency, min_zeta, epsilon=0.5)
            schedule, _, diag = optimize_scheduling(ctx)
            _, best_val = brute_force_schedule(efficiency / 1.0, feasible)
            got = schedule_objective(efficiency, schedule)
            assert got == pytest.approx(best_val, abs=1e-12), f"draw {draw}"

    def test_all_infeasible_yields_empty_schedule(self):
        rng = np.random.default_rng(1)
        efficiency = rng.uniform(0.1, 1.0, (4, 2))
        min_zeta = np.full((4, 2), 0.2)  # all below 1 - eps for eps = 0.5
        ctx = FakeContext(efficiency, min_zeta, epsilon=0.5)
        schedule, _, diag = optimize_scheduling(ctx)
        assert schedule.sum() == 0

    def test_output_binary_and_single_ue(self):
        rng = np.random.default_rng(2)
        efficiency, feasible = synthetic_tables(rng, n_slots=6, n_ue=3)
        min_zeta = np.where(feasible, 1.0, 0.0)
        ctx = FakeContext(efficiency, min_zeta, epsilon=0.5)
        schedule, _, _ = optimize_scheduling(ctx)
        assert set(np.unique(schedule)).issubset({0, 1})
        assert np.all(schedule.sum(axis=1) <= 1)
        assert np.all(schedule[~feasible] == 0)

    def test_never_worse_than_warm_start(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            efficiency, feasible = synthetic_tables(rng, n_slots=5, n_ue=3)
            min_zeta = np.where(feasible, 1.0, 0.0)
            warm = np.zeros((5, 3), dtype=np.int8)
            for n in range(5):
                ks = np.nonzero(feasible[n])[0]
                if ks.size:
                    warm[n, ks[0]] = 1
            ctx = FakeContext(efficiency, min_zeta, epsilon=0.5, schedule=warm)
            schedule, _, _ = optimize_scheduling(ctx)
            assert schedule_objective(efficiency, schedule) >= schedule_objective(efficiency, warm) - 1e-15


class TestPolish:
    def test_polish_improves_or_keeps(self):
        rng = np.random.default_rng(4)
        efficiency, feasible = synthetic_tables(rng, n_slots=8, n_ue=3)
        start = np.zeros((8, 3), dtype=np.int8)
        polished = polish_schedule(start, efficiency, feasible)
        assert schedule_objective(efficiency, polished) >= 0.0
        again = polish_schedule(polished, efficiency, feasible)
        assert np.array_equal(polished, again)  # fixed point


class TestOnRealScenario:
    def test_improves_round_robin_on_mini(self, mini_scenario, mini_plan):
        ctx = IterationContext(mini_scenario, mini_plan)
        schedule, phi, diag = optimize_scheduling(ctx)
        eff, _, _, _, _ = ctx.candidate_tables()
        assert schedule_objective(eff, schedule) >= schedule_objective(eff, mini_plan.schedule) - 1e-15
        new_plan = mini_plan.with_updates(schedule=schedule, phi=phi)
        issues = sc.validate_plan(new_plan, mini_scenario)
        assert issues == []

    def test_desk_schedule_block(self, desk_scenario):
        plan = sc.initial_feasible_plan(desk_scenario)
        ctx = IterationContext(desk_scenario, plan)
        schedule, phi, diag = optimize_scheduling(ctx)
        eff, _, _, _, _ = ctx.candidate_tables()
        assert schedule_objective(eff, schedule) >= schedule_objective(eff, plan.schedule) - 1e-15
        new_plan = plan.with_updates(schedule=schedule, phi=phi)
        anchors = (plan.traj_r.positions[0], plan.traj_j.positions[0])
        assert sc.validate_plan(new_plan, desk_scenario, anchors=anchors) == []
