import numpy as np
import pytest

from covert_planner import covert
from covert_planner import scenario as sc
from covert_planner.errors import ConfigError, ConstraintError, GeometryError

from conftest import config_text, mini_config


class TestLoadScenario:
    def test_default_config_shape(self, default_scenario):
        s = default_scenario
        assert s.n_ue == 5
        assert s.horizon == 30.0
        assert s.dt == 0.1
        assert s.n_slots == 300
        assert s.irs.size == 30
        assert s.atmosphere.kappa == pytest.approx(3.2094e-4, rel=1e-6)
        assert np.allclose(s.noise_power, 1e-21)

    def test_desk_config_shape(self, desk_scenario):
        s = desk_scenario
        assert (s.n_ue, s.n_slots, s.irs.size, s.epsilon) == (3, 60, 12, 0.01)

    def test_epsilon_boundary_rejected(self):
        with pytest.raises(ConstraintError, match="epsilon-range"):
            sc.load_scenario(mini_config(epsilon=0))
        with pytest.raises(ConstraintError, match="epsilon-range"):
            sc.load_scenario(mini_config(epsilon=1.0))

    def test_non_integral_slot_count_rejected(self):
        with pytest.raises(ConstraintError, match="slots-integral"):
            sc.load_scenario(mini_config(horizon=30.0, slot=0.07))

    def test_unknown_key_rejected(self):
        text = mini_config() + "\nwarp_drive = 9\n"
        with pytest.raises(ConfigError, match="covertness.warp_drive"):
            sc.load_scenario(text)

    def test_unknown_section_rejected(self):
        text = mini_config() + "\n[weather]\nrain = yes\n"
        with pytest.raises(ConfigError, match="weather"):
            sc.load_scenario(text)

    def test_missing_key_names_field_path(self):
        text = mini_config().replace("epsilon = 0.01", "")
        with pytest.raises(ConfigError, match="covertness.epsilon"):
            sc.load_scenario(text)

    def test_single_ue_rejected(self):
        with pytest.raises(ConstraintError, match="ue-count"):
            sc.load_scenario(mini_config(n_ue=1))

    def test_humidity_and_kappa_mutually_exclusive(self):
        text = mini_config().replace("calibrate_kappa = 3.2094e-4", "humidity_percent = 50\ncalibrate_kappa = 3.2094e-4")
        with pytest.raises(ConfigError):
            sc.load_scenario(text)

    def test_roundtrip_identity(self, default_scenario):
        s = default_scenario
        again = sc.load_scenario(sc.serialize_scenario(s))
        assert np.array_equal(again.ue_positions, s.ue_positions)
        assert np.array_equal(again.noise_power, s.noise_power)
        assert again.atmosphere == s.atmosphere
        assert again.irs == s.irs
        assert again.propulsion == s.propulsion
        assert (again.epsilon, again.n_slots, again.total_budget) == (s.epsilon, s.n_slots, s.total_budget)

    def test_seed_override(self):
        text = mini_config(ring=(100.0, 200.0), n_ue=3)
        a = sc.load_scenario(text, ue_seed_override=9)
        b = sc.load_scenario(text, ue_seed_override=9)
        c = sc.load_scenario(text)
        assert np.array_equal(a.ue_positions, b.ue_positions)
        assert not np.array_equal(a.ue_positions, c.ue_positions)


class TestPlaceUes:
    def test_radii_within_annulus(self):
        pts = sc.place_ues(7, 5, 100.0, 200.0, [0.0, 0.0, 0.0])
        r = np.linalg.norm(pts[:, :2], axis=1)
        assert pts.shape == (5, 3)
        assert np.all(pts[:, 2] == 0.0)
        assert np.all((r >= 100.0) & (r <= 200.0))

    def test_degenerate_annulus_rejected(self):
        with pytest.raises(GeometryError):
            sc.place_ues(7, 5, 150.0, 150.0, [0, 0, 0])

    def test_deterministic_per_seed(self):
        a = sc.place_ues(3, 8, 50.0, 90.0, [10.0, -5.0, 0.0])
        b = sc.place_ues(3, 8, 50.0, 90.0, [10.0, -5.0, 0.0])
        assert np.array_equal(a, b)

    def test_radial_cdf_matches_area_uniform_law(self):
        # KS distance between the empirical radial CDF and (r^2-R1^2)/(R2^2-R1^2)
        r1, r2 = 100.0, 200.0
        pts = sc.place_ues(123, 100_000, r1, r2, [0.0, 0.0, 0.0])
        r = np.sort(np.linalg.norm(pts[:, :2], axis=1))
        analytic = (r**2 - r1**2) / (r2**2 - r1**2)
        empirical = np.arange(1, len(r) + 1) / len(r)
        ks = np.max(np.abs(empirical - analytic))
        assert ks < 0.01


class TestInitialPlan:
    def test_initial_power_rule(self, default_scenario):
        plan = sc.initial_feasible_plan(default_scenario)
        assert np.allclose(plan.p_a, default_scenario.total_budget / (4.0 * default_scenario.horizon))
        assert np.allclose(plan.p_hat_j, default_scenario.total_budget / (2.0 * default_scenario.horizon))

    def test_passes_all_validators(self, default_scenario):
        plan = sc.initial_feasible_plan(default_scenario)
        anchors = (plan.traj_r.positions[0], plan.traj_j.positions[0])
        assert sc.validate_plan(plan, default_scenario, anchors=anchors) == []

    def test_stations_honored_when_reachable(self, default_scenario):
        plan = sc.initial_feasible_plan(default_scenario)
        assert np.allclose(plan.traj_r.positions[0], default_scenario.uirs_station, atol=1e-9)
        assert np.allclose(plan.traj_j.positions[0], default_scenario.ucj_station, atol=1e-9)

    def test_zero_budget_plan(self):
        s = sc.load_scenario(mini_config(budget=0.0))
        plan = sc.initial_feasible_plan(s)
        assert np.all(plan.p_a == 0.0)
        assert np.all(plan.p_hat_j == 0.0)
        rep = covert.evaluate_maee(plan, s)
        assert rep.maee == 0.0
        assert np.all(rep.zeta_star_min == 1.0)
        assert np.allclose(rep.margin, s.epsilon)
        assert rep.covert_feasible

    def test_round_robin_covers_every_ue(self, desk_scenario):
        plan = sc.initial_feasible_plan(desk_scenario)
        per_ue = plan.schedule.sum(axis=0)
        assert per_ue.min() > 0
        assert per_ue.max() - per_ue.min() <= 1

    def test_mini_plan_feasible(self, mini_scenario, mini_plan):
        anchors = (mini_plan.traj_r.positions[0], mini_plan.traj_j.positions[0])
        assert sc.validate_plan(mini_plan, mini_scenario, anchors=anchors) == []


class TestReport:
    def test_report_self_consistency(self, mini_scenario, mini_plan):
        rep = covert.evaluate_maee(mini_plan, mini_scenario)
        assert rep.recomputed_maee() == pytest.approx(rep.maee, rel=1e-12)

    def test_constructed_violation_flagged_at_exact_slot(self, mini_scenario, mini_plan):
        p_a = mini_plan.p_a.copy()
        p_a[1] *= 100.0  # inflate one slot far past the covert limit
        bad = mini_plan.with_updates(p_a=p_a)
        gains = covert.compute_plan_gains(mini_scenario, bad)
        margins, ok = covert.covertness_check(bad, gains, mini_scenario.epsilon)
        assert not ok
        assert margins[1] < -covert.MARGIN_TOL
        others = np.delete(margins, 1)
        assert np.all(others >= -covert.MARGIN_TOL)

    def test_rate_scaling_scales_maee(self, mini_scenario, mini_plan):
        rep = covert.evaluate_maee(mini_plan, mini_scenario)
        boosted = sc.load_scenario(
            mini_config().replace("bandwidth_hz = 5.0e8", "bandwidth_hz = 1.0e9")
        )
        rep2 = covert.evaluate_maee(mini_plan, boosted)
        assert rep2.maee == pytest.approx(2.0 * rep.maee, rel=1e-12)

    def test_json_and_csv_exports(self, mini_scenario, mini_plan):
        import json

        rep = covert.evaluate_maee(mini_plan, mini_scenario)
        payload = json.loads(rep.to_json())
        assert payload["covert_feasible"] is True
        assert len(payload["slots"]["margin"]) == mini_scenario.n_slots
        rows = rep.csv_rows()
        assert len(rows) == mini_scenario.n_slots
        assert rows[0][0] == 1
