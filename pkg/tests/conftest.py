import importlib.resources as resources

import numpy as np
import pytest

from covert_planner import scenario as sc


def config_text(name: str) -> str:
    return (resources.files("covert_planner") / "configs" / f"{name}.cfg").read_text()


def mini_config(
    n_ue=2,
    horizon=0.4,
    slot=0.2,
    epsilon=0.01,
    elements=(2, 2),
    budget=None,
    ue_positions=((120.0, 0.0), (-130.0, 40.0)),
    p_max=1.0,
    v_max=25.0,
    a_max=6.0,
    stations=((20.0, 0.0), (-20.0, 0.0)),
    ring=None,
    seed=1,
):
    """Small INI config for unit tests; explicit UEs unless a ring is given."""
    if budget is None:
        budget = 4.0 * horizon  # same per-second level as the shipped configs
    geometry = [
        "[geometry]",
        "ap = 0 0 0",
        f"uirs_station = {stations[0][0]} {stations[0][1]} 50",
        f"ucj_station = {stations[1][0]} {stations[1][1]} 50",
        "uirs_altitude = 50",
        "ucj_altitude = 50",
        f"horizon_s = {horizon}",
        f"slot_s = {slot}",
    ]
    if ring is not None:
        geometry += [
            f"ue_count = {n_ue}",
            f"ue_ring_inner_m = {ring[0]}",
            f"ue_ring_outer_m = {ring[1]}",
            f"ue_seed = {seed}",
        ]
    else:
        geometry += [f"ue{i + 1} = {p[0]} {p[1]}" for i, p in enumerate(ue_positions[:n_ue])]
    return "\n".join(
        geometry
        + [
            "[power]",
            f"p_a_max_w = {p_max}",
            f"p_j_max_w = {p_max}",
            f"total_budget_ws = {budget}",
            "bandwidth_hz = 5.0e8",
            "noise_dbm = -180",
            "[kinematics]",
            f"v_max_uirs = {v_max}",
            f"v_max_ucj = {v_max}",
            f"a_max_uirs = {a_max}",
            f"a_max_ucj = {a_max}",
            "safety_distance_m = 10",
            "permitted_radius_m = 250",
            "[atmosphere]",
            "carrier_hz = 3.0e11",
            "pressure_pa = 101325",
            "temperature_c = 22.85",
            "calibrate_kappa = 3.2094e-4",
            "path_loss_exponent = 2",
            "[irs]",
            f"elements_x = {elements[0]}",
            f"elements_y = {elements[1]}",
            "spacing_x_m = 1.0e-3",
            "spacing_y_m = 1.0e-3",
            "[propulsion]",
            "blade_power_w = 79.856",
            "induced_power_w = 88.63",
            "c0 = 2.0833e-4",
            "c1 = 0.0092",
            "c2 = 0.0308",
            "[covertness]",
            f"epsilon = {epsilon}",
        ]
    )


@pytest.fixture(scope="session")
def default_scenario():
    return sc.load_scenario(config_text("default"))


@pytest.fixture(scope="session")
def desk_scenario():
    return sc.load_scenario(config_text("desk"))


@pytest.fixture(scope="session")
def mini_scenario():
    return sc.load_scenario(mini_config())


@pytest.fixture(scope="session")
def mini_plan(mini_scenario):
    return sc.initial_feasible_plan(mini_scenario)
