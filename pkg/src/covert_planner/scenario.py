"""Scenario ingestion, validation, random UE placement and the initial plan.

Scenario configs are INI-style text with fixed sections and units:

    [geometry]    positions in meters ("x y z"), horizon/slot in seconds,
                  either explicit ue1..ueK entries ("x y") or the quartet
                  ue_count / ue_ring_inner_m / ue_ring_outer_m / ue_seed
    [power]       p_a_max_w, p_j_max_w, total_budget_ws (transmit energy
                  budget, watt-seconds), noise_dbm (scalar or one per UE),
                  bandwidth_hz
    [kinematics]  v_max_* (m/s), a_max_* (m/s^2), safety_distance_m,
                  permitted_radius_m
    [atmosphere]  carrier_hz, pressure_pa, temperature_c, path_loss_exponent,
                  and either humidity_percent or calibrate_kappa (per-meter
                  absorption target the humidity is solved for)
    [irs]         elements_x, elements_y, spacing_x_m, spacing_y_m
    [propulsion]  blade_power_w, induced_power_w, c0, c1, c2
    [covertness]  epsilon

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from . import beamforming, channel, covert
from .errors import ConfigError, ConstraintError, GeometryError, InfeasibleError
from .kinematics import FlightLimits, PropulsionConstants, Trajectory, check_flight_constraints, check_separation

_SECTIONS = ("geometry", "power", "kinematics", "atmosphere", "irs", "propulsion", "covertness")

# Fraction of each kinematic limit used by the constructed circles, leaving
# strict-interior room for the barrier solver's warm starts.
_CIRCLE_MARGIN = 0.95


@dataclass(frozen=True)
class Scenario:
    """Immutable world description; every field validated at construction."""

    ap_position: np.ndarray
    ue_positions: np.ndarray  # (K, 3), ground level
    uirs_station: np.ndarray
    ucj_station: np.ndarray
    altitude_uirs: float
    altitude_ucj: float
    horizon: float  # s
    dt: float  # s
    n_slots: int
    epsilon: float
    bandwidth: float  # Hz
    noise_power: np.ndarray  # (K,) W
    p_a_max: float
    p_j_max: float
    total_budget: float  # W*s over the mission
    v_max_uirs: float
    v_max_ucj: float
    a_max_uirs: float
    a_max_ucj: float
    safety_distance: float
    permitted_radius: float
    atmosphere: channel.AtmosphereParams
    path_loss_exponent: float
    irs: channel.IrsGeometry
    propulsion: PropulsionConstants

    @property
    def n_ue(self) -> int:
        return len(self.ue_positions)

    def limits_uirs(self) -> FlightLimits:
        return FlightLimits(self.v_max_uirs, self.a_max_uirs)

    def limits_ucj(self) -> FlightLimits:
        return FlightLimits(self.v_max_ucj, self.a_max_ucj)


@dataclass(frozen=True)
class Plan:
    """One full decision: schedule, powers, reflection coefficients, trajectories."""

    schedule: np.ndarray  # (N, K) binary
    p_a: np.ndarray  # (N,) W
    p_hat_j: np.ndarray  # (N,) W
    phi: np.ndarray  # (N, L) complex, unit-disk moduli
    traj_r: Trajectory
    traj_j: Trajectory

    def scheduled_ue(self) -> np.ndarray:
        """(N,) scheduled UE index per slot, -1 when empty."""
        has = self.schedule.sum(axis=1) > 0
        idx = np.argmax(self.schedule, axis=1)
        return np.where(has, idx, -1)

    def with_updates(self, **kwargs) -> "Plan":
        return replace(self, **kwargs)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _section(parser, name):
    if not parser.has_section(name):
        raise ConfigError(name, "missing section")
    return dict(parser.items(name))


def _pop_float(values, section, key, default=None):
    raw = values.pop(key, None)
    if raw is None:
        if default is not None:
            return default
        raise ConfigError(f"{section}.{key}", "missing required key")
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"not a number: {raw!r}") from exc


def _pop_int(values, section, key, default=None):
    v = _pop_float(values, section, key, default)
    if v != int(v):
        raise ConfigError(f"{section}.{key}", f"not an integer: {v}")
    return int(v)


def _pop_vector(values, section, key, dim):
    raw = values.pop(key, None)
    if raw is None:
        raise ConfigError(f"{section}.{key}", "missing required key")
    parts = raw.split()
    if len(parts) != dim:
        raise ConfigError(f"{section}.{key}", f"expected {dim} numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"not numeric: {raw!r}") from exc


def _reject_unknown(values, section):
    if values:
        key = sorted(values)[0]
        raise ConfigError(f"{section}.{key}", "unknown key")


def place_ues(seed: int, count: int, r_inner: float, r_outer: float, center) -> np.ndarray:
    """Ground positions uniform by area over the annulus [r_inner, r_outer]."""
    if not 0.0 < r_inner < r_outer:
        raise GeometryError(f"need 0 < inner < outer radius, got {r_inner}, {r_outer}")
    rng = np.random.default_rng(seed)
    radii = np.sqrt(r_inner**2 + rng.uniform(0.0, 1.0, count) * (r_outer**2 - r_inner**2))
    angles = rng.uniform(0.0, 2.0 * np.pi, count)
    center = np.asarray(center, dtype=float)
    out = np.zeros((count, 3))
    out[:, 0] = center[0] + radii * np.cos(angles)
    out[:, 1] = center[1] + radii * np.sin(angles)
    return out


def load_scenario(config_text: str, ue_seed_override: int | None = None) -> Scenario:
    """Parse and validate a scenario config; see the module docstring for units."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(config_text)
    except configparser.Error as exc:
        raise ConfigError("<config>", f"unparsable: {exc}") from exc
    for extra in set(parser.sections()) - set(_SECTIONS):
        raise ConfigError(extra, "unknown section")

    geo = _section(parser, "geometry")
    ap = _pop_vector(geo, "geometry", "ap", 3)
    uirs_station = _pop_vector(geo, "geometry", "uirs_station", 3)
    ucj_station = _pop_vector(geo, "geometry", "ucj_station", 3)
    alt_r = _pop_float(geo, "geometry", "uirs_altitude")
    alt_j = _pop_float(geo, "geometry", "ucj_altitude")
    horizon = _pop_float(geo, "geometry", "horizon_s")
    dt = _pop_float(geo, "geometry", "slot_s")

    explicit = sorted(k for k in geo if k.startswith("ue") and k[2:].isdigit())
    if explicit:
        expected = [f"ue{i + 1}" for i in range(len(explicit))]
        if explicit != sorted(expected):
            raise ConfigError("geometry.ue*", f"expected consecutive ue1..ue{len(explicit)}")
        ue = np.zeros((len(explicit), 3))
        for i, key in enumerate(expected):
            ue[i, :2] = _pop_vector(geo, "geometry", key, 2)
    else:
        count = _pop_int(geo, "geometry", "ue_count")
        inner = _pop_float(geo, "geometry", "ue_ring_inner_m")
        outer = _pop_float(geo, "geometry", "ue_ring_outer_m")
        seed = _pop_int(geo, "geometry", "ue_seed")
        if ue_seed_override is not None:
            seed = ue_seed_override
        ue = place_ues(seed, count, inner, outer, ap)
    _reject_unknown(geo, "geometry")

    power = _section(parser, "power")
    p_a_max = _pop_float(power, "power", "p_a_max_w")
    p_j_max = _pop_float(power, "power", "p_j_max_w")
    budget = _pop_float(power, "power", "total_budget_ws")
    bandwidth = _pop_float(power, "power", "bandwidth_hz")
    noise_raw = power.pop("noise_dbm", None)
    if noise_raw is None:
        raise ConfigError("power.noise_dbm", "missing required key")
    noise_dbm = np.array([float(p) for p in noise_raw.split()])
    if noise_dbm.size == 1:
        noise_dbm = np.repeat(noise_dbm, len(ue))
    if noise_dbm.size != len(ue):
        raise ConfigError("power.noise_dbm", f"expected 1 or {len(ue)} values, got {noise_dbm.size}")
    noise_w = 10.0 ** ((noise_dbm - 30.0) / 10.0)
    _reject_unknown(power, "power")

    kin = _section(parser, "kinematics")
    v_max_r = _pop_float(kin, "kinematics", "v_max_uirs")
    v_max_j = _pop_float(kin, "kinematics", "v_max_ucj")
    a_max_r = _pop_float(kin, "kinematics", "a_max_uirs")
    a_max_j = _pop_float(kin, "kinematics", "a_max_ucj")
    safety = _pop_float(kin, "kinematics", "safety_distance_m")
    permitted = _pop_float(kin, "kinematics", "permitted_radius_m")
    _reject_unknown(kin, "kinematics")

    atm = _section(parser, "atmosphere")
    f_c = _pop_float(atm, "atmosphere", "carrier_hz")
    pressure = _pop_float(atm, "atmosphere", "pressure_pa", 101325.0)
    temperature = _pop_float(atm, "atmosphere", "temperature_c", 22.85)
    rho = _pop_float(atm, "atmosphere", "path_loss_exponent", 2.0)
    humidity = atm.pop("humidity_percent", None)
    kappa_target = atm.pop("calibrate_kappa", None)
    _reject_unknown(atm, "atmosphere")
    if (humidity is None) == (kappa_target is None):
        raise ConfigError(
            "atmosphere.humidity_percent", "exactly one of humidity_percent / calibrate_kappa required"
        )
    if kappa_target is not None:
        humidity = channel.calibrate_humidity(float(kappa_target), f_c, pressure, temperature)
    atmosphere = channel.AtmosphereParams(
        f_c_hz=f_c, pressure_pa=pressure, temperature_c=temperature, humidity_percent=float(humidity)
    )

    irs_sec = _section(parser, "irs")
    irs = channel.IrsGeometry(
        l_x=_pop_int(irs_sec, "irs", "elements_x"),
        l_y=_pop_int(irs_sec, "irs", "elements_y"),
        delta_x=_pop_float(irs_sec, "irs", "spacing_x_m"),
        delta_y=_pop_float(irs_sec, "irs", "spacing_y_m"),
    )
    _reject_unknown(irs_sec, "irs")

    prop_sec = _section(parser, "propulsion")
    propulsion = PropulsionConstants(
        p_blade=_pop_float(prop_sec, "propulsion", "blade_power_w"),
        p_induced=_pop_float(prop_sec, "propulsion", "induced_power_w"),
        c0=_pop_float(prop_sec, "propulsion", "c0"),
        c1=_pop_float(prop_sec, "propulsion", "c1"),
        c2=_pop_float(prop_sec, "propulsion", "c2"),
    )
    _reject_unknown(prop_sec, "propulsion")

    cov = _section(parser, "covertness")
    epsilon = _pop_float(cov, "covertness", "epsilon")
    _reject_unknown(cov, "covertness")

    # ---- invariants -------------------------------------------------------
    ratio = horizon / dt
    n_slots = round(ratio)
    if dt <= 0 or n_slots < 2 or abs(ratio - n_slots) > 1e-9 * max(1.0, ratio):
        raise ConstraintError("slots-integral", f"horizon {horizon} not an integer multiple of slot {dt}")
    if not 0.0 < epsilon < 1.0:
        raise ConstraintError("epsilon-range", f"epsilon must lie strictly in (0, 1), got {epsilon}")
    if min(p_a_max, p_j_max, budget) < 0.0:
        raise ConstraintError("power-nonnegative", "power limits must be nonnegative")
    if alt_r <= 0.0 or alt_j <= 0.0:
        raise ConstraintError("altitude-positive", "UAV altitudes must be positive")
    if len(ue) < 2:
        raise ConstraintError("ue-count", "need at least two UEs so a warden exists")
    if abs(ap[2]) > 1e-9 or np.any(np.abs(ue[:, 2]) > 1e-9):
        raise ConstraintError("ground-level", "AP and UEs must sit at z = 0")
    if abs(uirs_station[2] - alt_r) > 1e-9 or abs(ucj_station[2] - alt_j) > 1e-9:
        raise ConstraintError("station-altitude", "station z must equal the UAV altitude")
    for name, station in (("uirs", uirs_station), ("ucj", ucj_station)):
        if np.linalg.norm(station[:2] - ap[:2]) > permitted + 1e-9:
            raise ConstraintError("station-in-zone", f"{name} station outside the permitted radius")
    if rho < 2.0:
        raise ConstraintError("path-loss-exponent", f"exponent must be >= 2, got {rho}")
    if min(v_max_r, v_max_j, a_max_r, a_max_j, safety, permitted, bandwidth) <= 0.0:
        raise ConstraintError("kinematics-positive", "kinematic limits and bandwidth must be positive")

    return Scenario(
        ap_position=ap,
        ue_positions=ue,
        uirs_station=uirs_station,
        ucj_station=ucj_station,
        altitude_uirs=alt_r,
        altitude_ucj=alt_j,
        horizon=horizon,
        dt=dt,
        n_slots=n_slots,
        epsilon=epsilon,
        bandwidth=bandwidth,
        noise_power=noise_w,
        p_a_max=p_a_max,
        p_j_max=p_j_max,
        total_budget=budget,
        v_max_uirs=v_max_r,
        v_max_ucj=v_max_j,
        a_max_uirs=a_max_r,
        a_max_ucj=a_max_j,
        safety_distance=safety,
        permitted_radius=permitted,
        atmosphere=atmosphere,
        path_loss_exponent=rho,
        irs=irs,
        propulsion=propulsion,
    )


def serialize_scenario(s: Scenario) -> str:
    """Config text reproducing the scenario exactly (UE positions explicit)."""

    def num(x):
        return format(float(x), ".17g")

    def vec(v):
        return " ".join(num(c) for c in v)

    parser = configparser.ConfigParser()
    parser["geometry"] = {
        "ap": vec(s.ap_position),
        "uirs_station": vec(s.uirs_station),
        "ucj_station": vec(s.ucj_station),
        "uirs_altitude": num(s.altitude_uirs),
        "ucj_altitude": num(s.altitude_ucj),
        "horizon_s": num(s.horizon),
        "slot_s": num(s.dt),
    }
    for i, pos in enumerate(s.ue_positions):
        parser["geometry"][f"ue{i + 1}"] = f"{num(pos[0])} {num(pos[1])}"
    noise_dbm = 10.0 * np.log10(s.noise_power) + 30.0
    parser["power"] = {
        "p_a_max_w": num(s.p_a_max),
        "p_j_max_w": num(s.p_j_max),
        "total_budget_ws": num(s.total_budget),
        "bandwidth_hz": num(s.bandwidth),
        "noise_dbm": " ".join(num(v) for v in noise_dbm),
    }
    parser["kinematics"] = {
        "v_max_uirs": num(s.v_max_uirs),
        "v_max_ucj": num(s.v_max_ucj),
        "a_max_uirs": num(s.a_max_uirs),
        "a_max_ucj": num(s.a_max_ucj),
        "safety_distance_m": num(s.safety_distance),
        "permitted_radius_m": num(s.permitted_radius),
    }
    parser["atmosphere"] = {
        "carrier_hz": num(s.atmosphere.f_c_hz),
        "pressure_pa": num(s.atmosphere.pressure_pa),
        "temperature_c": num(s.atmosphere.temperature_c),
        "humidity_percent": num(s.atmosphere.humidity_percent),
        "path_loss_exponent": num(s.path_loss_exponent),
    }
    parser["irs"] = {
        "elements_x": str(s.irs.l_x),
        "elements_y": str(s.irs.l_y),
        "spacing_x_m": num(s.irs.delta_x),
        "spacing_y_m": num(s.irs.delta_y),
    }
    parser["propulsion"] = {
        "blade_power_w": num(s.propulsion.p_blade),
        "induced_power_w": num(s.propulsion.p_induced),
        "c0": num(s.propulsion.c0),
        "c1": num(s.propulsion.c1),
        "c2": num(s.propulsion.c2),
    }
    parser["covertness"] = {"epsilon": num(s.epsilon)}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Initial feasible plan
# ---------------------------------------------------------------------------


def _circle_trajectory(center_xy, radius, phase, altitude, n_slots, dt) -> Trajectory:
    ang = phase + 2.0 * np.pi * np.arange(n_slots) / (n_slots - 1)
    pos = np.zeros((n_slots, 3))
    pos[:, 0] = center_xy[0] + radius * np.cos(ang)
    pos[:, 1] = center_xy[1] + radius * np.sin(ang)
    pos[:, 2] = altitude
    vel = np.zeros_like(pos)
    vel[:-1] = (pos[1:] - pos[:-1]) / dt
    vel[-1] = vel[0]
    return Trajectory(positions=pos, velocities=vel, dt=dt)


def _hover_trajectory(point_xy, altitude, n_slots, dt) -> Trajectory:
    pos = np.zeros((n_slots, 3))
    pos[:, 0] = point_xy[0]
    pos[:, 1] = point_xy[1]
    pos[:, 2] = altitude
    return Trajectory(positions=pos, velocities=np.zeros_like(pos), dt=dt)


def _circle_radius_cap(n_slots, dt, v_max, a_max):
    half_step = math.pi / (n_slots - 1)
    r_speed = _CIRCLE_MARGIN * v_max * dt / (2.0 * math.sin(half_step))
    # worst acceleration occurs across the periodic seam: 2|v|sin(step)
    r_accel = _CIRCLE_MARGIN * a_max * dt / (4.0 * math.sin(half_step) * math.sin(2.0 * half_step))
    return min(r_speed, r_accel)


def _initial_circle(scenario: Scenario, station, altitude, v_max, a_max, fallback_phase):
    center = scenario.ap_position[:2]
    offset = station[:2] - center
    r_station = float(np.linalg.norm(offset))
    if scenario.n_slots < 4:
        # too few waypoints for a polygonal loop: hover at the station
        return _hover_trajectory(station[:2], altitude, scenario.n_slots, scenario.dt), 0.0, 0.0
    cap = _circle_radius_cap(scenario.n_slots, scenario.dt, v_max, a_max)
    if 0.0 < r_station <= min(cap, 0.99 * scenario.permitted_radius):
        radius, phase = r_station, math.atan2(offset[1], offset[0])
    else:
        radius = min(cap, scenario.permitted_radius / 2.0)
        phase = math.atan2(offset[1], offset[0]) if r_station > 0 else fallback_phase
    return _circle_trajectory(center, radius, phase, altitude, scenario.n_slots, scenario.dt), radius, phase


def initial_feasible_plan(scenario: Scenario) -> Plan:
    """Concentric circular flights, quarter/half-budget powers, round-robin
    schedule restricted to covertly feasible slots, closed-form beamforming.

    Raises InfeasibleError naming the binding constraint when no circle
    satisfies the kinematic and separation limits.
    """
    n, n_ue = scenario.n_slots, scenario.n_ue
    p_a_level = min(scenario.total_budget / (4.0 * scenario.horizon), scenario.p_a_max)
    p_j_level = min(scenario.total_budget / (2.0 * scenario.horizon), scenario.p_j_max)
    p_a = np.full(n, p_a_level)
    p_hat_j = np.full(n, p_j_level)

    traj_r, _, phase_r = _initial_circle(
        scenario, scenario.uirs_station, scenario.altitude_uirs, scenario.v_max_uirs, scenario.a_max_uirs, 0.0
    )
    traj_j, radius_j, _ = _initial_circle(
        scenario, scenario.ucj_station, scenario.altitude_ucj, scenario.v_max_ucj, scenario.a_max_ucj, math.pi
    )
    if check_separation(traj_r, traj_j, scenario.safety_distance):
        if radius_j > 0.0:
            # same-bearing circles too close: oppose the jammer's phase
            traj_j = _circle_trajectory(
                scenario.ap_position[:2], radius_j, phase_r + math.pi, scenario.altitude_ucj, n, scenario.dt
            )
        if check_separation(traj_r, traj_j, scenario.safety_distance):
            raise InfeasibleError(
                "safety-separation: no initial flight pair keeps the required safety distance"
            )

    # Round-robin schedule over covert-feasible candidates; a slot stays empty
    # when no UE can be served covertly there.
    schedule = np.zeros((n, n_ue), dtype=np.int8)
    phi = np.tile(beamforming.identity_coefficients(scenario.irs), (n, 1))
    pointer = 0
    threshold = 1.0 - scenario.epsilon - 1e-12
    for slot in range(n):
        q_r = traj_r.positions[slot]
        q_j = traj_j.positions[slot]
        for probe in range(n_ue):
            cand = (pointer + probe) % n_ue
            gains = beamforming.aligned_slot_gains(scenario, q_r, q_j, cand)
            wardens = [m for m in range(n_ue) if m != cand]
            zeta = covert.zeta_star_array(
                p_a[slot], p_hat_j[slot], gains.g_ar[wardens], gains.g_j[wardens]
            )
            if float(np.min(zeta)) >= threshold:
                schedule[slot, cand] = 1
                phi[slot] = gains.coefficients
                pointer = (cand + 1) % n_ue
                break

    return Plan(schedule=schedule, p_a=p_a, p_hat_j=p_hat_j, phi=phi, traj_r=traj_r, traj_j=traj_j)


# ---------------------------------------------------------------------------
# Whole-plan validation
# ---------------------------------------------------------------------------


def validate_plan(plan: Plan, scenario: Scenario, anchors=None) -> list[str]:
    """All plan-level violations (flight, separation, scheduling, beamforming,
    power budget, covertness); empty list means the plan is feasible.

    ``anchors``: optional (uirs, ucj) station positions pinning the starts.
    """
    issues: list[str] = []
    anchor_r, anchor_j = anchors if anchors is not None else (None, None)
    for name, traj, limits, alt, anchor in (
        ("uirs", plan.traj_r, scenario.limits_uirs(), scenario.altitude_uirs, anchor_r),
        ("ucj", plan.traj_j, scenario.limits_ucj(), scenario.altitude_ucj, anchor_j),
    ):
        for v in check_flight_constraints(
            traj, limits, scenario.ap_position, scenario.permitted_radius, alt, anchor=anchor
        ):
            issues.append(f"{name}-{v}")
    issues.extend(str(v) for v in check_separation(plan.traj_r, plan.traj_j, scenario.safety_distance))

    if plan.schedule.shape != (scenario.n_slots, scenario.n_ue):
        issues.append(f"schedule-shape {plan.schedule.shape}")
        return issues
    if not np.all((plan.schedule == 0) | (plan.schedule == 1)):
        issues.append("schedule-binary")
    if np.any(plan.schedule.sum(axis=1) > 1):
        issues.append("schedule-single-ue-per-slot")

    if np.any(np.abs(plan.phi) > 1.0 + 1e-9):
        issues.append("beamforming-amplitude")

    if np.any(plan.p_a < -1e-12) or np.any(plan.p_hat_j < -1e-12):
        issues.append("power-nonnegative")
    if np.any(plan.p_a > scenario.p_a_max + 1e-9) or np.any(plan.p_hat_j > scenario.p_j_max + 1e-9):
        issues.append("power-peak-limit")
    spent = scenario.dt * float(np.sum(plan.p_a + plan.p_hat_j))
    if spent > scenario.total_budget + 1e-6:
        issues.append(f"power-budget ({spent:.6f} > {scenario.total_budget:.6f} Ws)")

    gains = covert.compute_plan_gains(scenario, plan)
    margins, ok = covert.covertness_check(plan, gains, scenario.epsilon)
    if not ok:
        bad = np.nonzero(margins < -covert.MARGIN_TOL)[0]
        issues.append(f"covertness at slots {[int(b) + 1 for b in bad[:10]]}")
    return issues
