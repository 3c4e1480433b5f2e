"""Rotary-wing trajectory representation, propulsion power and flight limits.

Trajectories are slot-sampled: position q[n+1] = q[n] + v[n] * dt for
n = 1..N-1, periodic start/end, constant altitude.  The velocity of the last
slot participates in the speed limit but not in the recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

# Arithmetic slack for the position recursion and periodicity checks; double
# round-off accumulated over a few hundred slots stays well below this.
RECURSION_TOL = 1e-9
# Slack applied to inequality limits so boundary-tight optimizer output passes.
LIMIT_TOL = 1e-6


@dataclass(frozen=True)
class PropulsionConstants:
    """Blade profile / induced hover powers and the three airframe constants."""

    p_blade: float  # W, blade profile power in hover
    p_induced: float  # W, induced power in hover
    c0: float  # 1/(m/s)^2, profile drag growth
    c1: float  # W/(m/s)^3, parasite drag
    c2: float  # (s/m)^2, induced-flow constant

    def __post_init__(self):
        if min(self.p_blade, self.p_induced, self.c0, self.c1, self.c2) <= 0.0:
            raise ValueError("propulsion constants must be positive")


@dataclass(frozen=True)
class FlightLimits:
    v_max: float  # m/s
    a_max: float  # m/s^2


@dataclass(frozen=True)
class Trajectory:
    """Slot-sampled positions (N, 3) and velocities (N, 3) at fixed altitude."""

    positions: np.ndarray
    velocities: np.ndarray
    dt: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        v = np.asarray(self.velocities, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or v.shape != p.shape:
            raise ShapeError(f"expected matching (N, 3) arrays, got {p.shape} and {v.shape}")
        if p.shape[0] < 2:
            raise ShapeError("trajectory needs at least two slots")
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "velocities", v)

    @property
    def slots(self) -> int:
        return self.positions.shape[0]

    @property
    def altitude(self) -> float:
        return float(self.positions[0, 2])

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)


def propulsion_power(velocity, constants: PropulsionConstants):
    """Mechanical power drawn at a given velocity (3-vector or (N, 3) array).

    p_blade*(1 + c0*s^2) + c1*s^3 + p_induced*(sqrt(1 + c2^2 s^4) - c2 s^2)^(1/2)
    with s the speed; rotation invariant and strictly positive.
    """
    v = np.asarray(velocity, dtype=float)
    s2 = np.sum(v * v, axis=-1)
    s3 = s2 ** 1.5
    induced = np.sqrt(np.sqrt(1.0 + constants.c2**2 * s2**2) - constants.c2 * s2)
    power = constants.p_blade * (1.0 + constants.c0 * s2) + constants.c1 * s3
    power = power + constants.p_induced * induced
    return float(power) if np.isscalar(s2) or power.ndim == 0 else power


def hover_power(constants: PropulsionConstants) -> float:
    return constants.p_blade + constants.p_induced


def min_power_speed(constants: PropulsionConstants, v_max: float, tol: float = 1e-6) -> float:
    """Speed minimizing propulsion power on [0, v_max], by golden-section search."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0

    def power_at(s):
        return propulsion_power([s, 0.0, 0.0], constants)

    a, b = 0.0, float(v_max)
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = power_at(c), power_at(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = power_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = power_at(d)
    return 0.5 * (a + b)


def trajectory_energy(traj: Trajectory, constants: PropulsionConstants) -> float:
    """Propulsion energy over the mission, dt * sum of per-slot powers."""
    return float(traj.dt * np.sum(propulsion_power(traj.velocities, constants)))


@dataclass(frozen=True)
class Violation:
    constraint: str
    slot: int  # 1-based; 0 for whole-trajectory violations
    magnitude: float

    def __str__(self):
        return f"{self.constraint} at slot {self.slot} (by {self.magnitude:.3e})"


def check_flight_constraints(
    traj: Trajectory,
    limits: FlightLimits,
    center,
    permitted_radius: float,
    altitude: float,
    anchor=None,
) -> list[Violation]:
    """All single-UAV flight violations: periodicity, recursion, permitted
    zone, altitude, speed and acceleration.  Empty list means feasible.

    ``anchor``, when given, additionally pins the start/end position to the
    predetermined station.
    """
    out = []
    p, v, dt = traj.positions, traj.velocities, traj.dt
    n_slots = traj.slots

    alt_err = np.abs(p[:, 2] - altitude)
    for n in np.nonzero(alt_err > RECURSION_TOL)[0]:
        out.append(Violation("altitude", int(n) + 1, float(alt_err[n])))

    gap = float(np.linalg.norm(p[-1] - p[0]))
    if gap > RECURSION_TOL:
        out.append(Violation("periodicity", n_slots, gap))
    if anchor is not None:
        start_gap = float(np.linalg.norm(p[0] - np.asarray(anchor, dtype=float)))
        if start_gap > RECURSION_TOL:
            out.append(Violation("station-anchor", 1, start_gap))

    resid = np.linalg.norm(p[1:] - p[:-1] - v[:-1] * dt, axis=1)
    for n in np.nonzero(resid > RECURSION_TOL)[0]:
        out.append(Violation("position-recursion", int(n) + 1, float(resid[n])))

    zone_limit = np.sqrt(permitted_radius**2 + altitude**2)
    dist = np.linalg.norm(p - np.asarray(center, dtype=float), axis=1)
    for n in np.nonzero(dist > zone_limit + LIMIT_TOL)[0]:
        out.append(Violation("permitted-zone", int(n) + 1, float(dist[n] - zone_limit)))

    speed = traj.speeds()
    for n in np.nonzero(speed > limits.v_max + LIMIT_TOL)[0]:
        out.append(Violation("speed-limit", int(n) + 1, float(speed[n] - limits.v_max)))

    accel = np.linalg.norm(v[1:] - v[:-1], axis=1)
    for n in np.nonzero(accel > limits.a_max + LIMIT_TOL)[0]:
        out.append(Violation("acceleration-limit", int(n) + 1, float(accel[n] - limits.a_max)))

    return out


def check_separation(traj_r: Trajectory, traj_j: Trajectory, safety_distance: float) -> list[Violation]:
    """Slots where the two UAVs come closer than the safety distance."""
    if traj_r.slots != traj_j.slots:
        raise ShapeError(f"trajectories differ in length: {traj_r.slots} vs {traj_j.slots}")
    dist = np.linalg.norm(traj_r.positions - traj_j.positions, axis=1)
    return [
        Violation("safety-separation", int(n) + 1, float(safety_distance - dist[n]))
        for n in np.nonzero(dist < safety_distance - LIMIT_TOL)[0]
    ]


def trajectory_csv_rows(traj: Trajectory, constants: PropulsionConstants):
    """Rows (slot, x, y, z, vx, vy, vz, power_watts) for CSV export."""
    power = propulsion_power(traj.velocities, constants)
    rows = []
    for n in range(traj.slots):
        x, y, z = traj.positions[n]
        vx, vy, vz = traj.velocities[n]
        rows.append((n + 1, x, y, z, vx, vy, vz, float(power[n])))
    return rows
