"""THz channel model: molecular absorption, direct and cascaded link gains,
IRS array phase responses and beamforming application.

All distances are in meters, frequencies in Hz, pressure in Pa, temperature
in degrees Celsius and relative humidity in percent.  Channel amplitudes are
complex; power gains are squared magnitudes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import SPEED_OF_LIGHT
from .errors import GeometryError, ParameterError

# Validity window of the absorption fit (Hz).
ABSORPTION_WINDOW = (275.0e9, 400.0e9)

# Temperature below which the saturation-pressure exponent diverges (deg C).
_MIN_TEMPERATURE_C = -240.97


def mixing_ratio(pressure_pa: float, humidity_percent: float, temperature_c: float) -> float:
    """Volume mixing ratio of water vapor from pressure, humidity and temperature."""
    if pressure_pa <= 0.0:
        raise ParameterError(f"pressure must be positive, got {pressure_pa}")
    if not 0.0 <= humidity_percent <= 100.0:
        raise ParameterError(f"relative humidity must be in [0, 100] %, got {humidity_percent}")
    if temperature_c <= _MIN_TEMPERATURE_C:
        raise ParameterError(f"temperature must exceed {_MIN_TEMPERATURE_C} C, got {temperature_c}")
    saturation = 6.1121 * (3.46e-8 * pressure_pa + 1.0007)
    exponent = np.exp(17.502 * temperature_c / (240.97 + temperature_c))
    return saturation * (humidity_percent / pressure_pa) * exponent


def absorption_coeff(f_c_hz: float, mu: float, warn: bool = True) -> float:
    """Molecular absorption coefficient in 1/m.

    Two water-vapor resonance terms plus a cubic frequency tail; power loss
    over a distance d is exp(-kappa * d).  The fit targets carriers between
    275 and 400 GHz; outside that window a warning is raised but the value is
    still returned.
    """
    if warn and not ABSORPTION_WINDOW[0] <= f_c_hz <= ABSORPTION_WINDOW[1]:
        warnings.warn(
            f"carrier {f_c_hz / 1e9:.1f} GHz outside the 275-400 GHz absorption fit window",
            stacklevel=2,
        )
    g = f_c_hz / (100.0 * SPEED_OF_LIGHT)
    resonance_a = (
        0.2205 * mu * (0.133 * mu + 0.0294)
        / ((0.4093 * mu + 0.0925) ** 2 + (g - 10.835) ** 2)
    )
    resonance_b = (
        2.014 * mu * (0.1702 * mu + 0.0303)
        / ((0.537 * mu + 0.0956) ** 2 + (g - 12.664) ** 2)
    )
    tail = (
        5.54e-37 * f_c_hz**3
        - 3.94e-25 * f_c_hz**2
        + 9.06e-14 * f_c_hz
        - 6.36e-3
    )
    return resonance_a + resonance_b + tail


def calibrate_humidity(
    target_kappa: float,
    f_c_hz: float,
    pressure_pa: float,
    temperature_c: float,
    tol: float = 1e-14,
) -> float:
    """Relative humidity (percent) such that kappa(f_c) hits ``target_kappa``.

    kappa is strictly increasing in humidity at fixed pressure/temperature, so
    a bisection over [0, 100] % suffices.  Raises if the target is outside the
    achievable range.
    """
    lo, hi = 0.0, 100.0
    k_lo = absorption_coeff(f_c_hz, mixing_ratio(pressure_pa, lo, temperature_c), warn=False)
    k_hi = absorption_coeff(f_c_hz, mixing_ratio(pressure_pa, hi, temperature_c), warn=False)
    if not k_lo <= target_kappa <= k_hi:
        raise ParameterError(
            f"target kappa {target_kappa:.4e} outside achievable range "
            f"[{k_lo:.4e}, {k_hi:.4e}] at {f_c_hz / 1e9:.1f} GHz"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        k_mid = absorption_coeff(f_c_hz, mixing_ratio(pressure_pa, mid, temperature_c), warn=False)
        if k_mid < target_kappa:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class AtmosphereParams:
    """Carrier and atmospheric state with the derived absorption coefficient."""

    f_c_hz: float
    pressure_pa: float = 101325.0
    temperature_c: float = 22.85
    humidity_percent: float = 50.0
    mu: float = field(init=False)
    kappa: float = field(init=False)
    in_window: bool = field(init=False)

    def __post_init__(self):
        mu = mixing_ratio(self.pressure_pa, self.humidity_percent, self.temperature_c)
        in_window = ABSORPTION_WINDOW[0] <= self.f_c_hz <= ABSORPTION_WINDOW[1]
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", absorption_coeff(self.f_c_hz, mu))
        object.__setattr__(self, "in_window", in_window)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_hz


def direct_gain(q_tx, q_rx, atmos: AtmosphereParams, rho: float = 2.0) -> complex:
    """Complex amplitude of a single THz hop.

    Amplitude C/(4 pi f_c d^(rho/2)) with plane-wave phase -2 pi d / lambda
    and absorption factor exp(-kappa d / 2).
    """
    q_tx = np.asarray(q_tx, dtype=float)
    q_rx = np.asarray(q_rx, dtype=float)
    d = float(np.linalg.norm(q_tx - q_rx))
    if d == 0.0:
        raise GeometryError("direct link endpoints coincide")
    lam = atmos.wavelength
    amp = SPEED_OF_LIGHT / (4.0 * np.pi * atmos.f_c_hz * d ** (rho / 2.0))
    return amp * np.exp(-1j * 2.0 * np.pi * d / lam) * np.exp(-atmos.kappa * d / 2.0)


def cascaded_base_gain(q_r, q_a, q_k, atmos: AtmosphereParams, rho: float = 2.0) -> complex:
    """Complex amplitude of the reflected two-hop path, per IRS element.

    Amplitude C/(8 pi sqrt(pi) f_c d1^(rho/2) d2^(rho/2)) with total phase and
    absorption accumulated over both hops.
    """
    q_r = np.asarray(q_r, dtype=float)
    d1 = float(np.linalg.norm(q_r - np.asarray(q_a, dtype=float)))
    d2 = float(np.linalg.norm(q_r - np.asarray(q_k, dtype=float)))
    if d1 == 0.0 or d2 == 0.0:
        raise GeometryError("reflector coincides with an endpoint")
    lam = atmos.wavelength
    amp = SPEED_OF_LIGHT / (
        8.0 * np.pi * np.sqrt(np.pi) * atmos.f_c_hz * d1 ** (rho / 2.0) * d2 ** (rho / 2.0)
    )
    total = d1 + d2
    return amp * np.exp(-1j * 2.0 * np.pi * total / lam) * np.exp(-atmos.kappa * total / 2.0)


@dataclass(frozen=True)
class IrsGeometry:
    """Uniform planar array parallel to the ground, element 1 at the UAV position."""

    l_x: int
    l_y: int
    delta_x: float
    delta_y: float

    def __post_init__(self):
        if self.l_x < 1 or self.l_y < 1:
            raise ParameterError("IRS must have at least one element per axis")
        if self.delta_x <= 0.0 or self.delta_y <= 0.0:
            raise ParameterError("element separations must be positive")

    @property
    def size(self) -> int:
        return self.l_x * self.l_y

    def offsets(self) -> np.ndarray:
        """(L, 3) element offsets; row (lx-1)*l_y + (ly-1) holds element (lx, ly)."""
        ix, iy = np.meshgrid(np.arange(self.l_x), np.arange(self.l_y), indexing="ij")
        out = np.zeros((self.size, 3))
        out[:, 0] = ix.ravel() * self.delta_x
        out[:, 1] = iy.ravel() * self.delta_y
        return out


@dataclass(frozen=True)
class ArrayResponse:
    """Per-element incident/departing phase lags and unit-modulus steering vectors."""

    theta: np.ndarray  # incident phase lags, AP -> IRS
    beta: np.ndarray  # departing phase lags, IRS -> UE
    e_a: np.ndarray  # exp(-j theta)
    e_k: np.ndarray  # exp(-j beta)
    offsets: np.ndarray


def array_responses(q_r, q_a, q_k, irs: IrsGeometry, wavelength: float) -> ArrayResponse:
    """Array phase responses for the incoming and reflected beams.

    Phase lags are the projections of the element offsets on the incident and
    departing unit direction vectors, scaled by 2 pi / lambda; element 1 sits
    at the UAV position and has zero lag.
    """
    q_r = np.asarray(q_r, dtype=float)
    v_in = q_r - np.asarray(q_a, dtype=float)
    v_out = np.asarray(q_k, dtype=float) - q_r
    d_in = float(np.linalg.norm(v_in))
    d_out = float(np.linalg.norm(v_out))
    if d_in == 0.0 or d_out == 0.0:
        raise GeometryError("array response undefined for coincident endpoints")
    offs = irs.offsets()
    theta = 2.0 * np.pi * (offs @ v_in) / (wavelength * d_in)
    beta = 2.0 * np.pi * (offs @ v_out) / (wavelength * d_out)
    return ArrayResponse(
        theta=theta,
        beta=beta,
        e_a=np.exp(-1j * theta),
        e_k=np.exp(-1j * beta),
        offsets=offs,
    )


def combining_factor(response: ArrayResponse, coefficients: np.ndarray) -> complex:
    """Coherent sum e_k^H diag(coefficients) e_a = sum_l c_l exp(j(beta_l - theta_l))."""
    coefficients = np.asarray(coefficients, dtype=complex)
    return complex(np.sum(coefficients * np.exp(1j * (response.beta - response.theta))))


def effective_gain(response: ArrayResponse, coefficients: np.ndarray, h_tilde: complex) -> complex:
    """Cascaded channel amplitude through the IRS for given reflection coefficients.

    Coefficient moduli must lie in the unit disk (reflection cannot amplify);
    |result| is bounded by L * |h_tilde|.
    """
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.shape != response.theta.shape:
        raise ParameterError(
            f"expected {response.theta.shape[0]} coefficients, got {coefficients.shape}"
        )
    if np.any(np.abs(coefficients) > 1.0 + 1e-12):
        raise ParameterError("reflection amplitudes must lie in [0, 1]")
    return combining_factor(response, coefficients) * h_tilde


def absorption_table(
    f_min_hz: float,
    f_max_hz: float,
    points: int,
    pressure_pa: float,
    temperature_c: float,
    humidity_percent: float,
    distance_m: float,
) -> list[tuple[float, float, float]]:
    """Rows (f_GHz, kappa_per_m, absorption_loss_dB_at_distance) for export."""
    mu = mixing_ratio(pressure_pa, humidity_percent, temperature_c)
    rows = []
    for f in np.linspace(f_min_hz, f_max_hz, points):
        kappa = absorption_coeff(float(f), mu, warn=False)
        loss_db = 10.0 * kappa * distance_m * np.log10(np.e)
        rows.append((float(f) / 1e9, float(kappa), float(loss_db)))
    return rows
