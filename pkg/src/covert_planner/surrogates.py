"""Convexification building blocks shared by the block-coordinate updates.

Each bound is tight at its expansion point and globally valid on its stated
domain; the optimization loops rely on both properties for monotone ascent.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def fp_gamma_update(f_lb, g_up):
    """Optimal multipliers of the quadratic fractional transform.

    gamma = sqrt(f)/g per term; at these values 2*gamma*sqrt(f) - gamma^2*g
    recovers f/g exactly, and for any other gamma the surrogate is below the
    ratio.
    """
    f_lb = np.asarray(f_lb, dtype=float)
    g_up = np.asarray(g_up, dtype=float)
    if np.any(f_lb < 0.0):
        raise ParameterError("numerators must be nonnegative")
    if np.any(g_up <= 0.0):
        raise ParameterError("denominators must be positive")
    out = np.sqrt(f_lb) / g_up
    return float(out) if out.ndim == 0 else out


def quadratic_transform_value(gamma, f, g):
    """Surrogate 2*gamma*sqrt(f) - gamma^2*g of the ratio f/g."""
    gamma, f, g = (np.asarray(v, dtype=float) for v in (gamma, f, g))
    out = 2.0 * gamma * np.sqrt(f) - gamma**2 * g
    return float(out) if out.ndim == 0 else out


def upsilon(x, y, a, b, c):
    """log(1 + a exp(-b (x+y)) / (x^c y^c)) on x, y > 0; jointly convex for
    a, b, c >= 0."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise ParameterError("upsilon requires positive distances")
    out = np.log1p(a * np.exp(-b * (x + y)) / (x**c * y**c))
    return float(out) if out.ndim == 0 else out


def upsilon_gradient(x, y, a, b, c):
    """Partial derivatives of upsilon; both are -a(c + b t)/(t (a + x^c y^c e^{b(x+y)}))."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    denom = a + x**c * y**c * np.exp(b * (x + y))
    gx = -a * (c + b * x) / (x * denom)
    gy = -a * (c + b * y) / (y * denom)
    return gx, gy


def upsilon_lower_bound(x, y, x_lo, y_lo, a, b, c):
    """First-order expansion of upsilon at (x_lo, y_lo): a global lower bound
    (upsilon is convex), exact at the expansion point."""
    if a < 0.0 or b < 0.0 or c < 0.0:
        raise ParameterError("upsilon constants must be nonnegative")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x <= 0.0) or np.any(y <= 0.0) or np.any(np.asarray(x_lo) <= 0.0) or np.any(np.asarray(y_lo) <= 0.0):
        raise ParameterError("upsilon requires positive distances")
    base = upsilon(x_lo, y_lo, a, b, c)
    gx, gy = upsilon_gradient(x_lo, y_lo, a, b, c)
    out = base + gx * (x - x_lo) + gy * (y - y_lo)
    return float(out) if np.ndim(out) == 0 else out


def bilinear_bounds(x, y, x_lo, y_lo):
    """Concave lower and convex upper bounds of the product x*y, both tight at
    the expansion point, from the difference-of-squares split 4xy = (x+y)^2 - (x-y)^2."""
    x, y, x_lo, y_lo = (np.asarray(v, dtype=float) for v in (x, y, x_lo, y_lo))
    s_lo, d_lo = x_lo + y_lo, x_lo - y_lo
    lower = 0.25 * (-(s_lo**2) + 2.0 * s_lo * (x + y) - (x - y) ** 2)
    upper = 0.25 * ((x + y) ** 2 + d_lo**2 - 2.0 * d_lo * (x - y))
    if np.ndim(lower) == 0:
        return float(lower), float(upper)
    return lower, upper


def log_rate_linearization(p_lo, coef):
    """Slope/intercept of log(1 + coef * p) expanded at p_lo (affine upper bound).

    Returns (const, slope): log(1 + coef p) <= const + slope * p.
    """
    p_lo = np.asarray(p_lo, dtype=float)
    denom = 1.0 + coef * p_lo
    slope = coef / denom
    const = np.log(denom) - slope * p_lo
    return const, slope


def log_linearization(p_lo):
    """Slope/intercept of log(p) expanded at p_lo > 0 (affine upper bound)."""
    p_lo = np.asarray(p_lo, dtype=float)
    if np.any(p_lo <= 0.0):
        raise ParameterError("log expansion point must be positive")
    return np.log(p_lo) - 1.0, 1.0 / p_lo


def jamming_rate_value(w, a, b, c):
    """a * log(1 + b / (c w + 1)): the per-slot rate as a function of the
    jammer-to-user distance gain w; convex and decreasing in w."""
    w = np.asarray(w, dtype=float)
    out = a * np.log1p(b / (c * w + 1.0))
    return float(out) if out.ndim == 0 else out


def jamming_rate_lower_bound(w, w_lo, a, b, c):
    """First-order expansion of the jamming-limited rate at w_lo: a global
    lower bound, exact at the expansion point."""
    w, w_lo = np.asarray(w, dtype=float), np.asarray(w_lo, dtype=float)
    base = jamming_rate_value(w_lo, a, b, c)
    slope = -a * b * c / ((c * w_lo + 1.0) * (c * w_lo + b + 1.0))
    out = base + slope * (w - w_lo)
    return (float(out) if np.ndim(out) == 0 else out), slope


def induced_power_slack(speed_sq, c2):
    """Exact value of the propulsion slack t with t^2 = sqrt(1 + c2^2 s^4) - c2 s^2.

    Satisfies t^2 + 2 c2 s^2 = 1/t^2, the identity used by the convexified
    trajectory constraints.
    """
    speed_sq = np.asarray(speed_sq, dtype=float)
    out = np.sqrt(np.sqrt(1.0 + (c2 * speed_sq) ** 2) - c2 * speed_sq)
    return float(out) if out.ndim == 0 else out


def jammer_covert_radius(limit: float, rho: float, kappa: float, hi: float = 1e7) -> float:
    """Largest distance d with d^rho * exp(kappa d) <= limit.

    The left side is strictly increasing, so the jammer-to-warden covertness
    condition is exactly a ball constraint of this radius; solved by bisection.
    """
    if limit <= 0.0:
        return 0.0

    def h(d):
        return rho * np.log(d) + kappa * d - np.log(limit)

    if h(hi) < 0.0:
        return hi
    lo_d, hi_d = 1e-12, hi
    for _ in range(200):
        mid = 0.5 * (lo_d + hi_d)
        if h(mid) <= 0.0:
            lo_d = mid
        else:
            hi_d = mid
        if hi_d - lo_d <= 1e-9 * max(1.0, lo_d):
            break
    return lo_d
